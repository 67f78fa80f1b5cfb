#include "mfhawkes/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfhawkes/errors.hpp"
#include "mfhawkes/meanfield.hpp"
#include "mfhawkes/parallel.hpp"
#include "mfhawkes/rng.hpp"

namespace mfhawkes {

namespace {

void check_pmf(std::span<const double> p, const char* name) {
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) {
            throw DomainError(std::string(name) + " has a negative or non-finite entry");
        }
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) {
        std::ostringstream os;
        os << name << " sums to " << s << ", not 1";
        throw DomainError(os.str());
    }
}

struct Sample {
    bool hit = false;
    double weight = 0.0;  // e^{logRN}
};

double mean_of(const std::vector<double>& v) {
    CompensatedSum s;
    for (double x : v) {
        s.add(x);
    }
    return s.value() / static_cast<double>(v.size());
}

double std_err_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) {
        return 0.0;
    }
    CompensatedSum s;
    for (double x : v) {
        s.add((x - mean) * (x - mean));
    }
    return std::sqrt(s.value() / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

Estimate summarize(const std::vector<Sample>& samples, Method method) {
    Estimate e;
    e.method = method;
    e.reps = samples.size();
    std::vector<double> values(samples.size()), weights(samples.size());
    double w_sum = 0.0;
    double w_sq = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        values[i] = samples[i].hit ? samples[i].weight : 0.0;
        weights[i] = samples[i].weight;
        if (samples[i].hit) {
            ++e.hits;
            w_sum += samples[i].weight;
            w_sq += samples[i].weight * samples[i].weight;
        }
    }
    e.p_hat = mean_of(values);
    e.weight_mean = mean_of(weights);
    e.weight_std_err = std_err_of(weights, e.weight_mean);
    if (method == Method::Naive) {
        e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(e.reps));
    } else {
        e.std_err = std_err_of(values, e.p_hat);
    }
    e.ess = w_sq > 0.0 ? w_sum * w_sum / w_sq : 0.0;
    if (e.hits == 0) {
        e.flags.emplace_back("zero_hits");
        e.log_p_hat = -std::numeric_limits<double>::infinity();
    } else {
        e.log_p_hat = std::log(e.p_hat);
    }
    if (e.ess < 10.0) {
        e.flags.emplace_back("low_ess");
    }
    return e;
}

std::vector<Sample> run_samples(const EventSpec& spec, const SimConfig& cfg, const TiltField* tilt,
                                std::size_t reps, std::size_t threads) {
    return run_replicates(reps, threads, [&](std::size_t r) {
        const SimResult res = simulate_replicate(cfg, tilt, r);
        return Sample{event_occurs(spec, res.paths), std::exp(res.log_rn)};
    });
}

}  // namespace

double w1_discrete(std::span<const double> nu, std::span<const double> mu) {
    check_pmf(nu, "first pmf");
    check_pmf(mu, "second pmf");
    const std::size_t n = std::max(nu.size(), mu.size());
    double fa = 0.0;
    double fb = 0.0;
    double total = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        fa += x < nu.size() ? nu[x] : 0.0;
        fb += x < mu.size() ? mu[x] : 0.0;
        total += std::abs(fa - fb);
    }
    // The CDFs agree at 1 beyond the common support up to round-off; drop the last term's residue.
    return total - std::abs(fa - fb);
}

double w1_flow_sup(const MeasureFlow& a, const MeasureFlow& b) {
    if (!(a.grid() == b.grid())) {
        throw DomainError("flows are on different time grids");
    }
    double best = 0.0;
    for (std::size_t k = 0; k < a.grid().points(); ++k) {
        best = std::max(best, w1_discrete(a.row(k), b.row(k)));
    }
    return best;
}

bool Estimate::has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

std::string method_name(Method m) {
    return m == Method::Naive ? "naive" : "importance";
}

bool event_occurs(const EventSpec& spec, const EventPaths& paths) {
    if (const auto* me = std::get_if<MeanExceeds>(&spec.kind)) {
        const double need = std::ceil(me->a * static_cast<double>(paths.N) - 1e-9);
        if (need <= 0.0) {
            return true;
        }
        std::size_t count = 0;
        for (const auto& c : paths.times) {
            count += static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), me->at) - c.begin());
        }
        return static_cast<double>(count) >= need;
    }
    const auto& ball = std::get<W1Ball>(spec.kind);
    const std::size_t n_max = std::max(ball.center.n_max(), paths.max_count());
    const MeasureFlow empirical = empirical_measure(paths, ball.center.grid(), n_max);
    return w1_flow_sup(empirical, ball.center) < ball.radius;
}

Estimate estimate_naive(const EventSpec& spec, const SimConfig& cfg, std::size_t reps, std::size_t threads) {
    if (reps < 100) {
        throw DomainError("naive estimation needs at least 100 replicates");
    }
    return summarize(run_samples(spec, cfg, nullptr, reps, threads), Method::Naive);
}

Estimate estimate_importance(const EventSpec& spec, const SimConfig& cfg, const TiltField& tilt,
                             std::size_t reps, std::size_t threads) {
    if (reps < 2) {
        throw DomainError("importance estimation needs at least 2 replicates");
    }
    return summarize(run_samples(spec, cfg, &tilt, reps, threads), Method::Importance);
}

TiltField cramer_tilt(const MeanExceeds& event, const ModelSpec& model) {
    const double horizon = model.horizon();
    if (!(event.at > 0.0) || event.at > horizon * (1.0 + 1e-12)) {
        throw DomainError("event time must lie in (0, T]");
    }
    const TimeGrid grid(horizon, 1);
    if (!(event.a > 0.0)) {
        return TiltField::zero(grid);
    }
    MeanLimitOptions opts;
    opts.dt = std::min(1e-3 * horizon, horizon / 10.0);
    const MeanPath m = solve_mean_limit(model, opts).path;
    return TiltField::constant(grid, std::log(event.a / m.at(event.at)));
}

DecayFit decay_rate_fit(const EventSpec& spec, const ModelSpec& model, const std::vector<std::size_t>& Ns,
                        std::size_t reps, const TiltField* tilt, std::uint64_t seed, std::size_t threads) {
    if (Ns.size() < 3) {
        throw DomainError("decay fit needs at least three values of N");
    }
    TiltField chosen;
    const TiltField* use = tilt;
    if (use == nullptr) {
        if (const auto* me = std::get_if<MeanExceeds>(&spec.kind)) {
            chosen = cramer_tilt(*me, model);
            use = &chosen;
        }
    }

    DecayFit fit;
    std::ostringstream failing;
    for (std::size_t n : Ns) {
        SimConfig cfg{model, n, mix_key(seed, n)};
        DecayPoint p;
        p.N = n;
        p.estimate = use != nullptr ? estimate_importance(spec, cfg, *use, reps, threads)
                                    : estimate_naive(spec, cfg, reps, threads);
        if (p.estimate.hits < 10 || p.estimate.ess < 10.0) {
            failing << " N=" << n << " (hits " << p.estimate.hits << ", ess " << p.estimate.ess << ")";
        }
        p.neg_log_p = -p.estimate.log_p_hat;
        fit.points.push_back(std::move(p));
    }
    if (!failing.str().empty()) {
        throw NumericError("degenerate estimates:" + failing.str());
    }

    const double count = static_cast<double>(fit.points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& p : fit.points) {
        sx += static_cast<double>(p.N);
        sy += p.neg_log_p;
    }
    const double mx = sx / count;
    const double my = sy / count;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& p : fit.points) {
        const double dx = static_cast<double>(p.N) - mx;
        const double dy = p.neg_log_p - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        throw DomainError("decay fit needs distinct values of N");
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (auto& p : fit.points) {
        p.residual = p.neg_log_p - (fit.intercept + fit.slope * static_cast<double>(p.N));
        ss_res += p.residual * p.residual;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

std::vector<LlnRow> lln_study(const ModelSpec& model, const std::vector<std::size_t>& Ns, std::size_t reps,
                              const TimeGrid& grid, std::size_t n_max, std::uint64_t seed, std::size_t threads) {
    if (reps == 0) {
        throw DomainError("LLN study needs at least one replicate");
    }
    if (std::abs(grid.horizon() - model.horizon()) > 1e-9 * model.horizon()) {
        throw DomainError("grid horizon does not match the model horizon");
    }
    for (std::size_t i = 1; i < Ns.size(); ++i) {
        if (Ns[i] <= Ns[i - 1]) {
            throw DomainError("Ns must be strictly increasing");
        }
    }
    MeanLimitOptions opts;
    opts.dt = grid.dt();
    MeanPath m = solve_mean_limit(model, opts).path;
    m.grid = grid;
    const MeasureFlow law = mean_field_law(m, n_max);

    std::vector<LlnRow> rows;
    for (std::size_t n : Ns) {
        const SimConfig cfg{model, n, mix_key(seed, n)};
        const std::vector<double> dist = run_replicates(reps, threads, [&](std::size_t r) {
            const SimResult res = simulate_replicate(cfg, nullptr, r);
            const std::size_t top = std::max(n_max, res.paths.max_count());
            return w1_flow_sup(empirical_measure(res.paths, grid, top), law);
        });
        const double mean = mean_of(dist);
        rows.push_back({n, mean, std_err_of(dist, mean), reps});
    }
    return rows;
}

}  // namespace mfhawkes
