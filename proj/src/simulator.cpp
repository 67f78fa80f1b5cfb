#include "mfhawkes/simulator.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "mfhawkes/errors.hpp"
#include "mfhawkes/meanfield.hpp"
#include "mfhawkes/parallel.hpp"
#include "mfhawkes/rng.hpp"

namespace mfhawkes {

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGlNodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                         0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                           0.4786286704993665, 0.2369268850561891};

// Excitation S(t) = N^{-1} sum_{events tau < t} h(t - tau) for the running system.
class Excitation {
public:
    Excitation(const KernelSpec& kernel, std::size_t n)
        : kernel_(kernel), inv_n_(1.0 / static_cast<double>(n)), h_prime_max_(kernel.max_abs_derivative()) {
        if (const auto* e = std::get_if<ExponentialKernel>(&kernel.family())) {
            exponential_ = true;
            rate_ = e->rate;
        } else {
            const auto& knots = std::get<PiecewiseLinearKernel>(kernel.family()).knots;
            support_end_ = knots.back().first;
            tail_value_ = knots.back().second;
        }
    }

    // Valid for t no earlier than the last added event.
    double at(double t) const noexcept {
        if (exponential_) {
            return s_ref_ * std::exp(-rate_ * (t - t_ref_));
        }
        double s = frozen_;
        for (double tau : buffer_) {
            s += kernel_.value(t - tau);
        }
        return s * inv_n_;
    }

    // sup over u in [t, t + delta] of |S(u) - S(t)|.
    double drift_bound(double t, double delta) const noexcept {
        if (exponential_) {
            return std::abs(at(t)) * -std::expm1(-rate_ * delta);
        }
        return static_cast<double>(buffer_.size()) * inv_n_ * h_prime_max_ * delta;
    }

    void add_event(double t) {
        if (exponential_) {
            s_ref_ = at(t) + kernel_.value(0.0) * inv_n_;
            t_ref_ = t;
        } else {
            buffer_.push_back(t);
        }
    }

    // Moves events whose lag exceeds the last knot into the constant part.
    void prune(double t) {
        if (exponential_) {
            return;
        }
        while (!buffer_.empty() && t - buffer_.front() >= support_end_) {
            frozen_ += tail_value_;
            buffer_.pop_front();
        }
    }

    // \int_{t0}^{t1} phi(S(u)) du with no events in (t0, t1).
    double integrate_rate(const RateSpec& phi, double t0, double t1, double max_panel) const {
        const double len = t1 - t0;
        if (!(len > 0.0)) {
            return 0.0;
        }
        if (const auto* c = std::get_if<ConstantRate>(&phi.family())) {
            return c->c * len;
        }
        if (exponential_) {
            if (const auto* a = std::get_if<AffineClippedRate>(&phi.family());
                a != nullptr && a->b >= 0.0 && a->a >= a->floor && at(t0) >= 0.0) {
                const double s0 = at(t0);
                const double decay = rate_ > 0.0 ? -std::expm1(-rate_ * len) / rate_ : len;
                return a->a * len + a->b * s0 * decay;
            }
        }
        const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil(len / max_panel)));
        const double w = len / static_cast<double>(panels);
        double total = 0.0;
        for (std::size_t p = 0; p < panels; ++p) {
            const double mid = t0 + (static_cast<double>(p) + 0.5) * w;
            double s = 0.0;
            for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
                s += kGlWeights[q] * phi(at(mid + 0.5 * w * kGlNodes[q]));
            }
            total += 0.5 * w * s;
        }
        return total;
    }

private:
    const KernelSpec& kernel_;
    double inv_n_;
    double h_prime_max_;
    bool exponential_ = false;
    double rate_ = 0.0;
    double s_ref_ = 0.0;
    double t_ref_ = 0.0;
    std::deque<double> buffer_;
    double frozen_ = 0.0;
    double support_end_ = 0.0;
    double tail_value_ = 0.0;
};

double quadrature_panel(double horizon, const TiltField* tilt) {
    const double base = horizon / 1000.0;
    return tilt != nullptr ? std::min(base, tilt->grid().dt()) : base;
}

void check_config(const SimConfig& cfg) {
    if (cfg.N == 0) {
        throw DomainError("N must be at least 1");
    }
    if (cfg.N > std::numeric_limits<std::uint32_t>::max()) {
        throw DomainError("N exceeds the supported component count");
    }
    if (!(cfg.safety >= 1.0) || !std::isfinite(cfg.safety)) {
        throw DomainError("majorant safety factor must be finite and >= 1");
    }
    require_valid(cfg.model);
}

void check_tilt(const TiltField& tilt, double horizon) {
    if (!tilt.all_finite()) {
        throw DomainError("tilt field must be finite");
    }
    if (std::abs(tilt.grid().horizon() - horizon) > 1e-9 * horizon) {
        throw DomainError("tilt grid horizon does not match the model horizon");
    }
}

// Components grouped by their current count (levels 0..n_max, then the tail),
// so a tilted jump can pick a component with probability proportional to e^{v}.
class StateBuckets {
public:
    StateBuckets(std::size_t n, std::size_t levels) : buckets_(levels + 1), slot_(n) {
        buckets_[0].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            buckets_[0][i] = static_cast<std::uint32_t>(i);
            slot_[i] = i;
        }
    }

    std::size_t bucket_count() const noexcept { return buckets_.size(); }
    std::size_t size(std::size_t b) const noexcept { return buckets_[b].size(); }
    std::uint32_t member(std::size_t b, std::size_t j) const noexcept { return buckets_[b][j]; }

    void move(std::uint32_t i, std::size_t from, std::size_t to) {
        auto& src = buckets_[from];
        const std::size_t s = slot_[i];
        src[s] = src.back();
        slot_[src[s]] = s;
        src.pop_back();
        slot_[i] = buckets_[to].size();
        buckets_[to].push_back(i);
    }

private:
    std::vector<std::vector<std::uint32_t>> buckets_;
    std::vector<std::size_t> slot_;
};

SimResult run_thinning(const SimConfig& cfg, const TiltField* tilt, Rng& rng) {
    const ModelSpec& model = cfg.model;
    const RateSpec& phi = model.rate;
    const double horizon = model.horizon();
    const std::size_t n = cfg.N;
    const double alpha = phi.lipschitz();
    const double panel = quadrature_panel(horizon, tilt);

    SimResult result;
    result.paths = EventPaths(n, horizon, cfg.seed);
    Excitation excitation(model.kernel, n);
    std::vector<std::uint32_t> count(n, 0);

    // Tilt bookkeeping: per-bucket e^{v} and expm1(v) on the current cell,
    // and W = sum_i expm1(v(Z^i)), so the total tilted weight is N + W.
    const std::size_t levels = tilt != nullptr ? tilt->levels() : 0;
    StateBuckets buckets(tilt != nullptr ? n : 0, levels);
    std::vector<double> ev(levels + 1, 1.0);
    std::vector<double> em1(levels + 1, 0.0);
    double w_sum = 0.0;
    std::size_t cell = 0;
    double next_boundary = horizon;
    CompensatedSum log_rn;

    auto load_cell = [&](std::size_t k) {
        w_sum = 0.0;
        for (std::size_t b = 0; b <= levels; ++b) {
            const double v = b < levels ? (*tilt)(k, b) : tilt->tail();
            ev[b] = std::exp(v);
            em1[b] = std::expm1(v);
            w_sum += static_cast<double>(buckets.size(b)) * em1[b];
        }
        next_boundary = k + 1 < tilt->cells() ? tilt->grid().time(k + 1) : horizon;
    };
    if (tilt != nullptr) {
        load_cell(0);
    }

    double t = 0.0;
    while (t < horizon) {
        excitation.prune(t);
        const double weight = static_cast<double>(n) + w_sum;
        const double phi_now = phi(excitation.at(t));
        const double segment_end = std::min(next_boundary, horizon);
        double window_end = segment_end;
        const double lookahead = 4.0 / (phi_now * weight);
        if (t + lookahead < segment_end) {
            window_end = t + lookahead;
        }
        const double bound = phi_now + alpha * excitation.drift_bound(t, window_end - t);
        const double majorant = cfg.safety * bound * weight;
        const double candidate = t + rng.exponential(majorant);

        if (candidate >= window_end) {
            if (w_sum != 0.0) {
                log_rn.add(w_sum * excitation.integrate_rate(phi, t, window_end, panel));
            }
            t = window_end;
            if (tilt != nullptr && t >= next_boundary && cell + 1 < tilt->cells()) {
                load_cell(++cell);
            }
            continue;
        }

        if (++result.stats.candidates > cfg.max_candidates) {
            std::ostringstream os;
            os << "thinning exceeded " << cfg.max_candidates << " candidate points before t = " << candidate
               << "; explosion suspected";
            throw ExplosionError(os.str());
        }
        if (w_sum != 0.0) {
            log_rn.add(w_sum * excitation.integrate_rate(phi, t, candidate, panel));
        }
        t = candidate;
        const double intensity = phi(excitation.at(t)) * weight;
        if (intensity > majorant * (1.0 + 1e-12)) {
            ++result.stats.majorant_violations;
            assert(false && "thinning majorant violated");
        }
        if (rng.uniform() * majorant >= intensity) {
            continue;
        }

        std::uint32_t i = 0;
        if (tilt == nullptr) {
            i = static_cast<std::uint32_t>(rng.below(n));
        } else {
            double total = 0.0;
            for (std::size_t b = 0; b <= levels; ++b) {
                total += static_cast<double>(buckets.size(b)) * ev[b];
            }
            const double u = rng.uniform() * total;
            double acc = 0.0;
            std::size_t chosen = levels + 1;
            std::size_t last_nonempty = 0;
            for (std::size_t b = 0; b <= levels; ++b) {
                if (buckets.size(b) == 0) {
                    continue;
                }
                last_nonempty = b;
                acc += static_cast<double>(buckets.size(b)) * ev[b];
                if (u < acc) {
                    chosen = b;
                    break;
                }
            }
            if (chosen > levels) {
                chosen = last_nonempty;
            }
            i = buckets.member(chosen, rng.below(buckets.size(chosen)));
            const std::size_t to = std::min<std::size_t>(chosen + 1, levels);
            log_rn.add(-(chosen < levels ? (*tilt)(cell, chosen) : tilt->tail()));
            if (to != chosen) {
                buckets.move(i, chosen, to);
                w_sum += em1[to] - em1[chosen];
            }
        }
        ++count[i];
        result.paths.times[i].push_back(t);
        excitation.add_event(t);
        ++result.stats.accepted;
    }
    result.log_rn = log_rn.value();
    return result;
}

}  // namespace

EventPaths simulate(const SimConfig& cfg) {
    return simulate_replicate(cfg, nullptr, 0).paths;
}

SimResult simulate_tilted(const SimConfig& cfg, const TiltField& tilt) {
    return simulate_replicate(cfg, &tilt, 0);
}

SimResult simulate_replicate(const SimConfig& cfg, const TiltField* tilt, std::uint64_t replicate) {
    check_config(cfg);
    if (tilt != nullptr) {
        check_tilt(*tilt, cfg.model.horizon());
    }
    Rng rng = Rng::stream(cfg.seed, replicate);
    return run_thinning(cfg, tilt, rng);
}

std::vector<double> simulate_mckean_vlasov_tilted(const ModelSpec& model, const TiltField& tilt,
                                                  const MeanPath& lawbar_path, std::uint64_t seed,
                                                  std::uint64_t replicate) {
    require_valid(model);
    check_tilt(tilt, model.horizon());
    const TimeGrid& lg = lawbar_path.grid;
    if (std::abs(lg.horizon() - model.horizon()) > 1e-9 * model.horizon()) {
        throw DomainError("lawbar grid horizon does not match the model horizon");
    }
    for (std::size_t k = 1; k < lawbar_path.values.size(); ++k) {
        if (lawbar_path.values[k] < lawbar_path.values[k - 1]) {
            throw DomainError("lawbar must be nondecreasing");
        }
    }
    const std::vector<double> lambda = intensity_path(model, lawbar_path);
    const TimeGrid& tg = tilt.grid();
    const double horizon = model.horizon();

    Rng rng = Rng::stream(seed, replicate);
    std::vector<double> jumps;
    std::size_t state = 0;
    double budget = rng.exponential(1.0);  // remaining unit-rate hazard until the next jump
    double t = 0.0;
    std::size_t lk = 0;  // lawbar cell
    std::size_t tk = 0;  // tilt cell
    while (t < horizon) {
        const double l_end = lk + 1 < lg.points() ? lg.time(lk + 1) : horizon;
        const double t_end = tk + 1 < tg.points() ? tg.time(tk + 1) : horizon;
        const double b = std::min({l_end, t_end, horizon});
        // Lambda is linear on the lawbar cell.
        const double slope = (lambda[lk + 1] - lambda[lk]) / lg.dt();
        const double lam_t = lambda[lk] + slope * (t - lg.time(lk));
        const double lam_b = lambda[lk] + slope * (b - lg.time(lk));
        const double ev = std::exp(tilt(tk, state));
        const double hazard = ev * 0.5 * (lam_t + lam_b) * (b - t);
        if (budget < hazard) {
            const double e = budget / ev;
            const double s = 2.0 * e / (lam_t + std::sqrt(std::max(0.0, lam_t * lam_t + 2.0 * slope * e)));
            t = std::min(t + s, b);
            jumps.push_back(t);
            ++state;
            budget = rng.exponential(1.0);
            continue;
        }
        budget -= hazard;
        t = b;
        if (t >= l_end && lk + 1 < lg.steps()) {
            ++lk;
        }
        if (t >= t_end && tk + 1 < tg.steps()) {
            ++tk;
        }
    }
    return jumps;
}

MeanPath mean_process(const EventPaths& paths, const TimeGrid& grid) {
    MeanPath out{grid, std::vector<double>(grid.points(), 0.0)};
    const auto events = paths.merged();
    const double inv_n = paths.N > 0 ? 1.0 / static_cast<double>(paths.N) : 0.0;
    std::size_t seen = 0;
    for (std::size_t k = 0; k < grid.points(); ++k) {
        const double tk = grid.time(k);
        while (seen < events.size() && events[seen].time <= tk) {
            ++seen;
        }
        out.values[k] = static_cast<double>(seen) * inv_n;
    }
    // Events at T beyond the last rounded grid point still count in the final value.
    out.values.back() = static_cast<double>(events.size()) * inv_n;
    return out;
}

MeasureFlow empirical_measure(const EventPaths& paths, const TimeGrid& grid, std::size_t n_max) {
    const std::size_t need = paths.max_count();
    if (need > n_max) {
        std::ostringstream os;
        os << "component count " << need << " exceeds n_max = " << n_max;
        throw OverflowError(need, os.str());
    }
    MeasureFlow flow(grid, n_max);
    const auto events = paths.merged();
    std::vector<std::size_t> count(paths.N, 0);
    std::vector<std::size_t> hist(n_max + 1, 0);
    hist[0] = paths.N;
    const double inv_n = 1.0 / static_cast<double>(paths.N);
    std::size_t seen = 0;
    for (std::size_t k = 0; k < grid.points(); ++k) {
        const double tk = grid.time(k);
        while (seen < events.size() && (events[seen].time <= tk || k + 1 == grid.points())) {
            const auto c = events[seen].component;
            --hist[count[c]];
            ++hist[++count[c]];
            ++seen;
        }
        auto row = flow.row(k);
        for (std::size_t x = 0; x <= n_max; ++x) {
            row[x] = static_cast<double>(hist[x]) * inv_n;
        }
    }
    return flow;
}

double exp_martingale_log_weight(const EventPaths& paths, const ModelSpec& model, const TiltField& psi) {
    check_tilt(psi, model.horizon());
    const double horizon = model.horizon();
    const RateSpec& phi = model.rate;
    const TimeGrid& grid = psi.grid();
    const std::size_t levels = psi.levels();
    const double panel = quadrature_panel(horizon, &psi);

    // Count histogram over 0..n_max, n_max + 1, and "beyond" (psi flat there).
    const std::size_t slots = levels + 2;
    std::vector<std::size_t> hist(slots, 0);
    hist[0] = paths.N;
    std::vector<std::size_t> count(paths.N, 0);
    auto slot_of = [&](std::size_t x) { return std::min(x, slots - 1); };
    auto psi_at = [&](std::size_t cell, std::size_t x) { return psi(cell, x); };
    auto increment = [&](std::size_t cell, std::size_t x) { return psi_at(cell, x + 1) - psi_at(cell, x); };

    std::vector<double> c_em1(slots, 0.0);
    double c_total = 0.0;
    auto load_cell = [&](std::size_t cell) {
        c_total = 0.0;
        for (std::size_t s = 0; s < slots; ++s) {
            c_em1[s] = std::expm1(increment(cell, s));
            c_total += static_cast<double>(hist[s]) * c_em1[s];
        }
    };

    Excitation excitation(model.kernel, paths.N);
    CompensatedSum log_w;
    const auto events = paths.merged();
    std::size_t cell = 0;
    load_cell(0);
    double t = 0.0;
    std::size_t e = 0;
    while (t < horizon) {
        const double boundary = cell + 1 < psi.cells() ? grid.time(cell + 1) : horizon;
        const bool event_next = e < events.size() && events[e].time <= boundary;
        const double b = event_next ? events[e].time : boundary;
        excitation.prune(t);
        if (c_total != 0.0) {
            log_w.add(-c_total * excitation.integrate_rate(phi, t, b, panel));
        }
        t = b;
        if (event_next) {
            const auto c = events[e].component;
            const std::size_t x = count[c];
            log_w.add(increment(cell, x));
            const std::size_t from = slot_of(x);
            const std::size_t to = slot_of(x + 1);
            if (from != to) {
                --hist[from];
                ++hist[to];
                c_total += c_em1[to] - c_em1[from];
            }
            ++count[c];
            excitation.add_event(t);
            ++e;
        } else if (cell + 1 < psi.cells()) {
            load_cell(++cell);
        } else {
            break;
        }
    }
    return log_w.value();
}

}  // namespace mfhawkes
