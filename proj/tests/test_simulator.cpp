#include <cmath>
#include <vector>

#include "doctest.h"
#include "mfhawkes/errors.hpp"
#include "mfhawkes/meanfield.hpp"
#include "mfhawkes/simulator.hpp"
#include "oracles.hpp"

using namespace mfhawkes;

namespace {

ModelSpec affine_model(double T = 0.9) {
    return {KernelSpec::exponential(1, 1, T), RateSpec::affine_clipped(1, 1)};
}

std::vector<std::size_t> counts_at_T(const SimConfig& cfg, const TiltField* tilt, std::size_t reps,
                                     std::size_t component = 0) {
    std::vector<std::size_t> out;
    out.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        out.push_back(simulate_replicate(cfg, tilt, r).paths.times[component].size());
    }
    return out;
}

}  // namespace

TEST_CASE("constant rate gives unit Poisson components") {
    SimConfig cfg{{KernelSpec::exponential(1, 1, 5.0), RateSpec::constant(1)}, 1000, 11};
    const auto paths = simulate(cfg);
    const double zbar = static_cast<double>(paths.total_events()) / 1000.0;
    CHECK(std::abs(zbar / 5.0 - 1.0) < 3.0 * std::sqrt(5.0 / 1000.0) / 5.0);
}

TEST_CASE("zero kernel gives independent Poisson at phi(0)") {
    SimConfig cfg{{KernelSpec::zero(1.0), RateSpec::affine_clipped(2, 1)}, 1000, 12};
    const auto paths = simulate(cfg);
    const double zbar = static_cast<double>(paths.total_events()) / 1000.0;
    CHECK(std::abs(zbar - 2.0) < 3.0 * std::sqrt(2.0 / 1000.0));
}

TEST_CASE("mean of the mean process matches the limit m(0.9)") {
    SimConfig cfg{affine_model(), 2000, 13};
    std::vector<double> z;
    for (std::size_t r = 0; r < 100; ++r) {
        const auto res = simulate_replicate(cfg, nullptr, r);
        z.push_back(static_cast<double>(res.paths.total_events()) / 2000.0);
        CHECK(res.stats.majorant_violations == 0);
    }
    const auto ms = oracle::mean_se(z);
    CHECK(std::abs(ms.mean - 1.305) < 3.0 * ms.se);
}

TEST_CASE("zero tilt leaves the path and weight unchanged") {
    SimConfig cfg{affine_model(), 50, 21};
    const auto plain = simulate(cfg);
    const auto tilted = simulate_tilted(cfg, TiltField::zero(TimeGrid::uniform(0.9, 0.01)));
    CHECK(tilted.log_rn == 0.0);
    CHECK(tilted.paths.N == plain.N);

    // Equal in law: total counts over independent replicates.
    const auto zero = TiltField::zero(TimeGrid::uniform(0.9, 0.01));
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t r = 0; r < 3000; ++r) {
        a.push_back(static_cast<double>(simulate_replicate(cfg, nullptr, r).paths.total_events()));
        const auto res = simulate_replicate(cfg, &zero, r + 100000);
        CHECK(res.log_rn == 0.0);
        b.push_back(static_cast<double>(res.paths.total_events()));
    }
    CHECK(oracle::ks_two_sample_p_value(a, b) > 0.01);
}

TEST_CASE("constant tilt on a single Poisson component") {
    const double c = 0.7;
    SimConfig cfg{{KernelSpec::exponential(1, 1, 1.0), RateSpec::constant(1)}, 1, 5};
    const auto tilt = TiltField::constant(TimeGrid::uniform(1.0, 0.1), c);
    std::vector<double> k;
    for (std::size_t r = 0; r < 4000; ++r) {
        const auto res = simulate_replicate(cfg, &tilt, r);
        const double K = static_cast<double>(res.paths.times[0].size());
        CHECK(res.log_rn == doctest::Approx(-c * K + std::expm1(c)).epsilon(1e-12));
        k.push_back(K);
    }
    const auto ms = oracle::mean_se(k);
    CHECK(std::abs(ms.mean - std::exp(c)) < 3.0 * ms.se);
}

TEST_CASE("importance weights average to one") {
    SimConfig cfg{affine_model(), 5, 31};
    TiltField tilt(TimeGrid::uniform(0.9, 0.05), 3, -0.2);
    for (std::size_t k = 0; k < tilt.cells(); ++k) {
        for (std::size_t x = 0; x <= 3; ++x) {
            tilt(k, x) = 0.4 * std::sin(0.3 * static_cast<double>(k)) + 0.1 * static_cast<double>(x);
        }
    }
    std::vector<double> w;
    for (std::size_t r = 0; r < 10000; ++r) {
        const auto res = simulate_replicate(cfg, &tilt, r);
        CHECK(res.stats.majorant_violations == 0);
        w.push_back(std::exp(res.log_rn));
    }
    const auto ms = oracle::mean_se(w);
    CHECK(std::abs(ms.mean - 1.0) < 3.0 * ms.se);
}

TEST_CASE("determinism for identical configuration and seed") {
    SimConfig cfg{affine_model(), 200, 77};
    CHECK(simulate(cfg).times == simulate(cfg).times);
    SimConfig other = cfg;
    other.seed = 78;
    CHECK(simulate(other).times != simulate(cfg).times);
}

TEST_CASE("thinning matches an Euler discretization") {
    const std::size_t reps = 100000;
    SUBCASE("constant rate") {
        const ModelSpec model{KernelSpec::exponential(1, 1, 1.0), RateSpec::constant(1.2)};
        SimConfig cfg{model, 1, 101};
        const auto thin = oracle::histogram(counts_at_T(cfg, nullptr, reps), 25);
        const auto euler = oracle::euler_count_pmf(model, nullptr, 1e-4, reps, 202, 25);
        CHECK(oracle::total_variation(thin, euler) < 0.01);
    }
    SUBCASE("affine clipped rate") {
        const auto model = affine_model();
        SimConfig cfg{model, 1, 103};
        const auto thin = oracle::histogram(counts_at_T(cfg, nullptr, reps), 25);
        const auto euler = oracle::euler_count_pmf(model, nullptr, 1e-4, reps, 204, 25);
        CHECK(oracle::total_variation(thin, euler) < 0.01);
    }
}

TEST_CASE("components are exchangeable") {
    SimConfig cfg{affine_model(), 6, 55};
    std::vector<double> first;
    std::vector<double> last;
    for (std::size_t r = 0; r < 10000; ++r) {
        const auto res = simulate_replicate(cfg, nullptr, r);
        first.push_back(static_cast<double>(res.paths.times[0].size()));
        last.push_back(static_cast<double>(res.paths.times[5].size()));
    }
    CHECK(oracle::ks_two_sample_p_value(first, last) > 0.01);
}

TEST_CASE("majorant holds for non-monotone kernels and rates") {
    const ModelSpec model{KernelSpec::piecewise_linear({{0, 0.2}, {0.1, 1.0}, {0.4, 0.0}, {0.8, 0.6}}, 2.0),
                          RateSpec::sigmoidal(0.5, 2.0, 1.5, 0.5)};
    require_valid(model);
    SimConfig cfg{model, 40, 9};
    TiltField tilt(TimeGrid::uniform(2.0, 0.1), 2, 0.3);
    tilt(3, 1) = -1.0;
    tilt(7, 0) = 0.8;
    for (std::size_t r = 0; r < 200; ++r) {
        CHECK(simulate_replicate(cfg, nullptr, r).stats.majorant_violations == 0);
        CHECK(simulate_replicate(cfg, &tilt, r).stats.majorant_violations == 0);
    }
}

TEST_CASE("candidate guard reports explosion") {
    SimConfig cfg{affine_model(), 100, 1};
    cfg.max_candidates = 10;
    CHECK_THROWS_AS(simulate(cfg), ExplosionError);
}

TEST_CASE("mean_process examples") {
    const auto grid = TimeGrid(0.5, 2);
    EventPaths empty(3, 1.0, 0);
    CHECK(mean_process(empty, grid).values == std::vector<double>{0.0, 0.0, 0.0});

    EventPaths two(2, 1.0, 0);
    two.times[0] = {0.4};
    two.times[1] = {0.6};
    CHECK(mean_process(two, grid).values == std::vector<double>{0.0, 0.5, 1.0});

    SimConfig cfg{affine_model(), 300, 4};
    const auto paths = simulate(cfg);
    const auto mp = mean_process(paths, TimeGrid::uniform(0.9, 0.01));
    CHECK(mp.terminal() == static_cast<double>(paths.total_events()) / 300.0);
    for (std::size_t k = 1; k < mp.values.size(); ++k) {
        CHECK(mp.values[k] >= mp.values[k - 1]);
    }
}

TEST_CASE("empirical_measure examples") {
    EventPaths two(2, 1.0, 0);
    two.times[0] = {0.5};
    two.times[1] = {0.2, 0.3, 0.9};
    const auto grid = TimeGrid(0.1, 10);
    const auto flow = empirical_measure(two, grid, 3);
    CHECK(flow(1, 0) == 1.0);
    const auto last = flow.row(10);
    CHECK(std::vector<double>(last.begin(), last.end()) == std::vector<double>{0.0, 0.5, 0.0, 0.5});
    CHECK_THROWS_AS(empirical_measure(two, grid, 2), OverflowError);
    try {
        empirical_measure(two, grid, 1);
    } catch (const OverflowError& e) {
        CHECK(e.required_n_max() == 3);
    }

    SimConfig cfg{affine_model(), 500, 8};
    const auto paths = simulate(cfg);
    const auto g = TimeGrid::uniform(0.9, 0.01);
    const auto lf = empirical_measure(paths, g, paths.max_count());
    const auto mp = mean_process(paths, g);
    for (std::size_t k = 0; k < g.points(); ++k) {
        CHECK(lf.mass(k) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(lf.mean(k) == doctest::Approx(mp.values[k]).epsilon(1e-13));
        if (k > 0) {
            for (std::size_t x = 0; x <= lf.n_max(); ++x) {
                CHECK(lf.cdf(k, x) <= lf.cdf(k - 1, x) + 1e-15);
            }
        }
    }
}

TEST_CASE("exponential martingale examples") {
    SimConfig cfg{affine_model(), 5, 3};
    const auto paths = simulate(cfg);
    CHECK(exp_martingale_weight(paths, cfg.model, TiltField::zero(TimeGrid::uniform(0.9, 0.1))) == 1.0);

    const double theta = 0.6;
    const ModelSpec poisson{KernelSpec::exponential(1, 1, 1.0), RateSpec::constant(1)};
    TiltField psi(TimeGrid::uniform(1.0, 0.1), 40, 0.0);
    for (std::size_t k = 0; k < psi.cells(); ++k) {
        for (std::size_t x = 0; x <= 40; ++x) {
            psi(k, x) = theta * static_cast<double>(x);
        }
    }
    SimConfig one{poisson, 1, 17};
    std::vector<double> w;
    for (std::size_t r = 0; r < 10000; ++r) {
        const auto p = simulate_replicate(one, nullptr, r).paths;
        const double K = static_cast<double>(p.times[0].size());
        const double lw = exp_martingale_log_weight(p, poisson, psi);
        CHECK(lw == doctest::Approx(theta * K - std::expm1(theta)).epsilon(1e-12));
        w.push_back(std::exp(lw));
    }
    const auto ms = oracle::mean_se(w);
    CHECK(std::abs(ms.mean - 1.0) < 3.0 * ms.se);
}

TEST_CASE("exponential martingale has unit mean for bounded test functions") {
    SimConfig cfg{affine_model(), 5, 44};
    TiltField psi(TimeGrid::uniform(0.9, 0.05), 4, 0.2);
    for (std::size_t k = 0; k < psi.cells(); ++k) {
        for (std::size_t x = 0; x <= 4; ++x) {
            psi(k, x) = 0.3 * std::cos(0.5 * static_cast<double>(k + x));
        }
    }
    std::vector<double> w;
    for (std::size_t r = 0; r < 10000; ++r) {
        w.push_back(exp_martingale_weight(simulate_replicate(cfg, nullptr, r).paths, cfg.model, psi));
    }
    const auto ms = oracle::mean_se(w);
    CHECK(std::abs(ms.mean - 1.0) < 3.0 * ms.se);
}

TEST_CASE("limit particle without tilt is Poisson") {
    const std::size_t reps = 10000;
    SUBCASE("constant rate") {
        const ModelSpec model{KernelSpec::exponential(1, 1, 1.0), RateSpec::constant(1)};
        const auto m = solve_mean_limit(model).path;
        const auto tilt = TiltField::zero(TimeGrid::uniform(1.0, 0.01));
        std::vector<std::size_t> counts;
        for (std::size_t r = 0; r < reps; ++r) {
            counts.push_back(simulate_mckean_vlasov_tilted(model, tilt, m, 6, r).size());
        }
        std::vector<std::size_t> observed(30, 0);
        std::vector<double> probs(30);
        for (auto c : counts) {
            ++observed[std::min<std::size_t>(c, 29)];
        }
        for (std::size_t x = 0; x < 30; ++x) {
            probs[x] = oracle::poisson_pmf(1.0, x);
        }
        CHECK(oracle::chi_square_p_value(observed, probs) > 0.01);
    }
    SUBCASE("affine clipped rate") {
        const auto model = affine_model();
        const auto m = solve_mean_limit(model).path;
        const auto tilt = TiltField::zero(TimeGrid::uniform(0.9, 0.01));
        std::vector<std::size_t> observed(30, 0);
        std::vector<double> probs(30);
        for (std::size_t r = 0; r < reps; ++r) {
            ++observed[std::min<std::size_t>(simulate_mckean_vlasov_tilted(model, tilt, m, 7, r).size(), 29)];
        }
        for (std::size_t x = 0; x < 30; ++x) {
            probs[x] = oracle::poisson_pmf(1.305, x);
        }
        CHECK(oracle::chi_square_p_value(observed, probs) > 0.01);
    }
}

TEST_CASE("tilted limit particle matches the forward equations") {
    const auto model = affine_model();
    TiltField tilt(TimeGrid::uniform(0.9, 0.01), 0, 0.0);
    for (std::size_t k = 0; k < tilt.cells(); ++k) {
        tilt(k, 0) = 0.8;
    }
    const auto law = solve_perturbed_law(model, tilt);
    const auto bar = lawbar(law.flow);
    const std::size_t reps = 20000;
    std::vector<std::size_t> counts;
    for (std::size_t r = 0; r < reps; ++r) {
        counts.push_back(simulate_mckean_vlasov_tilted(model, tilt, bar, 8, r).size());
    }
    const auto hist = oracle::histogram(counts, law.flow.n_max());
    const auto row = law.flow.row(law.flow.grid().steps());
    CHECK(oracle::total_variation(hist, std::vector<double>(row.begin(), row.end())) < 0.02);
}
