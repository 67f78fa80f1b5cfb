#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "mfhawkes/errors.hpp"
#include "mfhawkes/meanfield.hpp"
#include "mfhawkes/rate.hpp"

using namespace mfhawkes;

namespace {

ModelSpec affine_model() { return {KernelSpec::exponential(1, 1, 0.9), RateSpec::affine_clipped(1, 1)}; }
ModelSpec poisson_model(double T = 1.0) { return {KernelSpec::exponential(1, 1, T), RateSpec::constant(1)}; }

MeasureFlow limit_flow() { return mean_field_law(solve_mean_limit(affine_model()).path, 30); }

// Tilt depending on time and on whether x <= cut.
TiltField step_tilt(double T, std::size_t cut, double low, double high) {
    TiltField v(TimeGrid::uniform(T, 0.01), cut + 1, high);
    for (std::size_t k = 0; k < v.cells(); ++k) {
        const double wave = 0.2 * std::sin(3.0 * v.grid().time(k));
        for (std::size_t x = 0; x <= cut + 1; ++x) {
            v(k, x) = wave + (x <= cut ? low : high);
        }
    }
    return v;
}

double sup_on_support(const MeasureFlow& flow, const TiltField& got, const TiltField& want, double floor) {
    double sup = 0.0;
    const TimeGrid& g = flow.grid();
    for (std::size_t k = 0; k < g.steps(); ++k) {
        const std::size_t wc = want.grid().cell_of(g.time(k) + 0.5 * g.dt());
        for (std::size_t x = 0; x <= flow.n_max(); ++x) {
            if (std::max(flow(k, x), flow(k + 1, x)) > floor) {
                sup = std::max(sup, std::abs(got(k, x) - want(wc, x)));
            }
        }
    }
    return sup;
}

}  // namespace

TEST_CASE("G is one on the mean-field limit") {
    const auto flow = limit_flow();
    const auto g = compute_G(flow, affine_model());
    CHECK_FALSE(g.violation.has_value());
    double sup = 0.0;
    for (std::size_t k = 0; k < flow.grid().steps(); ++k) {
        for (std::size_t x = 0; x <= flow.n_max(); ++x) {
            if (std::min(flow(k, x), flow(k + 1, x)) > 1e-9) {
                sup = std::max(sup, std::abs(g(k, x) - 1.0));
            }
        }
    }
    CHECK(sup < 2e-3);
}

TEST_CASE("static flow has G = 0 and -inf tilt") {
    MeasureFlow flow(TimeGrid::uniform(1.0, 0.01), 2);
    for (std::size_t k = 0; k < flow.grid().points(); ++k) {
        flow(k, 0) = 0.5;
        flow(k, 1) = 0.3;
        flow(k, 2) = 0.2;
    }
    const auto model = poisson_model();
    const auto g = compute_G(flow, model);
    for (std::size_t k = 0; k < flow.grid().steps(); ++k) {
        for (std::size_t x = 0; x <= 2; ++x) {
            CHECK(g(k, x) == 0.0);
        }
    }
    const auto rec = recover_tilt(flow, model);
    CHECK(rec.minus_infinity_cells == 300);
    CHECK(rec.tilt(0, 1) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("constant tilt flow has G = e^kappa") {
    const double kappa = std::log(2.0);
    const auto model = poisson_model();
    const auto flow = solve_perturbed_law(model, TiltField::constant(TimeGrid::uniform(1.0, 0.01), kappa)).flow;
    const auto g = compute_G(flow, model);
    CHECK_FALSE(g.violation.has_value());
    double sup = 0.0;
    for (std::size_t k = 0; k < flow.grid().steps(); ++k) {
        for (std::size_t x = 0; x <= flow.n_max(); ++x) {
            if (std::min(flow(k, x), flow(k + 1, x)) > 1e-9) {
                sup = std::max(sup, std::abs(g(k, x) - 2.0));
            }
        }
    }
    CHECK(sup < 2e-3);
}

TEST_CASE("recovered tilt of the limit vanishes") {
    const auto flow = limit_flow();
    const auto rec = recover_tilt(flow, affine_model());
    CHECK(rec.tilt.sup_abs() < 5e-3);
    CHECK(rec.minus_infinity_cells == 0);
}

TEST_CASE("tilt round trip through the forward equations") {
    const auto model = affine_model();
    const auto tilt = step_tilt(0.9, 1, 0.4, -0.3);
    const auto flow = solve_perturbed_law(model, tilt).flow;
    const auto rec = recover_tilt(flow, model);
    CHECK(sup_on_support(flow, rec.tilt, tilt, 1e-6) < 5e-3);

    // And back again.
    const auto again = solve_perturbed_law(model, rec.tilt.clipped(30.0)).flow;
    double sup = 0.0;
    for (std::size_t i = 0; i < flow.data().size(); ++i) {
        sup = std::max(sup, std::abs(flow.data()[i] - again.data()[i]));
    }
    CHECK(sup < 1e-4);
}

TEST_CASE("rate_I examples") {
    const auto zero = rate_I(limit_flow(), affine_model());
    CHECK_FALSE(zero.ac_violation);
    CHECK(zero.value >= 0.0);
    CHECK(zero.value < 1e-3);

    const auto model = poisson_model();
    const auto flow = solve_perturbed_law(model, TiltField::constant(TimeGrid::uniform(1.0, 0.01), std::log(2.0))).flow;
    const auto r = rate_I(flow, model);
    CHECK(std::abs(r.value - (2.0 * std::log(2.0) - 1.0)) < 5e-3);
    CHECK(r.mass_balance_residual < 1e-6);
}

TEST_CASE("mass appearing on an empty level is an AC violation") {
    MeasureFlow flow(TimeGrid::uniform(1.0, 0.1), 3);
    for (std::size_t k = 0; k < flow.grid().points(); ++k) {
        flow(k, 0) = 1.0;
    }
    // Between t = 0.5 and 0.6, mass 0.2 jumps from 0 straight to level 2,
    // passing through the empty level 1.
    for (std::size_t k = 6; k < flow.grid().points(); ++k) {
        flow(k, 0) = 0.8;
        flow(k, 2) = 0.2;
    }
    const auto r = rate_I(flow, poisson_model());
    CHECK(r.ac_violation);
    CHECK(std::isinf(r.value));
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->x == 1);
    CHECK(r.witness->t == doctest::Approx(0.5));
    CHECK_THROWS_AS(recover_tilt(flow, poisson_model()), AcViolationError);
}

TEST_CASE("G log G - G + 1 integrand is nonnegative") {
    const auto model = affine_model();
    const auto flow = solve_perturbed_law(model, step_tilt(0.9, 0, -0.5, 0.7)).flow;
    const auto r = rate_I(flow, model);
    for (double v : r.integrand) {
        CHECK(v >= 0.0);
    }
    CHECK(r.value > 0.0);
}

TEST_CASE("variational_J examples") {
    const auto model = affine_model();
    const auto flow = solve_perturbed_law(model, step_tilt(0.9, 1, 0.5, -0.2)).flow;
    const auto grid = TimeGrid::uniform(0.9, 0.05);
    CHECK(variational_J(flow, model, TiltField::zero(grid)) == 0.0);

    const double I = rate_I(flow, model).value;
    const auto rec = recover_tilt(flow, model);
    CHECK(std::abs(variational_J(flow, model, rec.tilt.clipped(30.0)) - I) < 1e-2);

    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        TiltField psi(grid, 4, u(gen));
        for (std::size_t k = 0; k < psi.cells(); ++k) {
            for (std::size_t x = 0; x <= 4; ++x) {
                psi(k, x) = u(gen);
            }
        }
        CHECK(variational_J(flow, model, psi) <= I + 1e-2);
    }
}

TEST_CASE("ell examples") {
    CHECK(ell(1.7, 1.7) == 0.0);
    CHECK(ell(0.0, 2.0) == 2.0);
    CHECK(std::abs(ell(2.0, 1.0) - 0.38629) < 1e-5);
    CHECK_THROWS_AS(ell(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(ell(-1.0, 1.0), DomainError);
    for (double x : {0.1, 0.5, 1.0, 3.0}) {
        CHECK(ell(x, 1.3) >= 0.0);
        // Convexity along a chord.
        CHECK(ell(0.5 * (x + 2.0), 1.3) <= 0.5 * (ell(x, 1.3) + ell(2.0, 1.3)) + 1e-15);
    }
}

TEST_CASE("rate_mean_process examples") {
    const auto m = solve_mean_limit(affine_model()).path;
    CHECK(rate_mean_process(m, affine_model()) < 1e-3);

    const auto grid = TimeGrid::uniform(1.0, 0.01);
    MeanPath line{grid, {}};
    for (std::size_t k = 0; k < grid.points(); ++k) {
        line.values.push_back(2.0 * grid.time(k));
    }
    CHECK(std::abs(rate_mean_process(line, poisson_model()) - 0.38629) < 1e-5);

    line.values[50] = line.values[49] - 0.01;
    CHECK(std::isinf(rate_mean_process(line, poisson_model())));
}

TEST_CASE("contraction consistency for x-independent tilts") {
    const auto model = affine_model();
    TiltField wide(TimeGrid::uniform(0.9, 0.01), 40, 0.0);
    for (std::size_t k = 0; k < wide.cells(); ++k) {
        for (std::size_t x = 0; x <= 40; ++x) {
            wide(k, x) = 0.3 + 0.2 * std::cos(4.0 * wide.grid().time(k));
        }
    }
    const auto flow = solve_perturbed_law(model, wide).flow;
    const double I = rate_I(flow, model).value;
    CHECK(std::abs(I - rate_mean_process(lawbar(flow), model)) < 1e-2);
}

TEST_CASE("minimize_rate_endpoint examples") {
    const auto c1 = poisson_model();
    const auto best = minimize_rate_endpoint(1.5, c1, TimeGrid::uniform(1.0, 0.01));
    CHECK(std::abs(best.value - (1.5 * std::log(1.5) - 0.5)) < 1e-3);
    CHECK(best.converged);

    const auto model = affine_model();
    MeanLimitOptions coarse;
    coarse.dt = 0.01;
    const auto m = solve_mean_limit(model, coarse).path;
    const auto at_limit = minimize_rate_endpoint(m.terminal(), model, m.grid);
    CHECK(at_limit.value < 1e-3);
    for (std::size_t k = 0; k < m.values.size(); ++k) {
        CHECK(std::abs(at_limit.eta.values[k] - m.values[k]) < 1e-3);
    }

    const auto grid = TimeGrid::uniform(0.9, 0.01);
    const auto two = minimize_rate_endpoint(2.0, model, grid);
    MeanPath lin{grid, {}};
    for (std::size_t k = 0; k < grid.points(); ++k) {
        lin.values.push_back(2.0 * grid.time(k) / 0.9);
    }
    CHECK(two.value >= 0.0);
    CHECK(two.value <= rate_mean_process(lin, model));
    CHECK(two.eta.terminal() == doctest::Approx(2.0));
    CHECK_THROWS_AS(minimize_rate_endpoint(0.5, model, grid), DomainError);
}
