#include <cmath>
#include <random>

#include "doctest.h"
#include "mfhawkes/errors.hpp"
#include "mfhawkes/kernel.hpp"

using namespace mfhawkes;

TEST_CASE("eval_kernel examples") {
    CHECK(KernelSpec::exponential(1, 1, 1).eval(0.0) == doctest::Approx(1.0));
    CHECK(KernelSpec::exponential(2, 3, 1).eval(0.0) == doctest::Approx(3.0));
    const auto tri = KernelSpec::piecewise_linear({{0, 1}, {1, 0}}, 1.0);
    CHECK(tri.eval(0.5) == doctest::Approx(0.5));
}

TEST_CASE("eval_kernel rejects times outside the horizon") {
    const auto k = KernelSpec::exponential(1, 1, 1);
    CHECK_THROWS_AS(k.eval(-0.1), DomainError);
    CHECK_THROWS_AS(k.eval(1.5), DomainError);
}

TEST_CASE("kernel_l1 examples") {
    CHECK(KernelSpec::exponential(1, 1, 50).l1(50) == doctest::Approx(1.0 - std::exp(-50.0)));
    CHECK(KernelSpec::exponential(1, 1, 0.9).l1(0.9) == doctest::Approx(1.0 - std::exp(-0.9)).epsilon(1e-12));
    CHECK(std::abs(KernelSpec::exponential(1, 1, 0.9).l1(0.9) - 0.59343) < 1e-5);
    CHECK(KernelSpec::piecewise_linear({{0, 1}, {1, 0}}, 1.0).l1(1.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(KernelSpec::exponential(1, 1, 1).l1(2.0), DomainError);
}

TEST_CASE("kernel_l1 agrees with fine quadrature") {
    const std::vector<KernelSpec> kernels = {
        KernelSpec::exponential(1, 1, 0.9),
        KernelSpec::exponential(3, 0.2, 2.0),
        KernelSpec::piecewise_linear({{0, 1}, {1, 0}}, 1.0),
        KernelSpec::piecewise_linear({{0, 0.2}, {0.3, 0.5}, {0.8, 0.1}}, 1.5),
    };
    for (const auto& k : kernels) {
        const double T = k.horizon();
        const auto steps = static_cast<int>(std::llround(T / 1e-4));
        const double h = T / steps;
        double s = 0.0;
        for (int i = 0; i < steps; ++i) {
            s += 0.5 * h * (k.value(i * h) + k.value((i + 1) * h));
        }
        CHECK(std::abs(s - k.l1(T)) <= 1e-6 * k.l1(T));
    }
}

TEST_CASE("validate_model examples") {
    const auto constant = validate_model({KernelSpec::exponential(1, 1, 0.9), RateSpec::constant(1)});
    CHECK(constant.passed());
    CHECK(constant.alpha_h_l1 == 0.0);

    const auto affine = validate_model({KernelSpec::exponential(1, 1, 0.9), RateSpec::affine_clipped(1, 1, 1)});
    CHECK(affine.passed());
    CHECK(std::abs(affine.alpha_h_l1 - 0.593) < 1e-3);

    const ModelSpec bad{KernelSpec::exponential(1, 1, 50), RateSpec::affine_clipped(1, 2)};
    const auto report = validate_model(bad);
    REQUIRE_FALSE(report.passed());
    REQUIRE(report.first_failure() != nullptr);
    CHECK(report.first_failure()->id == "A.2");
    CHECK(std::abs(report.alpha_h_l1 - 2.0) < 1e-6);
    try {
        require_valid(bad);
        FAIL("expected an assumption violation");
    } catch (const AssumptionViolation& e) {
        CHECK(e.assumption() == "A.2");
    }
}

TEST_CASE("validation report lists every assumption") {
    const auto report = validate_model({KernelSpec::exponential(1, 1, 0.9), RateSpec::affine_clipped(1, 1)});
    REQUIRE(report.checks.size() == 3);
    CHECK(report.checks[0].id == "A.1");
    CHECK(report.checks[1].id == "A.2");
    CHECK(report.checks[2].id == "A.3");
    CHECK(report.checks[2].quantity == doctest::Approx(1.0));
}

TEST_CASE("rate families respect floor and Lipschitz bound") {
    const std::vector<RateSpec> rates = {
        RateSpec::constant(1.5),
        RateSpec::affine_clipped(1, 1),
        RateSpec::affine_clipped(-0.5, 2.0, 0.25),
        RateSpec::sigmoidal(0.5, 3.0, 2.0, 1.0),
    };
    std::mt19937_64 gen(7);
    std::exponential_distribution<double> draw(0.5);
    for (const auto& r : rates) {
        for (int i = 0; i < 10000; ++i) {
            const double x = draw(gen);
            const double y = draw(gen);
            CHECK_MESSAGE(r(x) >= r.floor() - 1e-15, r.family_name());
            CHECK_MESSAGE(std::abs(r(x) - r(y)) <= r.lipschitz() * std::abs(x - y) + 1e-12, r.family_name());
        }
    }
}

TEST_CASE("affine clipped floor defaults to the intercept") {
    const auto r = RateSpec::affine_clipped(2, 1);
    CHECK(r.floor() == 2.0);
    CHECK(r(0.0) == 2.0);
    CHECK(r(1.0) == 3.0);
}

TEST_CASE("assumption A.3 fails for a non-positive floor") {
    const auto report = validate_model({KernelSpec::exponential(1, 1, 1), RateSpec::affine_clipped(-1, 1, 0.0)});
    REQUIRE(report.first_failure() != nullptr);
    CHECK(report.first_failure()->id == "A.3");
}
