#ifndef MFHAWKES_KERNEL_HPP
#define MFHAWKES_KERNEL_HPP

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mfhawkes {

// ---------------------------------------------------------------------------
// Exciting kernel h
// ---------------------------------------------------------------------------

/// h(t) = scale * exp(-rate * t).
struct ExponentialKernel {
    double rate = 1.0;
    double scale = 1.0;
};

/// Linear interpolation between knots (time, value); the first knot sits at
/// t = 0 and h is held at the last knot's value beyond it.
struct PiecewiseLinearKernel {
    std::vector<std::pair<double, double>> knots;
};

class KernelSpec {
public:
    using Family = std::variant<ExponentialKernel, PiecewiseLinearKernel>;

    KernelSpec(Family family, double horizon);

    static KernelSpec exponential(double rate, double scale, double horizon);
    static KernelSpec piecewise_linear(std::vector<std::pair<double, double>> knots,
                                       double horizon);
    /// The identically-zero kernel (no interaction).
    static KernelSpec zero(double horizon);

    /// h(t); throws DomainError outside [0, horizon].
    double eval(double t) const;
    /// h(t) without the domain check, for t >= 0.
    double value(double t) const noexcept;
    /// Right derivative h'(t+), t >= 0.
    double derivative(double t) const noexcept;
    /// sup |h'| on [0, horizon].
    double max_abs_derivative() const noexcept;
    /// Exact \int_0^upto h(t) dt; throws DomainError outside [0, horizon].
    double l1(double upto) const;
    /// min h on [0, horizon].
    double min_value() const noexcept;

    double horizon() const noexcept { return horizon_; }
    const Family& family() const noexcept { return family_; }
    bool is_exponential() const noexcept {
        return std::holds_alternative<ExponentialKernel>(family_);
    }
    std::string family_name() const;

private:
    Family family_;
    double horizon_;
};

// ---------------------------------------------------------------------------
// Rate function phi
// ---------------------------------------------------------------------------

struct ConstantRate {
    double c = 1.0;
};

/// phi(x) = max(floor, a + b x).
struct AffineClippedRate {
    double a = 1.0;
    double b = 0.0;
    double floor = 1.0;
};

/// phi(x) = lo + (hi - lo) / (1 + exp(-slope (x - center))).
struct SigmoidalRate {
    double lo = 1.0;
    double hi = 2.0;
    double slope = 1.0;
    double center = 0.0;
};

class RateSpec {
public:
    using Family = std::variant<ConstantRate, AffineClippedRate, SigmoidalRate>;

    explicit RateSpec(Family family);

    static RateSpec constant(double c);
    /// Floor defaults to a.
    static RateSpec affine_clipped(double a, double b);
    static RateSpec affine_clipped(double a, double b, double floor);
    static RateSpec sigmoidal(double lo, double hi, double slope, double center);

    double operator()(double x) const noexcept { return value(x); }
    double value(double x) const noexcept;
    /// Right derivative phi'(x+).
    double derivative(double x) const noexcept;
    /// Analytic Lipschitz constant alpha of the family.
    double lipschitz() const noexcept { return lipschitz_; }
    /// inf_{x >= 0} phi(x).
    double floor() const noexcept { return floor_; }
    bool is_constant() const noexcept { return std::holds_alternative<ConstantRate>(family_); }

    const Family& family() const noexcept { return family_; }
    std::string family_name() const;

private:
    Family family_;
    double lipschitz_ = 0.0;
    double floor_ = 0.0;
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Mean-field model: h_ij = h / N, phi_i = phi on the horizon [0, T].
struct ModelSpec {
    KernelSpec kernel;
    RateSpec rate;

    double horizon() const noexcept { return kernel.horizon(); }
};

struct AssumptionCheck {
    std::string id;           // "A.1", "A.2", "A.3"
    std::string description;
    bool passed = false;
    double quantity = 0.0;    // min h, alpha*|h|_L1, inf phi respectively
    std::string detail;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    double alpha_h_l1 = 0.0;

    bool passed() const noexcept;
    /// First failing check, or nullptr.
    const AssumptionCheck* first_failure() const noexcept;
};

ValidationReport validate_model(const ModelSpec& model);

/// Throws AssumptionViolation naming the first failing assumption.
void require_valid(const ModelSpec& model);

}  // namespace mfhawkes

#endif  // MFHAWKES_KERNEL_HPP
