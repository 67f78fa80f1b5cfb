#include "mfhawkes/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfhawkes/errors.hpp"

namespace mfhawkes {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw DomainError(std::string(what) + " must be finite");
    }
}

double logistic(double z) noexcept {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Index of the segment [k_i, k_{i+1}) containing t, or knots.size()-1 past the end.
std::size_t segment_of(const std::vector<std::pair<double, double>>& knots, double t) noexcept {
    auto it = std::upper_bound(knots.begin(), knots.end(), t,
                               [](double v, const auto& k) { return v < k.first; });
    return static_cast<std::size_t>(std::distance(knots.begin(), it)) - 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// KernelSpec
// ---------------------------------------------------------------------------

KernelSpec::KernelSpec(Family family, double horizon) : family_(std::move(family)), horizon_(horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw DomainError("kernel horizon must be positive and finite");
    }
    std::visit(Overloaded{
                   [](const ExponentialKernel& k) {
                       require_finite(k.rate, "exponential rate");
                       require_finite(k.scale, "exponential scale");
                       if (k.rate < 0.0) {
                           throw DomainError("exponential rate must be >= 0");
                       }
                   },
                   [](const PiecewiseLinearKernel& k) {
                       if (k.knots.empty()) {
                           throw DomainError("piecewise-linear kernel needs at least one knot");
                       }
                       if (k.knots.front().first != 0.0) {
                           throw DomainError("piecewise-linear kernel must start with a knot at t = 0");
                       }
                       for (std::size_t i = 0; i < k.knots.size(); ++i) {
                           require_finite(k.knots[i].first, "knot time");
                           require_finite(k.knots[i].second, "knot value");
                           if (i > 0 && !(k.knots[i].first > k.knots[i - 1].first)) {
                               throw DomainError("knot times must be strictly increasing");
                           }
                       }
                   },
               },
               family_);
}

KernelSpec KernelSpec::exponential(double rate, double scale, double horizon) {
    return KernelSpec(ExponentialKernel{rate, scale}, horizon);
}

KernelSpec KernelSpec::piecewise_linear(std::vector<std::pair<double, double>> knots, double horizon) {
    return KernelSpec(PiecewiseLinearKernel{std::move(knots)}, horizon);
}

KernelSpec KernelSpec::zero(double horizon) {
    return piecewise_linear({{0.0, 0.0}}, horizon);
}

double KernelSpec::eval(double t) const {
    if (!(t >= 0.0 && t <= horizon_)) {
        std::ostringstream os;
        os << "kernel evaluated at t = " << t << " outside [0, " << horizon_ << "]";
        throw DomainError(os.str());
    }
    return value(t);
}

double KernelSpec::value(double t) const noexcept {
    return std::visit(Overloaded{
                          [t](const ExponentialKernel& k) { return k.scale * std::exp(-k.rate * t); },
                          [t](const PiecewiseLinearKernel& k) {
                              const auto& kn = k.knots;
                              const std::size_t i = segment_of(kn, t);
                              if (i + 1 >= kn.size()) {
                                  return kn.back().second;
                              }
                              const auto [t0, v0] = kn[i];
                              const auto [t1, v1] = kn[i + 1];
                              return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                          },
                      },
                      family_);
}

double KernelSpec::derivative(double t) const noexcept {
    return std::visit(Overloaded{
                          [t](const ExponentialKernel& k) {
                              return -k.rate * k.scale * std::exp(-k.rate * t);
                          },
                          [t](const PiecewiseLinearKernel& k) {
                              const auto& kn = k.knots;
                              const std::size_t i = segment_of(kn, t);
                              if (i + 1 >= kn.size()) {
                                  return 0.0;
                              }
                              return (kn[i + 1].second - kn[i].second) / (kn[i + 1].first - kn[i].first);
                          },
                      },
                      family_);
}

double KernelSpec::max_abs_derivative() const noexcept {
    return std::visit(Overloaded{
                          [](const ExponentialKernel& k) { return std::abs(k.rate * k.scale); },
                          [this](const PiecewiseLinearKernel& k) {
                              double m = 0.0;
                              const auto& kn = k.knots;
                              for (std::size_t i = 0; i + 1 < kn.size() && kn[i].first < horizon_; ++i) {
                                  const double s = (kn[i + 1].second - kn[i].second) /
                                                   (kn[i + 1].first - kn[i].first);
                                  m = std::max(m, std::abs(s));
                              }
                              return m;
                          },
                      },
                      family_);
}

double KernelSpec::l1(double upto) const {
    if (!(upto >= 0.0 && upto <= horizon_)) {
        throw DomainError("kernel_l1 upper limit outside [0, horizon]");
    }
    return std::visit(Overloaded{
                          [upto](const ExponentialKernel& k) {
                              if (k.rate == 0.0) {
                                  return k.scale * upto;
                              }
                              return -k.scale * std::expm1(-k.rate * upto) / k.rate;
                          },
                          [upto](const PiecewiseLinearKernel& k) {
                              const auto& kn = k.knots;
                              double acc = 0.0;
                              for (std::size_t i = 0; i + 1 < kn.size() && kn[i].first < upto; ++i) {
                                  const auto [t0, v0] = kn[i];
                                  const auto [t1, v1] = kn[i + 1];
                                  const double end = std::min(t1, upto);
                                  const double v_end = v0 + (v1 - v0) * (end - t0) / (t1 - t0);
                                  acc += 0.5 * (v0 + v_end) * (end - t0);
                              }
                              if (upto > kn.back().first) {
                                  acc += kn.back().second * (upto - kn.back().first);
                              }
                              return acc;
                          },
                      },
                      family_);
}

double KernelSpec::min_value() const noexcept {
    return std::visit(Overloaded{
                          [this](const ExponentialKernel& k) {
                              return std::min(k.scale, k.scale * std::exp(-k.rate * horizon_));
                          },
                          [this](const PiecewiseLinearKernel& k) {
                              // Extremes of a piecewise-linear function sit on knots or at the horizon.
                              double m = value(horizon_);
                              for (const auto& [t, v] : k.knots) {
                                  if (t <= horizon_) {
                                      m = std::min(m, v);
                                  }
                              }
                              return m;
                          },
                      },
                      family_);
}

std::string KernelSpec::family_name() const {
    return is_exponential() ? "exponential" : "piecewise_linear";
}

// ---------------------------------------------------------------------------
// RateSpec
// ---------------------------------------------------------------------------

RateSpec::RateSpec(Family family) : family_(std::move(family)) {
    std::visit(Overloaded{
                   [this](const ConstantRate& r) {
                       require_finite(r.c, "constant rate c");
                       lipschitz_ = 0.0;
                       floor_ = r.c;
                   },
                   [this](const AffineClippedRate& r) {
                       require_finite(r.a, "affine a");
                       require_finite(r.b, "affine b");
                       require_finite(r.floor, "affine floor");
                       lipschitz_ = std::abs(r.b);
                       floor_ = r.b >= 0.0 ? std::max(r.floor, r.a) : r.floor;
                   },
                   [this](const SigmoidalRate& r) {
                       require_finite(r.lo, "sigmoidal lo");
                       require_finite(r.hi, "sigmoidal hi");
                       require_finite(r.slope, "sigmoidal slope");
                       require_finite(r.center, "sigmoidal center");
                       lipschitz_ = std::abs((r.hi - r.lo) * r.slope) / 4.0;
                       if (r.slope == 0.0 || r.hi == r.lo) {
                           floor_ = value(0.0);
                       } else if ((r.hi - r.lo) * r.slope > 0.0) {
                           floor_ = value(0.0);  // increasing on [0, inf)
                       } else {
                           floor_ = r.slope > 0.0 ? r.hi : r.lo;  // limit at +inf
                       }
                   },
               },
               family_);
}

RateSpec RateSpec::constant(double c) { return RateSpec(ConstantRate{c}); }

RateSpec RateSpec::affine_clipped(double a, double b) { return RateSpec(AffineClippedRate{a, b, a}); }

RateSpec RateSpec::affine_clipped(double a, double b, double floor) {
    return RateSpec(AffineClippedRate{a, b, floor});
}

RateSpec RateSpec::sigmoidal(double lo, double hi, double slope, double center) {
    return RateSpec(SigmoidalRate{lo, hi, slope, center});
}

double RateSpec::value(double x) const noexcept {
    return std::visit(Overloaded{
                          [](const ConstantRate& r) { return r.c; },
                          [x](const AffineClippedRate& r) { return std::max(r.floor, r.a + r.b * x); },
                          [x](const SigmoidalRate& r) {
                              return r.lo + (r.hi - r.lo) * logistic(r.slope * (x - r.center));
                          },
                      },
                      family_);
}

double RateSpec::derivative(double x) const noexcept {
    return std::visit(Overloaded{
                          [](const ConstantRate&) { return 0.0; },
                          [x](const AffineClippedRate& r) {
                              // Right derivative: the clipped branch wins ties only if it stays clipped.
                              const double v = r.a + r.b * x;
                              if (v > r.floor || (v == r.floor && r.b > 0.0)) {
                                  return r.b;
                              }
                              return 0.0;
                          },
                          [x](const SigmoidalRate& r) {
                              const double s = logistic(r.slope * (x - r.center));
                              return (r.hi - r.lo) * r.slope * s * (1.0 - s);
                          },
                      },
                      family_);
}

std::string RateSpec::family_name() const {
    return std::visit(Overloaded{
                          [](const ConstantRate&) { return std::string("constant"); },
                          [](const AffineClippedRate&) { return std::string("affine_clipped"); },
                          [](const SigmoidalRate&) { return std::string("sigmoidal"); },
                      },
                      family_);
}

// ---------------------------------------------------------------------------
// Assumption checks
// ---------------------------------------------------------------------------

bool ValidationReport::passed() const noexcept { return first_failure() == nullptr; }

const AssumptionCheck* ValidationReport::first_failure() const noexcept {
    for (const auto& c : checks) {
        if (!c.passed) {
            return &c;
        }
    }
    return nullptr;
}

ValidationReport validate_model(const ModelSpec& model) {
    ValidationReport report;
    const double T = model.horizon();

    {
        AssumptionCheck c{"A.1", "h >= 0, locally bounded, |h'| locally bounded on [0,T]", false, 0.0, {}};
        c.quantity = model.kernel.min_value();
        const double dmax = model.kernel.max_abs_derivative();
        c.passed = c.quantity >= 0.0 && std::isfinite(dmax);
        std::ostringstream os;
        os << "min h = " << c.quantity << ", sup|h'| = " << dmax;
        if (c.quantity < 0.0) {
            os << " (signed kernels are unsupported)";
        }
        c.detail = os.str();
        report.checks.push_back(std::move(c));
    }
    {
        AssumptionCheck c{"A.2", "phi alpha-Lipschitz with alpha * |h|_L1[0,T] < 1", false, 0.0, {}};
        const double alpha = model.rate.lipschitz();
        const double l1 = model.kernel.l1(T);
        c.quantity = alpha * l1;
        c.passed = std::isfinite(c.quantity) && c.quantity < 1.0;
        std::ostringstream os;
        os << "alpha = " << alpha << ", |h|_L1 = " << l1 << ", product = " << c.quantity;
        c.detail = os.str();
        report.alpha_h_l1 = c.quantity;
        report.checks.push_back(std::move(c));
    }
    {
        AssumptionCheck c{"A.3", "inf_{x>=0} phi(x) > 0", false, 0.0, {}};
        c.quantity = model.rate.floor();
        c.passed = c.quantity > 0.0;
        std::ostringstream os;
        os << "inf phi = " << c.quantity;
        c.detail = os.str();
        report.checks.push_back(std::move(c));
    }
    return report;
}

void require_valid(const ModelSpec& model) {
    const auto report = validate_model(model);
    if (const auto* f = report.first_failure()) {
        throw AssumptionViolation(f->id, f->detail);
    }
}

}  // namespace mfhawkes
