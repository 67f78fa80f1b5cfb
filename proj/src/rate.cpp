#include "mfhawkes/rate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "mfhawkes/errors.hpp"
#include "mfhawkes/meanfield.hpp"

namespace mfhawkes {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// phi1(z) = (1 - e^{-z}) / z and chi(z) = (1 - e^{-z}(1 + z)) / z^2.
double phi1(double z) noexcept {
    return z < 1e-8 ? 1.0 - 0.5 * z : -std::expm1(-z) / z;
}

double chi(double z) noexcept {
    if (z < 1e-3) {
        return 0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0;
    }
    return (-std::expm1(-z) - z * std::exp(-z)) / (z * z);
}

// One level of the forward equations inside a cell with constant jump rate
// G * Lambda(t): exponential integrator with Lambda frozen per substep and the
// inflow rate b interpolated linearly.
class LevelSolver {
public:
    LevelSolver(const std::vector<double>& lambda, double h) : lambda_(lambda), h_(h) {}

    double terminal(double g, double f0, const std::vector<double>& inflow) const {
        double f = f0;
        for (std::size_t j = 0; j + 1 < lambda_.size(); ++j) {
            f = step(g, f, j, inflow);
        }
        return f;
    }

    void trajectory(double g, double f0, const std::vector<double>& inflow, std::vector<double>& out) const {
        out.resize(lambda_.size());
        out[0] = f0;
        for (std::size_t j = 0; j + 1 < lambda_.size(); ++j) {
            out[j + 1] = step(g, out[j], j, inflow);
        }
    }

    double area() const noexcept {
        double a = 0.0;
        for (std::size_t j = 0; j + 1 < lambda_.size(); ++j) {
            a += 0.5 * h_ * (lambda_[j] + lambda_[j + 1]);
        }
        return a;
    }

private:
    double step(double g, double f, std::size_t j, const std::vector<double>& b) const noexcept {
        const double z = g * 0.5 * h_ * (lambda_[j] + lambda_[j + 1]);
        const double c = chi(z);
        return f * std::exp(-z) + h_ * (b[j] * c + b[j + 1] * (phi1(z) - c));
    }

    const std::vector<double>& lambda_;
    double h_;
};

double g_log_g(double g) noexcept {
    if (g == 0.0) {
        return 1.0;
    }
    if (g == 1.0) {
        return 0.0;
    }
    return g * std::log(g) - g + 1.0;
}

void check_options(const RateOptions& o) {
    if (!(o.eps_num >= 0.0) || !(o.eps_floor >= 0.0) || !(o.resolve_floor >= 0.0) || o.substeps < 1) {
        throw DomainError("rate options must be nonnegative with at least one substep");
    }
}

}  // namespace

GField compute_G(const MeasureFlow& flow, const ModelSpec& model, const RateOptions& options) {
    check_options(options);
    const TimeGrid& grid = flow.grid();
    const std::size_t cells = grid.steps();
    const std::size_t levels = flow.levels();
    const auto substeps = static_cast<std::size_t>(options.substeps);
    const double dt = grid.dt();
    const double h = dt / static_cast<double>(substeps);
    const std::vector<double> lam_grid = intensity_path(model, lawbar(flow));

    GField out;
    out.grid = grid;
    out.n_max = flow.n_max();
    out.G.assign(cells * levels, 1.0);
    out.W.assign(cells * levels, 0.0);
    out.outflow.assign(cells * levels, 0.0);

    std::vector<double> lam(substeps + 1);
    std::vector<double> inflow(substeps + 1), next_inflow(substeps + 1), traj;
    auto flag = [&](std::size_t k, std::size_t x) {
        if (!out.violation) {
            out.violation = AcWitness{grid.time(k), x};
        }
    };

    for (std::size_t k = 0; k < cells; ++k) {
        for (std::size_t j = 0; j <= substeps; ++j) {
            const double w = static_cast<double>(j) / static_cast<double>(substeps);
            lam[j] = (1.0 - w) * lam_grid[k] + w * lam_grid[k + 1];
        }
        const LevelSolver solver(lam, h);
        std::fill(inflow.begin(), inflow.end(), 0.0);
        for (std::size_t x = 0; x < levels; ++x) {
            const std::size_t ix = k * levels + x;
            const double f0 = flow(k, x);
            const double f1 = flow(k + 1, x);
            double inflow_total = 0.0;
            for (std::size_t j = 0; j < substeps; ++j) {
                inflow_total += 0.5 * h * (inflow[j] + inflow[j + 1]);
            }
            const double free = solver.terminal(0.0, f0, inflow);
            const double motion = (free - f1) / dt;

            double g = 1.0;
            bool solved = false;
            if (free <= 0.0 && f1 <= 0.0) {
                // Empty level: 0/0 convention.
            } else if (free <= f1) {
                g = 0.0;
                solved = true;
            } else if (f1 <= 0.0 || std::max(f0, f1) < options.eps_floor) {
                if (motion > options.eps_num) {
                    flag(k, x);
                } else if (f1 > 0.0) {
                    solved = true;
                }
            } else {
                solved = true;
            }

            if (solved && g != 0.0) {
                if (x == 0 || inflow_total == 0.0) {
                    g = std::log(f0 / f1) / solver.area();
                } else {
                    auto residual = [&](double gg) { return solver.terminal(gg, f0, inflow) - f1; };
                    double hi = 1.0;
                    double r_hi = residual(hi);
                    int grow = 0;
                    while (r_hi > 0.0 && grow < 200) {
                        hi *= 4.0;
                        r_hi = residual(hi);
                        ++grow;
                    }
                    double lo = 0.0;
                    double r_lo = free - f1;
                    if (r_hi > 0.0) {
                        flag(k, x);
                        solved = false;
                        g = 1.0;
                    } else if (r_hi == 0.0) {
                        g = hi;
                    } else {
                        if (hi > 1.0) {
                            lo = hi / 4.0;
                            r_lo = residual(lo);
                        }
                        std::uintmax_t iters = 200;
                        const auto [a, b] = boost::math::tools::toms748_solve(
                            residual, lo, hi, r_lo, r_hi, boost::math::tools::eps_tolerance<double>(50), iters);
                        g = 0.5 * (a + b);
                    }
                }
            }

            if (solved) {
                solver.trajectory(g, f0, inflow, traj);
                double outflow = 0.0;
                double w_int = 0.0;
                if (g > 0.0) {
                    outflow = std::max(0.0, f0 + inflow_total - f1);
                    w_int = outflow / g;
                } else {
                    for (std::size_t j = 0; j < substeps; ++j) {
                        w_int += 0.5 * h * (lam[j] * traj[j] + lam[j + 1] * traj[j + 1]);
                    }
                }
                out.G[ix] = g;
                out.W[ix] = w_int;
                out.outflow[ix] = outflow;
                double carried = 0.0;
                for (std::size_t j = 0; j <= substeps; ++j) {
                    next_inflow[j] = g * lam[j] * traj[j];
                    if (j > 0) {
                        carried += 0.5 * h * (next_inflow[j - 1] + next_inflow[j]);
                    }
                }
                // Hand the next level exactly the mass that left this one.
                if (carried > 0.0) {
                    const double scale = outflow / carried;
                    for (double& b : next_inflow) {
                        b *= scale;
                    }
                }
            } else {
                out.G[ix] = 1.0;
                std::fill(next_inflow.begin(), next_inflow.end(), 0.0);
            }
            inflow.swap(next_inflow);
        }
    }
    return out;
}

RateReport rate_I(const MeasureFlow& flow, const ModelSpec& model, const RateOptions& options) {
    const GField g = compute_G(flow, model, options);
    RateReport report;
    report.integrand.resize(g.G.size());
    double value = 0.0;
    double outflow = 0.0;
    for (std::size_t i = 0; i < g.G.size(); ++i) {
        report.integrand[i] = g_log_g(g.G[i]) * g.W[i];
        value += report.integrand[i];
        outflow += g.G[i] * g.W[i];
    }
    const double target = lawbar(flow).values.back();
    const double diff = std::abs(outflow - target);
    report.mass_balance_residual = target > 0.0 ? diff / target : diff;
    if (g.violation) {
        report.ac_violation = true;
        report.witness = g.violation;
        report.value = kInf;
    } else {
        report.value = value;
    }
    return report;
}

RecoveredTilt recover_tilt(const MeasureFlow& flow, const ModelSpec& model, const RateOptions& options) {
    const GField g = compute_G(flow, model, options);
    if (g.violation) {
        std::ostringstream os;
        os << "absolute continuity fails at t = " << g.violation->t << ", x = " << g.violation->x;
        throw AcViolationError(g.violation->t, g.violation->x, os.str());
    }
    RecoveredTilt out{TiltField(flow.grid(), flow.n_max(), 0.0), 0, 0};
    for (std::size_t k = 0; k < flow.grid().steps(); ++k) {
        for (std::size_t x = 0; x <= flow.n_max(); ++x) {
            const double gv = g(k, x);
            const bool empty = g.weight(k, x) == 0.0 && gv == 1.0;
            const double fmax = std::max(flow(k, x), flow(k + 1, x));
            if (empty) {
                out.tilt(k, x) = 0.0;
            } else if (fmax < options.resolve_floor) {
                out.tilt(k, x) = 0.0;
                ++out.unresolved_cells;
            } else if (gv == 0.0) {
                out.tilt(k, x) = -kInf;
                ++out.minus_infinity_cells;
            } else {
                out.tilt(k, x) = std::log(gv);
            }
        }
    }
    return out;
}

double variational_J(const MeasureFlow& flow, const ModelSpec& model, const TiltField& psi,
                     const RateOptions& options) {
    if (!psi.all_finite()) {
        throw DomainError("test function must be finite");
    }
    const GField g = compute_G(flow, model, options);
    const TimeGrid& grid = flow.grid();
    double total = 0.0;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        const std::size_t cell = psi.grid().cell_of(grid.time(k) + 0.5 * grid.dt());
        for (std::size_t x = 0; x <= flow.n_max(); ++x) {
            const double p = psi(cell, x);
            total += p * g.out(k, x) - std::expm1(p) * g.weight(k, x);
        }
    }
    return total;
}

double ell(double x, double y) {
    if (!(y > 0.0) || !(x >= 0.0)) {
        throw DomainError("ell(x; y) needs x >= 0 and y > 0");
    }
    if (x == 0.0) {
        return y;
    }
    return x * std::log(x / y) - x + y;
}

double rate_mean_process(const MeanPath& eta, const ModelSpec& model) {
    const TimeGrid& grid = eta.grid;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        if (eta.values[k + 1] < eta.values[k]) {
            return kInf;
        }
    }
    const std::vector<double> lam = intensity_path(model, eta);
    const double dt = grid.dt();
    double total = 0.0;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        const double v = (eta.values[k + 1] - eta.values[k]) / dt;
        total += 0.5 * dt * (ell(v, lam[k]) + ell(v, lam[k + 1]));
    }
    return total;
}

namespace {

// Objective and gradient of rate_mean_process as a function of the increments d.
class EndpointProblem {
public:
    EndpointProblem(const ModelSpec& model, const TimeGrid& grid)
        : model_(model), grid_(grid), dh_(grid.points()) {
        for (std::size_t d = 0; d < grid.points(); ++d) {
            dh_[d] = model.kernel.derivative(grid.time(d));
        }
        diag_ = model.kernel.value(0.0) + 0.5 * grid.dt() * dh_[0];
    }

    MeanPath path(const std::vector<double>& inc) const {
        MeanPath eta{grid_, std::vector<double>(grid_.points(), 0.0)};
        for (std::size_t k = 0; k < inc.size(); ++k) {
            eta.values[k + 1] = eta.values[k] + inc[k];
        }
        return eta;
    }

    double value(const std::vector<double>& inc) const { return rate_mean_process(path(inc), model_); }

    void gradient(const std::vector<double>& inc, std::vector<double>& grad) const {
        const std::size_t steps = grid_.steps();
        const double dt = grid_.dt();
        const MeanPath eta = path(inc);
        const std::vector<double> c = excitation_path(model_.kernel, eta);
        std::vector<double> lam(c.size());
        for (std::size_t j = 0; j < c.size(); ++j) {
            lam[j] = model_.rate(c[j]);
        }
        grad.assign(steps, 0.0);
        std::vector<double> u(steps + 1, 0.0);
        for (std::size_t k = 0; k < steps; ++k) {
            const double v = inc[k] / dt;
            const double lv = v > 0.0 ? std::log(v) : -1e300;
            grad[k] = 0.5 * ((lv - std::log(lam[k])) + (lv - std::log(lam[k + 1])));
            u[k] += 0.5 * dt * (1.0 - v / lam[k]);
            u[k + 1] += 0.5 * dt * (1.0 - v / lam[k + 1]);
        }
        if (model_.rate.is_constant()) {
            return;
        }
        for (std::size_t j = 0; j <= steps; ++j) {
            u[j] *= model_.rate.derivative(c[j]);
        }
        // r_i = dF/d eta_i through the excitation map, then suffix sums give dF/d inc_k.
        double suffix = 0.0;
        for (std::size_t i = steps; i >= 1; --i) {
            double r = diag_ * u[i];
            for (std::size_t j = i + 1; j <= steps; ++j) {
                r += dt * dh_[j - i] * u[j];
            }
            suffix += r;
            grad[i - 1] += suffix;
        }
    }

private:
    const ModelSpec& model_;
    TimeGrid grid_;
    std::vector<double> dh_;
    double diag_ = 0.0;
};

struct DescentResult {
    std::vector<double> inc;
    double value;
    bool converged;
    int iterations;
};

DescentResult mirror_descent(const EndpointProblem& problem, std::vector<double> inc, double total,
                             const EndpointOptions& options) {
    std::vector<double> grad, trial(inc.size());
    double value = problem.value(inc);
    double step = 1.0;
    for (int it = 0; it < options.max_iterations; ++it) {
        problem.gradient(inc, grad);
        const double gmin = *std::min_element(grad.begin(), grad.end());
        double gap = 0.0;
        for (std::size_t k = 0; k < inc.size(); ++k) {
            gap += inc[k] * (grad[k] - gmin);
        }
        if (gap < options.tolerance) {
            return {std::move(inc), value, true, it};
        }
        bool improved = false;
        step *= 2.0;
        while (step > 1e-18) {
            double sum = 0.0;
            for (std::size_t k = 0; k < inc.size(); ++k) {
                trial[k] = inc[k] * std::exp(-step * (grad[k] - gmin));
                sum += trial[k];
            }
            for (double& v : trial) {
                v *= total / sum;
            }
            const double tv = problem.value(trial);
            if (tv < value) {
                inc.swap(trial);
                value = tv;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) {
            return {std::move(inc), value, false, it};
        }
    }
    return {std::move(inc), value, false, options.max_iterations};
}

}  // namespace

EndpointMinimum minimize_rate_endpoint(double a, const ModelSpec& model, const TimeGrid& grid,
                                       const EndpointOptions& options) {
    require_valid(model);
    if (std::abs(grid.horizon() - model.horizon()) > 1e-9 * model.horizon()) {
        throw DomainError("grid horizon does not match the model horizon");
    }
    MeanLimitOptions mopts;
    mopts.dt = grid.dt();
    const MeanPath m = solve_mean_limit(model, mopts).path;
    const double mt = m.values.back();
    if (!(a >= mt * (1.0 - 1e-9))) {
        throw DomainError("endpoint target must be at least m(T)");
    }
    const EndpointProblem problem(model, grid);
    const std::size_t steps = grid.steps();

    std::vector<double> scaled(steps), linear(steps, a / static_cast<double>(steps));
    for (std::size_t k = 0; k < steps; ++k) {
        scaled[k] = (m.values[k + 1] - m.values[k]) * a / mt;
    }
    DescentResult best = mirror_descent(problem, scaled, a, options);
    DescentResult alt = mirror_descent(problem, linear, a, options);
    if (alt.value < best.value) {
        best = std::move(alt);
    }
    return {problem.path(best.inc), best.value, best.converged, best.iterations};
}

}  // namespace mfhawkes
