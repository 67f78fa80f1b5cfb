#include "mfhawkes/meanfield.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "mfhawkes/errors.hpp"

namespace mfhawkes {

namespace {

std::vector<double> table(std::size_t n, double dt, double offset, const auto& fn) {
    std::vector<double> out(n);
    for (std::size_t d = 0; d < n; ++d) {
        out[d] = fn((static_cast<double>(d) + offset) * dt);
    }
    return out;
}

}  // namespace

MeanLimitResult solve_mean_limit(const ModelSpec& model, const MeanLimitOptions& options) {
    require_valid(model);
    const double horizon = model.horizon();
    if (!(options.dt > 0.0) || options.dt > horizon / 10.0 * (1.0 + 1e-12)) {
        throw DomainError("mean-limit step must lie in (0, T/10]");
    }
    if (options.max_iterations < 1 || !(options.tolerance > 0.0)) {
        throw DomainError("mean-limit iteration cap and tolerance must be positive");
    }
    const TimeGrid grid = TimeGrid::uniform(horizon, options.dt);
    const std::size_t steps = grid.steps();
    const double dt = grid.dt();
    const RateSpec& phi = model.rate;
    const std::vector<double> h = table(steps + 1, dt, 0.0, [&](double t) { return model.kernel.value(t); });

    // Weight of the increment m_{j+1} - m_j in the excitation at t_k, by lag d = k - j >= 1.
    std::vector<double> weight(steps + 1, 0.0);
    for (std::size_t d = 1; d <= steps; ++d) {
        weight[d] = options.quadrature == VolterraQuadrature::Trapezoid ? 0.5 * (h[d] + h[d - 1]) : h[d];
    }

    MeanLimitResult result;
    std::vector<double> m(steps + 1), next(steps + 1), dm(steps), lam(steps + 1);
    const double phi0 = phi(0.0);
    for (std::size_t k = 0; k <= steps; ++k) {
        m[k] = phi0 * grid.time(k);
    }
    for (int it = 1; it <= options.max_iterations; ++it) {
        for (std::size_t j = 0; j < steps; ++j) {
            dm[j] = m[j + 1] - m[j];
        }
        for (std::size_t k = 0; k <= steps; ++k) {
            double c = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                c += weight[k - j] * dm[j];
            }
            lam[k] = phi(c);
        }
        next[0] = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            const double inc = options.quadrature == VolterraQuadrature::Trapezoid ? 0.5 * dt * (lam[k] + lam[k + 1])
                                                                                   : dt * lam[k];
            next[k + 1] = next[k] + inc;
        }
        double change = 0.0;
        for (std::size_t k = 0; k <= steps; ++k) {
            change = std::max(change, std::abs(next[k] - m[k]));
        }
        m.swap(next);
        result.increments.push_back(change);
        result.iterations = it;
        if (change < options.tolerance) {
            result.path = MeanPath{grid, std::move(m)};
            return result;
        }
        if (!std::isfinite(change)) {
            break;
        }
    }
    std::ostringstream os;
    os << "Picard iteration did not converge in " << options.max_iterations
       << " iterations (last change " << result.increments.back() << ")";
    throw NumericError(os.str());
}

MeasureFlow mean_field_law(const MeanPath& m, std::size_t n_max, double deficit_tolerance) {
    MeasureFlow flow(m.grid, n_max);
    for (std::size_t k = 0; k < m.grid.points(); ++k) {
        const double mk = m.values[k];
        if (!(mk >= 0.0) || !std::isfinite(mk)) {
            throw DomainError("mean path must be finite and nonnegative");
        }
        auto row = flow.row(k);
        if (mk == 0.0) {
            row[0] = 1.0;
            continue;
        }
        const double log_m = std::log(mk);
        for (std::size_t x = 0; x <= n_max; ++x) {
            const double xd = static_cast<double>(x);
            row[x] = std::exp(-mk + xd * log_m - std::lgamma(xd + 1.0));
        }
    }
    const double terminal = m.values.back();
    double deficit = 0.0;
    for (std::size_t k = 0; k < m.grid.points(); ++k) {
        deficit = std::max(deficit, flow.deficit(k));
    }
    if (deficit > deficit_tolerance) {
        std::ostringstream os;
        os << "Poisson truncation deficit " << deficit << " exceeds " << deficit_tolerance
           << "; increase n_max (suggested >= " << std::ceil(terminal + 10.0 * std::sqrt(terminal) + 10.0) << ")";
        throw NumericError(os.str());
    }
    return flow;
}

MeanPath lawbar(const MeasureFlow& flow) {
    MeanPath out{flow.grid(), std::vector<double>(flow.grid().points())};
    for (std::size_t k = 0; k < flow.grid().points(); ++k) {
        out.values[k] = flow.mean(k);
    }
    return out;
}

std::vector<double> excitation_path(const KernelSpec& kernel, const MeanPath& mean) {
    const TimeGrid& grid = mean.grid;
    const std::size_t steps = grid.steps();
    const double dt = grid.dt();
    const double h0 = kernel.value(0.0);
    const std::vector<double> dh = table(steps + 1, dt, 0.0, [&](double t) { return kernel.derivative(t); });
    std::vector<double> out(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            s += dh[k - j] * mean.values[j] + dh[k - j - 1] * mean.values[j + 1];
        }
        out[k] = h0 * mean.values[k] + 0.5 * dt * s - kernel.value(grid.time(k)) * mean.values[0];
    }
    return out;
}

std::vector<double> intensity_path(const ModelSpec& model, const MeanPath& mean) {
    std::vector<double> out = excitation_path(model.kernel, mean);
    for (double& v : out) {
        v = model.rate(v);
    }
    return out;
}

PerturbedLawResult solve_perturbed_law(const ModelSpec& model, const TiltField& tilt_in,
                                       const PerturbedLawOptions& options) {
    require_valid(model);
    const double horizon = model.horizon();
    if (!(options.dt > 0.0) || options.dt > horizon) {
        throw DomainError("perturbed-law step must lie in (0, T]");
    }
    if (!tilt_in.all_finite()) {
        throw DomainError("tilt field must be finite");
    }
    if (std::abs(tilt_in.grid().horizon() - horizon) > 1e-9 * horizon) {
        throw DomainError("tilt grid horizon does not match the model horizon");
    }
    if (!(options.clip > 0.0)) {
        throw DomainError("tilt clip must be positive");
    }
    const TiltField tilt = tilt_in.clipped(options.clip);
    const TimeGrid grid = TimeGrid::uniform(horizon, options.dt);
    const std::size_t steps = grid.steps();
    const double dt = grid.dt();
    const std::size_t n_max = options.n_max;
    const std::size_t levels = n_max + 1;
    const KernelSpec& kernel = model.kernel;
    const RateSpec& phi = model.rate;

    // State: f[0..n_max], overflow mass, mean (the mean also tracks jumps inside the overflow).
    const std::size_t dim = levels + 2;
    const std::size_t overflow = levels;
    const std::size_t mean_ix = levels + 1;

    const double h0 = kernel.value(0.0);
    const std::vector<double> d_full = table(steps + 2, dt, 0.0, [&](double t) { return kernel.derivative(t); });
    const std::vector<double> d_half = table(steps + 2, dt, 0.5, [&](double t) { return kernel.derivative(t); });

    PerturbedLawResult result;
    result.flow = MeasureFlow(grid, n_max);
    std::vector<double> mean_hist(steps + 1, 0.0);

    // \int_0^{t_k} h'(t_k + c dt - u) mean_u du over the stored history (trapezoid).
    auto history_conv = [&](std::size_t k, const std::vector<double>& lag_table, std::size_t shift) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            s += lag_table[k - j + shift] * mean_hist[j] + lag_table[k - j - 1 + shift] * mean_hist[j + 1];
        }
        return 0.5 * dt * s;
    };

    std::vector<double> y(dim, 0.0), k1(dim), k2(dim), k3(dim), k4(dim), stage(dim);
    y[0] = 1.0;
    result.flow(0, 0) = 1.0;
    std::vector<double> ev(levels + 1);

    auto rhs = [&](double lambda, const std::vector<double>& s, std::vector<double>& out) {
        double into = 0.0;
        double total = 0.0;
        for (std::size_t x = 0; x <= n_max; ++x) {
            const double flux = ev[x] * lambda * s[x];
            out[x] = into - flux;
            into = flux;
            total += flux;
        }
        const double tail_flux = ev[levels] * lambda * s[overflow];
        out[overflow] = into;
        out[mean_ix] = total + tail_flux;
    };

    for (std::size_t k = 0; k < steps; ++k) {
        const std::size_t cell = tilt.grid().cell_of(grid.time(k) + 0.5 * dt);
        for (std::size_t x = 0; x <= n_max; ++x) {
            ev[x] = std::exp(tilt(cell, x));
        }
        ev[levels] = std::exp(tilt.tail());

        const double conv0 = history_conv(k, d_full, 0);
        const double conv_half = history_conv(k, d_half, 0);
        const double conv_one = history_conv(k, d_full, 1);
        const double mk = mean_hist[k];
        // Stage intensities: grid history plus the partial panel [t_k, t_k + c dt].
        auto lambda_at = [&](double c, double stage_mean) {
            double conv = 0.0;
            if (c == 0.0) {
                conv = conv0;
            } else if (c == 0.5) {
                conv = conv_half + 0.25 * dt * (d_half[0] * mk + kernel.derivative(0.0) * stage_mean);
            } else {
                conv = conv_one + 0.5 * dt * (d_full[1] * mk + d_full[0] * stage_mean);
            }
            return phi(h0 * stage_mean + conv);
        };

        rhs(lambda_at(0.0, y[mean_ix]), y, k1);
        for (std::size_t i = 0; i < dim; ++i) {
            stage[i] = y[i] + 0.5 * dt * k1[i];
        }
        rhs(lambda_at(0.5, stage[mean_ix]), stage, k2);
        for (std::size_t i = 0; i < dim; ++i) {
            stage[i] = y[i] + 0.5 * dt * k2[i];
        }
        rhs(lambda_at(0.5, stage[mean_ix]), stage, k3);
        for (std::size_t i = 0; i < dim; ++i) {
            stage[i] = y[i] + dt * k3[i];
        }
        rhs(lambda_at(1.0, stage[mean_ix]), stage, k4);
        for (std::size_t i = 0; i < dim; ++i) {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        auto row = result.flow.row(k + 1);
        for (std::size_t x = 0; x <= n_max; ++x) {
            if (y[x] < -options.negativity_tolerance || !std::isfinite(y[x])) {
                std::ostringstream os;
                os << "forward equations became unstable at t = " << grid.time(k + 1) << ", x = " << x
                   << " (f = " << y[x] << "); halve dt";
                throw NumericError(os.str());
            }
            row[x] = std::max(0.0, y[x]);
        }
        mean_hist[k + 1] = y[mean_ix];

        double f_prev = 0.0;
        double f_next = 0.0;
        const auto prev = result.flow.row(k);
        for (std::size_t x = 0; x <= n_max; ++x) {
            f_prev += prev[x];
            f_next += row[x];
            if (f_next > f_prev + 1e-13) {
                ++result.monotonicity_violations;
            }
        }
    }

    result.terminal_deficit = std::max(0.0, result.flow.deficit(steps));
    if (result.terminal_deficit > options.deficit_tolerance) {
        std::ostringstream os;
        os << "terminal deficit " << result.terminal_deficit << " exceeds " << options.deficit_tolerance
           << "; increase n_max";
        throw NumericError(os.str());
    }
    result.mass_balance_residual = mass_balance_residual(result.flow, tilt, model);
    return result;
}

double mass_balance_residual(const MeasureFlow& flow, const TiltField& tilt, const ModelSpec& model) {
    const TimeGrid& grid = flow.grid();
    const MeanPath mean = lawbar(flow);
    const std::vector<double> lambda = intensity_path(model, mean);
    double integral = 0.0;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        const std::size_t cell = tilt.grid().cell_of(grid.time(k) + 0.5 * grid.dt());
        double a = 0.0;
        double b = 0.0;
        for (std::size_t x = 0; x <= flow.n_max(); ++x) {
            const double e = std::exp(tilt(cell, x));
            a += e * flow(k, x);
            b += e * flow(k + 1, x);
        }
        integral += 0.5 * grid.dt() * (lambda[k] * a + lambda[k + 1] * b);
    }
    const double target = mean.values.back();
    const double diff = std::abs(integral - target);
    return target > 0.0 ? diff / target : diff;
}

}  // namespace mfhawkes
