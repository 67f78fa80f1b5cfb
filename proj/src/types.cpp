#include "mfhawkes/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfhawkes/errors.hpp"

namespace mfhawkes {

TimeGrid::TimeGrid(double dt, std::size_t steps) : dt_(dt), steps_(steps) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw DomainError("grid step must be positive");
    }
    if (steps == 0) {
        throw DomainError("grid needs at least one step");
    }
}

TimeGrid TimeGrid::uniform(double horizon, double dt) {
    if (!(horizon > 0.0) || !(dt > 0.0) || dt > horizon) {
        throw DomainError("grid step must lie in (0, horizon]");
    }
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(horizon / dt)));
    return TimeGrid(horizon / static_cast<double>(steps), steps);
}

std::size_t TimeGrid::cell_of(double t) const noexcept {
    if (!(t > 0.0)) {
        return 0;
    }
    const auto k = static_cast<std::size_t>(std::floor(t / dt_));
    return std::min(k, steps_ - 1);
}

double MeanPath::at(double t) const noexcept {
    if (t <= 0.0) {
        return values.front();
    }
    if (t >= grid.horizon()) {
        return values.back();
    }
    const std::size_t k = grid.cell_of(t);
    const double w = (t - grid.time(k)) / grid.dt();
    return values[k] + w * (values[k + 1] - values[k]);
}

MeasureFlow::MeasureFlow(TimeGrid grid, std::size_t n_max)
    : grid_(grid), n_max_(n_max), pmf_(grid.points() * (n_max + 1), 0.0) {}

double MeasureFlow::mass(std::size_t k) const noexcept {
    double s = 0.0;
    for (double v : row(k)) {
        s += v;
    }
    return s;
}

double MeasureFlow::max_deficit() const noexcept {
    double d = 0.0;
    for (std::size_t k = 0; k < grid_.points(); ++k) {
        d = std::max(d, deficit(k));
    }
    return d;
}

double MeasureFlow::mean(std::size_t k) const noexcept {
    double s = 0.0;
    const auto r = row(k);
    for (std::size_t x = 1; x < r.size(); ++x) {
        s += static_cast<double>(x) * r[x];
    }
    return s;
}

double MeasureFlow::cdf(std::size_t k, std::size_t x) const noexcept {
    double s = 0.0;
    const auto r = row(k);
    for (std::size_t y = 0; y <= std::min(x, n_max_); ++y) {
        s += r[y];
    }
    return s;
}

MeasureFlow MeasureFlow::padded(std::size_t n_max) const {
    if (n_max < n_max_) {
        throw DomainError("padded() cannot shrink the support");
    }
    MeasureFlow out(grid_, n_max);
    for (std::size_t k = 0; k < grid_.points(); ++k) {
        std::copy(row(k).begin(), row(k).end(), out.row(k).begin());
    }
    return out;
}

TiltField::TiltField(TimeGrid grid, std::size_t n_max, double tail)
    : grid_(grid), n_max_(n_max), tail_(tail), values_(grid.steps() * (n_max + 1), 0.0) {}

TiltField TiltField::constant(TimeGrid grid, double value) {
    TiltField f(grid, 0, value);
    std::fill(f.values_.begin(), f.values_.end(), value);
    return f;
}

double TiltField::cell_max(std::size_t cell) const noexcept {
    double m = tail_;
    for (std::size_t x = 0; x <= n_max_; ++x) {
        m = std::max(m, (*this)(cell, x));
    }
    return m;
}

double TiltField::sup_abs() const noexcept {
    double m = std::abs(tail_);
    for (double v : values_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

bool TiltField::all_finite() const noexcept {
    return std::isfinite(tail_) &&
           std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

TiltField TiltField::clipped(double bound) const {
    TiltField out = *this;
    auto clip = [bound](double v) { return std::clamp(v, -bound, bound); };
    for (double& v : out.values_) {
        v = clip(v);
    }
    out.tail_ = clip(tail_);
    return out;
}

double TiltField::exp_integrability() const noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < cells(); ++k) {
        s += grid_.dt() * std::exp(cell_max(k));
    }
    return s;
}

EventPaths::EventPaths(std::size_t n, double horizon_, std::uint64_t seed_)
    : N(n), horizon(horizon_), seed(seed_), times(n) {}

std::size_t EventPaths::total_events() const noexcept {
    std::size_t s = 0;
    for (const auto& c : times) {
        s += c.size();
    }
    return s;
}

std::size_t EventPaths::max_count() const noexcept {
    std::size_t m = 0;
    for (const auto& c : times) {
        m = std::max(m, c.size());
    }
    return m;
}

std::vector<EventPaths::Event> EventPaths::merged() const {
    std::vector<Event> out;
    out.reserve(total_events());
    for (std::size_t i = 0; i < times.size(); ++i) {
        for (double t : times[i]) {
            out.push_back({t, static_cast<std::uint32_t>(i)});
        }
    }
    std::sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
        return a.time < b.time || (a.time == b.time && a.component < b.component);
    });
    return out;
}

}  // namespace mfhawkes
