#ifndef MFHAWKES_TYPES_HPP
#define MFHAWKES_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mfhawkes {

/// Uniform grid 0 = t_0 < ... < t_K = T with step dt.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double dt, std::size_t steps);

    /// Grid on [0, horizon] whose step is the closest to `dt` that divides the horizon.
    static TimeGrid uniform(double horizon, double dt);

    double dt() const noexcept { return dt_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t points() const noexcept { return steps_ + 1; }
    double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt_; }
    double horizon() const noexcept { return time(steps_); }
    /// Cell k covers [t_k, t_{k+1}); t = T maps to the last cell.
    std::size_t cell_of(double t) const noexcept;

    bool operator==(const TimeGrid& o) const noexcept { return dt_ == o.dt_ && steps_ == o.steps_; }

private:
    double dt_ = 1.0;
    std::size_t steps_ = 0;
};

/// Nondecreasing path on grid points (m_t, mean processes, eta).
struct MeanPath {
    TimeGrid grid;
    std::vector<double> values;

    double at(double t) const noexcept;  // linear interpolation
    double terminal() const noexcept { return values.back(); }
};

/// Time-gridded pmf over {0..n_max}; row k is the law at t_k. Mass above n_max
/// is not stored and shows up as the row deficit.
class MeasureFlow {
public:
    MeasureFlow() = default;
    MeasureFlow(TimeGrid grid, std::size_t n_max);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t n_max() const noexcept { return n_max_; }
    std::size_t levels() const noexcept { return n_max_ + 1; }

    std::span<const double> row(std::size_t k) const noexcept {
        return {pmf_.data() + k * levels(), levels()};
    }
    std::span<double> row(std::size_t k) noexcept { return {pmf_.data() + k * levels(), levels()}; }
    double operator()(std::size_t k, std::size_t x) const noexcept { return pmf_[k * levels() + x]; }
    double& operator()(std::size_t k, std::size_t x) noexcept { return pmf_[k * levels() + x]; }

    double mass(std::size_t k) const noexcept;
    double deficit(std::size_t k) const noexcept { return 1.0 - mass(k); }
    double max_deficit() const noexcept;
    double mean(std::size_t k) const noexcept;
    double cdf(std::size_t k, std::size_t x) const noexcept;

    /// Same law with zero-padded support up to n_max (n_max >= current).
    MeasureFlow padded(std::size_t n_max) const;

    const std::vector<double>& data() const noexcept { return pmf_; }

private:
    TimeGrid grid_;
    std::size_t n_max_ = 0;
    std::vector<double> pmf_;
};

/// Gridded function v(t, x): constant in t on each grid cell [t_k, t_{k+1}),
/// defined for x in {0..n_max}, with `tail` used for x > n_max.
class TiltField {
public:
    TiltField() = default;
    TiltField(TimeGrid grid, std::size_t n_max, double tail = 0.0);

    static TiltField constant(TimeGrid grid, double value);
    static TiltField zero(TimeGrid grid) { return constant(grid, 0.0); }

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t cells() const noexcept { return grid_.steps(); }
    std::size_t n_max() const noexcept { return n_max_; }
    std::size_t levels() const noexcept { return n_max_ + 1; }
    double tail() const noexcept { return tail_; }
    void set_tail(double v) noexcept { tail_ = v; }

    double operator()(std::size_t cell, std::size_t x) const noexcept {
        return x <= n_max_ ? values_[cell * levels() + x] : tail_;
    }
    // Levels above n_max alias the shared tail value.
    double& operator()(std::size_t cell, std::size_t x) noexcept {
        return x <= n_max_ ? values_[cell * levels() + x] : tail_;
    }
    double at(double t, std::size_t x) const noexcept { return (*this)(grid_.cell_of(t), x); }

    /// max over x (including the tail) of the cell's values.
    double cell_max(std::size_t cell) const noexcept;
    double sup_abs() const noexcept;
    bool all_finite() const noexcept;
    /// ((-bound) v value) ^ bound, with -inf mapped to -bound.
    TiltField clipped(double bound) const;
    /// \sum_k dt * exp(max_x v(t_k, x)): finite-grid exponential-integrability proxy.
    double exp_integrability() const noexcept;

    const std::vector<double>& data() const noexcept { return values_; }

private:
    TimeGrid grid_;
    std::size_t n_max_ = 0;
    double tail_ = 0.0;
    std::vector<double> values_;
};

/// One realization of the N-dimensional process: per-component jump times in (0, T].
struct EventPaths {
    std::size_t N = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> times;

    struct Event {
        double time;
        std::uint32_t component;
    };

    EventPaths() = default;
    EventPaths(std::size_t n, double horizon, std::uint64_t seed);

    std::size_t total_events() const noexcept;
    std::size_t max_count() const noexcept;
    /// All events merged and sorted by time.
    std::vector<Event> merged() const;
};

}  // namespace mfhawkes

#endif  // MFHAWKES_TYPES_HPP
