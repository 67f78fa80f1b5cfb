#ifndef MFHAWKES_RATE_HPP
#define MFHAWKES_RATE_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "mfhawkes/kernel.hpp"
#include "mfhawkes/types.hpp"

namespace mfhawkes {

struct RateOptions {
    double eps_num = 1e-10;    // mass-motion threshold (per unit time)
    double eps_floor = 1e-12;  // support floor
    /// recover_tilt reports the zero convention on cells whose mass stays
    /// below this; the outflow there is not resolvable from double-precision CDFs.
    double resolve_floor = 1e-9;
    int substeps = 64;         // within-cell reconstruction resolution
};

struct AcWitness {
    double t = 0.0;
    std::size_t x = 0;
};

/// G(t, x) on each grid cell of a flow, with the per-cell quantities it was
/// solved from: W = \int_cell Lambda f dt and outflow = \int_cell (-d_t F) dt.
///
/// G is the constant per-cell value for which the forward equations with jump
/// rate G * Lambda reproduce the flow's row at the end of the cell.
struct GField {
    TimeGrid grid;
    std::size_t n_max = 0;
    std::vector<double> G;
    std::vector<double> W;
    std::vector<double> outflow;
    std::optional<AcWitness> violation;

    std::size_t levels() const noexcept { return n_max + 1; }
    double operator()(std::size_t cell, std::size_t x) const noexcept { return G[cell * levels() + x]; }
    double weight(std::size_t cell, std::size_t x) const noexcept { return W[cell * levels() + x]; }
    double out(std::size_t cell, std::size_t x) const noexcept { return outflow[cell * levels() + x]; }
};

/// Never throws on absolute-continuity failure; the first witness is stored.
GField compute_G(const MeasureFlow& flow, const ModelSpec& model, const RateOptions& options = {});

struct RateReport {
    double value = 0.0;  // +inf on AC violation
    bool ac_violation = false;
    std::optional<AcWitness> witness;
    /// (G log G - G + 1) * W per cell and level.
    std::vector<double> integrand;
    /// |sum G W - lawbar(T)| / lawbar(T).
    double mass_balance_residual = 0.0;
};

RateReport rate_I(const MeasureFlow& flow, const ModelSpec& model, const RateOptions& options = {});

struct RecoveredTilt {
    /// log G; 0 on empty or unresolved cells, -inf where G = 0.
    TiltField tilt;
    std::size_t minus_infinity_cells = 0;
    std::size_t unresolved_cells = 0;
};

/// Throws AcViolationError carrying the witness.
RecoveredTilt recover_tilt(const MeasureFlow& flow, const ModelSpec& model, const RateOptions& options = {});

/// J(psi) = sum over cells and x of psi * outflow - (e^psi - 1) * W.
double variational_J(const MeasureFlow& flow, const ModelSpec& model, const TiltField& psi,
                     const RateOptions& options = {});

/// x log(x / y) - x + y, with ell(0; y) = y. Throws DomainError unless x >= 0, y > 0.
double ell(double x, double y);

/// \int_0^T ell(eta'; phi(\int h(t - s) d eta_s)) dt, with eta' constant per
/// cell and ell trapezoid-averaged over the cell's end intensities.
/// +inf if eta decreases anywhere.
double rate_mean_process(const MeanPath& eta, const ModelSpec& model);

struct EndpointOptions {
    int max_iterations = 20000;
    double tolerance = 1e-8;   // duality gap; bounds value - optimum, round-off floor near 1e-9
};

struct EndpointMinimum {
    MeanPath eta;
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Minimizes rate_mean_process over nondecreasing gridded eta with eta(0) = 0,
/// eta(T) = a (a >= m(T)) by exponentiated-gradient descent on the increments.
EndpointMinimum minimize_rate_endpoint(double a, const ModelSpec& model, const TimeGrid& grid,
                                       const EndpointOptions& options = {});

}  // namespace mfhawkes

#endif  // MFHAWKES_RATE_HPP
