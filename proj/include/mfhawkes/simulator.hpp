#ifndef MFHAWKES_SIMULATOR_HPP
#define MFHAWKES_SIMULATOR_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "mfhawkes/kernel.hpp"
#include "mfhawkes/types.hpp"

namespace mfhawkes {

struct SimConfig {
    ModelSpec model;
    std::size_t N = 1;
    std::uint64_t seed = 0;
    double safety = 1.0;                           // majorant multiplier gamma >= 1
    std::uint64_t max_candidates = 100'000'000;    // per run
};

struct SimStats {
    std::uint64_t candidates = 0;
    std::uint64_t accepted = 0;
    /// Candidates whose intensity exceeded the majorant; zero for a valid majorant.
    std::uint64_t majorant_violations = 0;
};

struct SimResult {
    EventPaths paths;
    /// log dP^0/dP^tilt on the realized path; exactly 0 for an untilted run.
    double log_rn = 0.0;
    SimStats stats;
};

/// Exact simulation of the N-dimensional mean-field system by thinning.
/// Uses replicate stream 0 of cfg.seed.
EventPaths simulate(const SimConfig& cfg);

/// Tilted system: component i jumps at rate e^{v(s, Z^i_{s-})} phi(excitation).
SimResult simulate_tilted(const SimConfig& cfg, const TiltField& tilt);

/// Replicate `replicate` of cfg.seed; `tilt` may be null (untilted).
SimResult simulate_replicate(const SimConfig& cfg, const TiltField* tilt, std::uint64_t replicate);

/// One path of the tilted limit particle with intensity
/// e^{v(s, Z_{s-})} phi(\int h(s-u) d lawbar_u); returns its jump times.
std::vector<double> simulate_mckean_vlasov_tilted(const ModelSpec& model, const TiltField& tilt,
                                                  const MeanPath& lawbar, std::uint64_t seed,
                                                  std::uint64_t replicate = 0);

/// Zbar^N_t = N^{-1} sum_i #{jumps of i <= t} on the grid.
MeanPath mean_process(const EventPaths& paths, const TimeGrid& grid);

/// L^N(t, {x}) on the grid. Throws OverflowError when a count exceeds n_max.
MeasureFlow empirical_measure(const EventPaths& paths, const TimeGrid& grid, std::size_t n_max);

/// log of the exponential martingale E_T^{N, psi} on the path (psi gridded
/// like a TiltField).
double exp_martingale_log_weight(const EventPaths& paths, const ModelSpec& model, const TiltField& psi);

inline double exp_martingale_weight(const EventPaths& paths, const ModelSpec& model, const TiltField& psi) {
    return std::exp(exp_martingale_log_weight(paths, model, psi));
}
}  // namespace mfhawkes

#endif  // MFHAWKES_SIMULATOR_HPP
