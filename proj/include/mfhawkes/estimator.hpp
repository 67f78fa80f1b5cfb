#ifndef MFHAWKES_ESTIMATOR_HPP
#define MFHAWKES_ESTIMATOR_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mfhawkes/kernel.hpp"
#include "mfhawkes/simulator.hpp"
#include "mfhawkes/types.hpp"

namespace mfhawkes {

/// Sum_x |F_nu(x) - F_mu(x)|; the shorter pmf is zero-padded. Throws
/// DomainError if either input is negative or does not sum to 1 within 1e-9.
double w1_discrete(std::span<const double> nu, std::span<const double> mu);

/// max over grid rows of w1_discrete. Throws DomainError on grid mismatch;
/// supports of different sizes are zero-padded.
double w1_flow_sup(const MeasureFlow& a, const MeasureFlow& b);

/// Zbar^N_at >= a (counted as total jumps >= a N).
struct MeanExceeds {
    double a = 0.0;
    double at = 1.0;
};

/// sup_t W1(L^N_t, center_t) < radius.
struct W1Ball {
    MeasureFlow center;
    double radius = 1.0;
};

struct EventSpec {
    std::variant<MeanExceeds, W1Ball> kind;
    std::string description;
};

bool event_occurs(const EventSpec& spec, const EventPaths& paths);

enum class Method { Naive, Importance };

struct Estimate {
    double p_hat = 0.0;
    double log_p_hat = 0.0;   // -inf when p_hat = 0
    double std_err = 0.0;
    std::size_t reps = 0;
    std::size_t hits = 0;
    Method method = Method::Naive;
    double ess = 0.0;                 // effective sample size of the hit weights
    double weight_mean = 1.0;         // mean of e^{logRN} over all replicates
    double weight_std_err = 0.0;
    std::vector<std::string> flags;   // "zero_hits", "low_ess"

    bool has_flag(const std::string& f) const;
};

std::string method_name(Method m);

/// reps >= 100. Replicate r uses stream (cfg.seed, r).
Estimate estimate_naive(const EventSpec& spec, const SimConfig& cfg, std::size_t reps, std::size_t threads = 0);

/// Mean of 1{event} e^{logRN} over tilted replicates.
Estimate estimate_importance(const EventSpec& spec, const SimConfig& cfg, const TiltField& tilt,
                             std::size_t reps, std::size_t threads = 0);

/// Constant tilt log(a / m(at)) on [0, T] (zero when a <= 0).
TiltField cramer_tilt(const MeanExceeds& event, const ModelSpec& model);

struct DecayPoint {
    std::size_t N = 0;
    Estimate estimate;
    double neg_log_p = 0.0;
    double residual = 0.0;
};

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<DecayPoint> points;
};

/// Least squares of -log p_hat(N) on N. Each N is estimated with seed
/// mix_key(seed, N); `tilt` null selects the Cramer tilt for MeanExceeds events
/// and plain sampling otherwise. Throws NumericError listing every N whose
/// estimate has fewer than 10 hits or effective samples.
DecayFit decay_rate_fit(const EventSpec& spec, const ModelSpec& model, const std::vector<std::size_t>& Ns,
                        std::size_t reps, const TiltField* tilt, std::uint64_t seed, std::size_t threads = 0);

struct LlnRow {
    std::size_t N = 0;
    double mean_w1 = 0.0;
    double std_err = 0.0;
    std::size_t reps = 0;
};

/// Per N, the average over reps of sup_t W1(L^N_t, Poisson(m_t)).
std::vector<LlnRow> lln_study(const ModelSpec& model, const std::vector<std::size_t>& Ns, std::size_t reps,
                              const TimeGrid& grid, std::size_t n_max, std::uint64_t seed,
                              std::size_t threads = 0);

}  // namespace mfhawkes

#endif  // MFHAWKES_ESTIMATOR_HPP
