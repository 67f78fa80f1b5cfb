#ifndef MFHAWKES_TESTS_ORACLES_HPP
#define MFHAWKES_TESTS_ORACLES_HPP

// Independent reference computations used by the test suites. None of these
// call into the library's numerical code paths.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mfhawkes/kernel.hpp"
#include "mfhawkes/types.hpp"

namespace oracle {

/// Optimal transport cost sum |i - j| pi_ij over couplings of nu and mu,
/// solved as a dense linear program (two-phase simplex, Bland's rule).
double w1_coupling_lp(std::span<const double> nu, std::span<const double> mu);

/// P(Poisson(lambda) >= k).
double poisson_upper_tail(double lambda, std::size_t k);

/// P(Poisson(lambda) = k).
double poisson_pmf(double lambda, std::size_t k);

/// Jump-count histogram at T of a single (N = 1) component advanced by an
/// explicit Euler scheme: on each step of length dt the component jumps with
/// probability 1 - exp(-e^{tilt(t, Z)} phi(S) dt). Uses std::mt19937_64.
std::vector<double> euler_count_pmf(const mfhawkes::ModelSpec& model, const mfhawkes::TiltField* tilt,
                                    double dt, std::size_t reps, std::uint64_t seed, std::size_t n_max);

/// Total variation distance between two pmfs (zero padded).
double total_variation(std::span<const double> p, std::span<const double> q);

/// Normalized histogram of integer samples on {0..n_max}; larger values go to n_max.
std::vector<double> histogram(std::span<const std::size_t> counts, std::size_t n_max);

/// Pearson chi-square p-value for observed counts against expected
/// probabilities; bins with expected count below 5 are pooled into a tail bin.
double chi_square_p_value(std::span<const std::size_t> observed, std::span<const double> probs);

/// Two-sample Kolmogorov-Smirnov asymptotic p-value.
double ks_two_sample_p_value(std::vector<double> a, std::vector<double> b);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};
MeanSe mean_se(std::span<const double> xs);

}  // namespace oracle

#endif  // MFHAWKES_TESTS_ORACLES_HPP
