#ifndef MFHAWKES_MEANFIELD_HPP
#define MFHAWKES_MEANFIELD_HPP

#include <cstddef>
#include <vector>

#include "mfhawkes/kernel.hpp"
#include "mfhawkes/types.hpp"

namespace mfhawkes {

/// Quadrature used to discretize m_t = \int_0^t phi(\int_0^s h(s-u) dm_u) ds.
enum class VolterraQuadrature {
    LeftEndpoint,  // first order
    Trapezoid,     // second order
};

struct MeanLimitOptions {
    double dt = 1e-3;
    VolterraQuadrature quadrature = VolterraQuadrature::Trapezoid;
    double tolerance = 1e-10;  // sup-norm change between Picard iterates
    int max_iterations = 200;
};

struct MeanLimitResult {
    MeanPath path;
    int iterations = 0;
    /// sup_k |m^{(n+1)}_k - m^{(n)}_k| for each Picard iteration n.
    std::vector<double> increments;
};

/// Picard iteration for the mean-field limit m_t on a uniform grid.
/// Throws NumericError if the iteration cap is hit.
MeanLimitResult solve_mean_limit(const ModelSpec& model, const MeanLimitOptions& options = {});

/// Poisson(m_t) marginals. Throws NumericError when the truncation deficit
/// exceeds `deficit_tolerance`.
MeasureFlow mean_field_law(const MeanPath& m, std::size_t n_max, double deficit_tolerance = 1e-9);

struct PerturbedLawOptions {
    double dt = 1e-3;
    std::size_t n_max = 30;
    double clip = 30.0;                 // tilts are clipped to [-clip, clip]
    double deficit_tolerance = 1e-6;    // at t = T
    double negativity_tolerance = 1e-12;
};

struct PerturbedLawResult {
    MeasureFlow flow;
    double terminal_deficit = 0.0;
    /// Grid points where F(t, x) increased in t beyond round-off.
    std::size_t monotonicity_violations = 0;
    /// Relative residual of \int_0^T sum_x e^{v} Lambda f ds = mean(T).
    double mass_balance_residual = 0.0;
};

/// Forward equations of the tilted limit law, advanced with classical RK4;
/// Lambda(t) = phi(\int h(t-u) d mean_u) is recomputed at every stage from the
/// accumulated mean history. Throws NumericError on deficit breach or
/// negative mass.
PerturbedLawResult solve_perturbed_law(const ModelSpec& model, const TiltField& tilt,
                                       const PerturbedLawOptions& options = {});

/// Row means t -> sum_x x f(t, x).
MeanPath lawbar(const MeasureFlow& flow);

/// \int_0^{t_k} h(t_k - u) d mean_u at every grid point, by parts:
/// h(0) mean_t + \int_0^t h'(t - u) mean_u du (mean_0 = 0), trapezoid rule.
std::vector<double> excitation_path(const KernelSpec& kernel, const MeanPath& mean);

/// phi(excitation_path) at every grid point.
std::vector<double> intensity_path(const ModelSpec& model, const MeanPath& mean);

/// Relative residual |\int_0^T sum_x e^{v(s,x)} Lambda(s) f(s,x) ds - mean_T| / mean_T
/// for a flow and the tilt that produced it (trapezoid per cell).
double mass_balance_residual(const MeasureFlow& flow, const TiltField& tilt, const ModelSpec& model);

}  // namespace mfhawkes

#endif  // MFHAWKES_MEANFIELD_HPP
