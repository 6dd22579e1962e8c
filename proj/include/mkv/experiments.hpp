#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkv/measure.hpp"
#include "mkv/model.hpp"
#include "mkv/multilevel.hpp"
#include "mkv/tree.hpp"

namespace mkv {

/// Closed-form Y_0 of the linear model when E[X_0] = m0:
/// m0 e^{aT} / (1 + (rho/a)(e^{aT} - 1)), and m0 / (1 + rho T) when a = 0.
double linear_reference(double m0, double rho, double a, double horizon);

/// Closed-form U(0, x, mu) of the linear model for an initial law with mean m0:
/// e^{aT} (x - rho Y_0 (1 - e^{-aT}) / a), Y_0 = linear_reference(m0, ...).
double linear_reference_at(double x, double m0, double rho, double a, double horizon);

/// Slice means of one pass of a level call, as the solver would produce them.
struct MeansPass {
    std::size_t level = 0;
    std::size_t iteration = 0;
    std::vector<double> x_mean;
    std::vector<double> y_mean;
};

struct MeansTrace {
    std::vector<MeansPass> passes;  // in the solver's call order
    double value = 0.0;             // mean of Y at the level-0 roots
};

/**
 * Means-only replay of the multilevel schedule for the linear model.
 *
 * Because b, f and g are affine and sigma is constant, the slice means of the
 * tree scheme obey m^Y_i = m^Y_{i+1} / (1 - a h) and m^X_{i+1} = m^X_i - rho h m^Y_i
 * exactly; the recursion over levels and Picard iterations mirrors the
 * solver. Throws std::invalid_argument if 1 - a h <= 0.
 */
MeansTrace linear_means_oracle(double rho, double a, const TimeGrid& grid, std::size_t picard, double m0);

struct PdeOracleSettings {
    double half_width = 10.0;      // domain [-L, L]
    std::size_t space_steps = 2000;
    /// 0 picks the largest stable step below the diffusion bound.
    std::size_t time_steps = 0;
};

class StabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * u(0, x) for u_t + rho cos(u) u_x + sigma^2/2 u_xx = 0, u(T, .) = sin, by an
 * explicit centered finite-difference scheme on [-L, L] with boundary values
 * sin(+-L) e^{-sigma^2 (T - t) / 2}. Throws StabilityError if the time step
 * breaks the explicit stability bounds.
 */
double no_mkv_pde_oracle(double rho, double sigma, double horizon, double x, const PdeOracleSettings& settings = {});

struct ErrorReport {
    std::string model;
    SolverConfig config;
    double estimate = 0.0;
    std::optional<double> reference;
    std::optional<double> abs_error;
    double runtime_ms = 0.0;
    std::vector<double> picard_residuals;
    std::size_t max_fixed_point_iterations = 0;
    std::size_t node_evals = 0;
};

struct ConvergenceStudy {
    std::vector<ErrorReport> reports;
    /// Least-squares slope of log10(error) against log10(steps_per_period).
    std::optional<double> slope;
};

/// Reference value for a given solver configuration, if any.
using ReferenceFn = std::function<std::optional<double>(const SolverConfig&)>;

/// Runs evaluate_u0 once per entry of `steps`, reusing `base` otherwise.
ConvergenceStudy run_convergence_study(const CoefficientModel& model, double horizon, const Point& x,
                                       const DiscreteMeasure& mu, const SolverConfig& base,
                                       const std::vector<std::size_t>& steps, const ReferenceFn& reference = {});

/// Least-squares slope of log10(y) against log10(x), skipping non-positive y.
std::optional<double> log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

struct SweepRow {
    double rho = 0.0;
    double one_level_value = 0.0;
    double two_level_value = 0.0;
    double one_level_residual = 0.0;
    double two_level_residual = 0.0;
    bool one_level_converged = false;
    bool two_level_converged = false;
    std::optional<double> reference;
    std::size_t node_evals = 0;
    double runtime_ms = 0.0;
};

/// One-level counterpart of a multi-level configuration on the same fine
/// grid and with the same complexity budget: N = 1, J^N Picard iterations,
/// N * steps_per_period steps.
SolverConfig matched_one_level(const SolverConfig& multi_level);

using ModelFamily = std::function<std::unique_ptr<CoefficientModel>(double rho)>;
using SweepReferenceFn = std::function<std::optional<double>(double rho)>;

/**
 * Compares the one-level and multi-level solvers over a grid of coupling
 * parameters. A run converged when its last top-level Picard residual is
 * below `threshold`; runs that fail (divergent fixed point, non-finite
 * values) are recorded as not converged with NaN values.
 */
std::vector<SweepRow> run_coupling_sweep(const ModelFamily& family, const std::vector<double>& rhos, double horizon,
                                         const Point& x, const DiscreteMeasure& mu, const SolverConfig& one_level,
                                         const SolverConfig& two_level, double threshold = 1e-6,
                                         const SweepReferenceFn& reference = {});

}  // namespace mkv
