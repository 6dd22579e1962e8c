#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkv/local_solver.hpp"
#include "mkv/measure.hpp"
#include "mkv/model.hpp"
#include "mkv/tree.hpp"

namespace mkv {

enum class TopologyChoice {
    /// Recombining when the model has state-free dynamics, path otherwise.
    automatic,
    path,
    recombining,
};

TopologyChoice topology_choice_from_name(std::string_view name);

struct SolverConfig {
    std::size_t levels = 2;             // N
    std::size_t picard = 5;             // J
    std::size_t steps_per_period = 8;   // fine steps per period
    std::string scheme = "binomial";
    FixedPointSettings fixed_point{};
    TopologyChoice topology = TopologyChoice::automatic;
    /// Upper bound on projected node evaluations of a solve.
    std::size_t node_cap = 50'000'000;
    /// Keep the final period solution of every level call in its result.
    bool record_full = false;

    void validate() const;
};

/// Projected node evaluations exceed the configured cap.
class ResourceLimitError : public std::runtime_error {
public:
    ResourceLimitError(std::size_t projected, std::size_t cap);

    std::size_t projected() const noexcept { return projected_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t projected_;
    std::size_t cap_;
};

struct LevelResult {
    /// Y at depth 0, one value per incoming root.
    std::vector<double> y_at_roots;
    /// Per Picard iteration j = 1..J: max over depths of the L2 norm (node
    /// probabilities, observers excluded) of Y^j - Y^{j-1}. Empty at level N.
    std::vector<double> residuals;
    /// Same, restricted to the roots (depth 0).
    std::vector<double> root_residuals;
    /// Largest fixed-point sweep count of any slice, per Picard iteration.
    std::vector<std::size_t> fixed_point_iterations;
    /// Final (X, Y, Z) of this call when SolverConfig::record_full is set.
    std::optional<PeriodSolution> solution;
};

/// Emitted after every pass of a level call: the initial forward pass
/// (iteration 0, Y = Z = 0) and each Picard iteration.
struct PassEvent {
    std::size_t level;
    std::size_t iteration;
    const Lattice& lattice;
    const PeriodSolution& solution;
};

struct SolveStats {
    /// Node visits: each lattice counts once per forward or backward pass;
    /// each terminal-level root counts once.
    std::size_t node_evals = 0;
    std::size_t level_calls = 0;
    std::size_t local_solves = 0;
    std::size_t max_fixed_point_iterations = 0;
};

struct U0Result {
    double value = 0.0;
    /// Support point of the initial law nearest to x.
    Point matched_root;
    /// min over the support of |y - x|, the first term of the quantization error.
    double nearest_distance = 0.0;
    /// True when x is off the support and was evaluated through an observer root.
    bool used_observer = false;
    LevelResult top;
};

/**
 * Recursive multi-level Picard solver on [0, T] split into `levels` periods.
 *
 * The level-k solve runs J Picard iterations on a period-k lattice; each
 * iteration takes its terminal values from the level-(k+1) solve started at
 * the current forward leaves. The last level returns g at its roots.
 */
class MultilevelSolver {
public:
    MultilevelSolver(const CoefficientModel& model, double horizon, SolverConfig config);

    const SolverConfig& config() const noexcept { return config_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    LatticeTopology topology() const noexcept { return topology_; }
    const SolveStats& stats() const noexcept { return stats_; }
    void reset_stats() { stats_ = {}; }

    void set_trace(std::function<void(const PassEvent&)> trace) { trace_ = std::move(trace); }

    /// Sol_k at the given roots. Throws ResourceLimitError before doing any
    /// work if the projected node evaluations exceed the cap.
    LevelResult solve_level(std::size_t level, const std::vector<Root>& roots);

    /// Approximation of U(0, x, mu): runs the level-0 solve on the atoms of mu,
    /// attaching an observer root at x when x is off the support.
    U0Result evaluate_u0(const Point& x, const DiscreteMeasure& mu);

    /// Node evaluations a solve_level(level, ...) call on `roots` roots will perform.
    std::size_t projected_node_evals(std::size_t level, std::size_t roots) const;

private:
    LevelResult solve_recursive(std::size_t level, const std::vector<Root>& roots);
    LevelResult terminal_level(const std::vector<Root>& roots);

    const CoefficientModel& model_;
    SolverConfig config_;
    TimeGrid grid_;
    IncrementScheme scheme_;
    LatticeTopology topology_;
    SolveStats stats_;
    std::function<void(const PassEvent&)> trace_;
};

}  // namespace mkv
