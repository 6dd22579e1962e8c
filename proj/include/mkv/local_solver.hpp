#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkv/model.hpp"
#include "mkv/tree.hpp"

namespace mkv {

/// Stopping rule of the implicit slice equation.
struct FixedPointSettings {
    double tolerance = 1e-12;
    std::size_t max_iterations = 100;

    void validate() const;
};

/// The implicit backward step did not reach its tolerance.
class FixedPointDivergence : public std::runtime_error {
public:
    FixedPointDivergence(std::size_t slice, double residual, const std::string& context = {});

    std::size_t slice() const noexcept { return slice_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t slice_;
    double residual_;
};

/// A coefficient evaluated to a non-finite value.
class NonFiniteValue : public std::runtime_error {
public:
    NonFiniteValue(std::size_t depth, std::size_t node, const std::string& what);

    std::size_t depth() const noexcept { return depth_; }
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t depth_;
    std::size_t node_;
};

/// Per-depth node values of a process on one period, depths 0..n.
using Slices = std::vector<SliceValues>;

/// Output (X, Y, Z) of one backward/forward pass on a period lattice.
struct PeriodSolution {
    Slices x;
    Slices y;
    Slices z;
    /// Fixed-point sweeps used by the implicit step at each depth 0..n-1.
    std::vector<std::size_t> fixed_point_iterations;
};

struct BackwardResult {
    Slices y;
    Slices z;
    std::vector<std::size_t> fixed_point_iterations;
};

/**
 * Backward pass on `lattice` with input forward process `input_x` and
 * terminal values `terminal_y` at the last depth.
 *
 * Z_i = h^{-1/2} E_i[w Y_{i+1}], and Y_i solves, jointly over all nodes of the
 * slice, Y_i = E_i[Y_{i+1}] + h f(X_i, Y_i, Z_i, L(X_i, Y_i)). The implicit
 * equation is iterated from Y_i = E_i[Y_{i+1}] until the sup-norm update
 * falls below the tolerance. The terminal Z slice is zero.
 */
BackwardResult backward_pass(const Slices& input_x, const SliceValues& terminal_y, const CoefficientModel& model,
                             double h, const Lattice& lattice, const FixedPointSettings& fp);

/// Forward Euler pass X_{i+1} = X_i + b(X_i, Y_i, L(X_i, Y_i)) h + sigma(X_i, L(X_i)) sqrt(h) w,
/// starting from `x0` at depth 0. `y` holds one slice per depth 0..n-1 (at least).
Slices forward_pass(const SliceValues& x0, const Slices& y, const CoefficientModel& model, double h,
                    const Lattice& lattice);

/// Forward pass with Y = 0 everywhere, starting at the root points.
Slices initial_forward(const CoefficientModel& model, double h, const Lattice& lattice);

/// One Picard pass: backward pass against `input_x`, then forward pass from
/// input_x at depth 0 driven by the new Y.
PeriodSolution local_solve(const Slices& input_x, const SliceValues& terminal_y, const CoefficientModel& model,
                           double h, const Lattice& lattice, const FixedPointSettings& fp);

/// Root points of `lattice` as a depth-0 slice.
SliceValues root_slice(const Lattice& lattice);

}  // namespace mkv
