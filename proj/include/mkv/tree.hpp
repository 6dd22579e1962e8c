#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mkv/measure.hpp"

namespace mkv {

/**
 * One-dimensional quantization of a normalized Gaussian increment: a
 * centered, unit-variance distribution on finitely many values.
 * Multi-dimensional noise uses the product of independent copies.
 */
struct IncrementScheme {
    std::vector<double> values;
    std::vector<double> probs;

    static IncrementScheme binomial();
    static IncrementScheme trinomial();
    /// "binomial" or "trinomial".
    static IncrementScheme by_name(std::string_view name);

    std::size_t size() const noexcept { return values.size(); }
    double max_abs() const;
    /// Throws std::invalid_argument unless the scheme is a centered,
    /// unit-variance probability distribution.
    void validate() const;
};

/// Coarse periods [r_k, r_{k+1}] of length T/N, each split into
/// `steps_per_period` equal fine steps.
struct TimeGrid {
    double horizon = 1.0;
    std::size_t periods = 1;
    std::size_t steps_per_period = 1;

    TimeGrid(double horizon, std::size_t periods, std::size_t steps_per_period);

    double period_length() const noexcept { return horizon / static_cast<double>(periods); }
    double step() const noexcept { return period_length() / static_cast<double>(steps_per_period); }
    /// r_k.
    double coarse_time(std::size_t k) const noexcept { return period_length() * static_cast<double>(k); }
    /// Index j_k of r_k among the fine nodes.
    std::size_t coarse_index(std::size_t k) const noexcept { return k * steps_per_period; }
    double fine_time(std::size_t i) const noexcept { return step() * static_cast<double>(i); }
    std::size_t total_steps() const noexcept { return periods * steps_per_period; }
};

/// Branches of one step for d-dimensional noise: every tuple of 1-D outcomes,
/// tuple digits read most-significant first.
class BranchSet {
public:
    BranchSet(const IncrementScheme& scheme, std::size_t dim);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return probs_.size(); }
    double prob(std::size_t b) const { return probs_[b]; }
    std::span<const double> increment(std::size_t b) const { return {increments_.data() + b * dim_, dim_}; }

private:
    std::size_t dim_;
    std::vector<double> increments_;
    std::vector<double> probs_;
};

/// A tree root: an initial point, its probability, and whether it is an
/// observer (weight 0, evolved under the population law but excluded from it).
struct Root {
    Point x;
    double weight = 0.0;
    bool observer = false;
};

enum class LatticeTopology {
    /// Nodes indexed by (root, full path of branch digits).
    path,
    /// Nodes indexed by (root, count of each branch taken). Only valid when
    /// node values depend on the path through those counts alone.
    recombining,
};

LatticeTopology topology_from_name(std::string_view name);
std::string_view topology_name(LatticeTopology topology);

/// Node values of one lattice depth in canonical node order; `dim` values per node.
struct SliceValues {
    std::size_t dim = 1;
    std::vector<double> values;

    SliceValues() = default;
    SliceValues(std::size_t dim, std::size_t nodes, double fill = 0.0) : dim(dim), values(dim * nodes, fill) {}
    SliceValues(std::size_t dim, std::vector<double> values) : dim(dim), values(std::move(values)) {}

    std::size_t size() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
    std::span<double> at(std::size_t node) { return {values.data() + node * dim, dim}; }
    std::span<const double> at(std::size_t node) const { return {values.data() + node * dim, dim}; }
    double& operator[](std::size_t node) { return values[node * dim]; }
    double operator[](std::size_t node) const { return values[node * dim]; }
};

/**
 * Lattice over one period, built on a set of roots.
 *
 * Canonical node order at every depth is root-major; within a root, path
 * nodes follow their branch digits read as a base-B integer (most significant
 * first) and recombining nodes follow the lexicographic order of their
 * branch-count vectors.
 */
class Lattice {
public:
    Lattice(std::vector<Root> roots, const IncrementScheme& scheme, std::size_t dim, std::size_t depth,
            LatticeTopology topology);

    std::size_t dim() const noexcept { return branches_.dim(); }
    std::size_t depth() const noexcept { return depth_; }
    std::size_t branching() const noexcept { return branches_.size(); }
    LatticeTopology topology() const noexcept { return topology_; }
    const BranchSet& branches() const noexcept { return branches_; }

    std::size_t root_count() const noexcept { return roots_.size(); }
    const Root& root(std::size_t r) const { return roots_[r]; }
    const std::vector<Root>& roots() const noexcept { return roots_; }

    std::size_t nodes_per_root(std::size_t depth) const { return per_root_[depth]; }
    std::size_t node_count(std::size_t depth) const { return roots_.size() * per_root_[depth]; }
    /// Sum of node counts over depths 0..depth().
    std::size_t total_nodes() const;

    std::size_t root_of(std::size_t depth, std::size_t node) const { return node / per_root_[depth]; }
    bool observer(std::size_t depth, std::size_t node) const { return roots_[root_of(depth, node)].observer; }

    /// Index at depth+1 of the child reached from `node` through branch `b`.
    std::size_t child(std::size_t depth, std::size_t node, std::size_t b) const;
    /// Parent at depth-1 of `node`; for recombining lattices, the first parent
    /// in canonical order. Requires depth >= 1.
    std::size_t parent(std::size_t depth, std::size_t node) const;
    /// Branch leading from parent(depth, node) to `node`.
    std::size_t parent_branch(std::size_t depth, std::size_t node) const;

    /// Node probabilities (root weight times branch probabilities).
    std::span<const double> probabilities(std::size_t depth) const { return probs_[depth]; }

    /// Roots for the next period: one per node at the last depth, carrying the
    /// node probability and the observer flag of its root.
    std::vector<Root> leaves(const SliceValues& x_last) const;

    /// Node count of a lattice with `roots` roots, without building it.
    static std::size_t projected_nodes(std::size_t roots, std::size_t branching, std::size_t depth,
                                       LatticeTopology topology);
    /// Nodes per root at depth `depth`.
    static std::size_t projected_per_root(std::size_t branching, std::size_t depth, LatticeTopology topology);

private:
    void build_recombining_tables();

    std::vector<Root> roots_;
    BranchSet branches_;
    std::size_t depth_;
    LatticeTopology topology_;
    std::vector<std::size_t> per_root_;
    std::vector<std::vector<double>> probs_;
    // Recombining only: per-root child and canonical-parent tables, per depth.
    std::vector<std::vector<std::uint32_t>> child_table_;
    std::vector<std::vector<std::uint32_t>> parent_table_;
};

/// Parent values sum_b p_b * child(parent, b) for contiguous children
/// (B children per parent, as in a path lattice).
SliceValues conditional_expectation(const SliceValues& child, const BranchSet& branches);
/// Conditional expectation from depth+1 to depth on `lattice`.
SliceValues conditional_expectation(const Lattice& lattice, std::size_t depth, const SliceValues& child);

/// Per parent node and noise dimension m: h^{-1/2} sum_b p_b w_b[m] child(parent, b).
/// Contiguous-children form; the child slice must be scalar.
SliceValues z_projection(const SliceValues& child, const BranchSet& branches, double h);
SliceValues z_projection(const Lattice& lattice, std::size_t depth, const SliceValues& child, double h);

/// Law of (x, y) at `depth` over non-observer nodes, weighted by node
/// probability. Throws std::invalid_argument if every root is an observer.
JointLaw slice_law(const SliceValues& x, const SliceValues& y, const Lattice& lattice, std::size_t depth);
/// Law of x alone at `depth` over non-observer nodes.
DiscreteMeasure slice_measure(const SliceValues& x, const Lattice& lattice, std::size_t depth);

}  // namespace mkv
