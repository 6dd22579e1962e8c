#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mkv {

/// A point of the state space R^d.
using Point = std::vector<double>;

/// Tolerance on the total mass of a probability measure.
inline constexpr double kMassTolerance = 1e-12;

/// Neumaier-compensated sum in the given order.
double compensated_sum(std::span<const double> values);

/**
 * Weighted cloud of atoms in R^d.
 *
 * Atoms are stored in insertion order; duplicates are kept so that a law
 * built from a lattice slice has exactly one atom per node. Coordinates are
 * stored flat, atom-major.
 */
class DiscreteMeasure {
public:
    DiscreteMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights);

    /// Dirac mass at `x`.
    static DiscreteMeasure dirac(const Point& x);
    /// Atoms of dimension 1.
    static DiscreteMeasure from_1d(std::vector<double> points, std::vector<double> weights);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return weights_.size(); }
    std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
    double weight(std::size_t i) const { return weights_[i]; }
    std::span<const double> coords() const noexcept { return coords_; }
    std::span<const double> weights() const noexcept { return weights_; }

private:
    std::size_t dim_;
    std::vector<double> coords_;
    std::vector<double> weights_;
};

/**
 * Joint law of (X, Y) with X in R^d and scalar Y, as a weighted atom cloud.
 *
 * Means are computed once at construction in stored order, which for slice
 * laws is the canonical node order of the lattice.
 */
class JointLaw {
public:
    JointLaw(std::size_t dim, std::vector<double> x, std::vector<double> y, std::vector<double> weights);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return weights_.size(); }
    std::span<const double> x(std::size_t i) const { return {x_.data() + i * dim_, dim_}; }
    double y(std::size_t i) const { return y_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    std::span<const double> xs() const noexcept { return x_; }
    std::span<const double> ys() const noexcept { return y_; }
    std::span<const double> weights() const noexcept { return weights_; }

    const Point& x_mean() const noexcept { return x_mean_; }
    double y_mean() const noexcept { return y_mean_; }

    /// Marginal law of X.
    DiscreteMeasure x_marginal() const;

private:
    std::size_t dim_;
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> weights_;
    Point x_mean_;
    double y_mean_ = 0.0;
};

/// Weighted average of the atoms, summed in ascending (point, weight) order so
/// the result does not depend on the order atoms were supplied in.
Point mean(const DiscreteMeasure& m);

inline double y_mean(const JointLaw& law) noexcept { return law.y_mean(); }
inline const Point& x_mean(const JointLaw& law) noexcept { return law.x_mean(); }

/// Exact W2 distance between two measures on the real line, through the
/// monotone (quantile) coupling. Throws std::invalid_argument if d != 1.
double wasserstein2_1d(const DiscreteMeasure& m1, const DiscreteMeasure& m2);

/// M atoms at the quantile midpoints mean + std * Phi^{-1}((l - 1/2) / M),
/// uniform weights, ascending. A zero std yields a single atom of weight 1.
DiscreteMeasure quantize_gaussian(double mean, double std, std::size_t count);

/// (sum_i w_i |v_i|^p)^(1/p).
double lp_norm(std::span<const double> values, std::span<const double> weights, double p);

}  // namespace mkv
