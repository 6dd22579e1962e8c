#include "mkv/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

namespace mkv {

namespace {

void check_weights(std::span<const double> weights) {
    if (weights.empty()) {
        throw std::invalid_argument("measure: atom list is empty");
    }
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("measure: weights must be finite and non-negative");
        }
    }
    const double total = compensated_sum(weights);
    if (std::abs(total - 1.0) > kMassTolerance) {
        throw std::invalid_argument("measure: weights sum to " + std::to_string(total) + ", expected 1");
    }
}

void check_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string("measure: non-finite ") + what);
        }
    }
}

// Atom order by point (lexicographic), then weight.
std::vector<std::size_t> sorted_order(const DiscreteMeasure& m) {
    std::vector<std::size_t> order(m.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto pa = m.point(a);
        const auto pb = m.point(b);
        if (std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end())) return true;
        if (std::lexicographical_compare(pb.begin(), pb.end(), pa.begin(), pa.end())) return false;
        return m.weight(a) < m.weight(b);
    });
    return order;
}

}  // namespace

double compensated_sum(std::span<const double> values) {
    double sum = 0.0;
    double carry = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    return sum + carry;
}

DiscreteMeasure::DiscreteMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights)
    : dim_(dim), coords_(std::move(coords)), weights_(std::move(weights)) {
    if (dim_ == 0) {
        throw std::invalid_argument("measure: dimension must be at least 1");
    }
    if (coords_.size() != weights_.size() * dim_) {
        throw std::invalid_argument("measure: coordinate count does not match atoms * dim");
    }
    check_weights(weights_);
    check_finite(coords_, "coordinate");
}

DiscreteMeasure DiscreteMeasure::dirac(const Point& x) {
    return DiscreteMeasure(x.size(), x, {1.0});
}

DiscreteMeasure DiscreteMeasure::from_1d(std::vector<double> points, std::vector<double> weights) {
    return DiscreteMeasure(1, std::move(points), std::move(weights));
}

JointLaw::JointLaw(std::size_t dim, std::vector<double> x, std::vector<double> y, std::vector<double> weights)
    : dim_(dim), x_(std::move(x)), y_(std::move(y)), weights_(std::move(weights)), x_mean_(dim, 0.0) {
    if (dim_ == 0) {
        throw std::invalid_argument("joint law: dimension must be at least 1");
    }
    if (y_.size() != weights_.size() || x_.size() != weights_.size() * dim_) {
        throw std::invalid_argument("joint law: inconsistent atom arrays");
    }
    check_weights(weights_);
    check_finite(x_, "x coordinate");
    check_finite(y_, "y value");

    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const double w = weights_[i];
        y_mean_ += w * y_[i];
        for (std::size_t c = 0; c < dim_; ++c) {
            x_mean_[c] += w * x_[i * dim_ + c];
        }
    }
}

DiscreteMeasure JointLaw::x_marginal() const {
    return DiscreteMeasure(dim_, x_, weights_);
}

Point mean(const DiscreteMeasure& m) {
    Point result(m.dim(), 0.0);
    for (std::size_t i : sorted_order(m)) {
        const auto p = m.point(i);
        for (std::size_t c = 0; c < m.dim(); ++c) {
            result[c] += m.weight(i) * p[c];
        }
    }
    return result;
}

double wasserstein2_1d(const DiscreteMeasure& m1, const DiscreteMeasure& m2) {
    if (m1.dim() != 1 || m2.dim() != 1) {
        throw std::invalid_argument("wasserstein2_1d: both measures must be one-dimensional");
    }
    const auto o1 = sorted_order(m1);
    const auto o2 = sorted_order(m2);

    std::size_t i = 0;
    std::size_t j = 0;
    double rem1 = m1.weight(o1[0]);
    double rem2 = m2.weight(o2[0]);
    double acc = 0.0;
    while (i < o1.size() && j < o2.size()) {
        const double d = m1.point(o1[i])[0] - m2.point(o2[j])[0];
        const double mass = std::min(rem1, rem2);
        acc += mass * d * d;
        rem1 -= mass;
        rem2 -= mass;
        // Advance whichever quantile block is exhausted (both on a tie).
        const bool next1 = rem1 <= rem2;
        const bool next2 = rem2 <= rem1;
        if (next1 && ++i < o1.size()) rem1 = m1.weight(o1[i]);
        if (next2 && ++j < o2.size()) rem2 = m2.weight(o2[j]);
    }
    return std::sqrt(std::max(acc, 0.0));
}

DiscreteMeasure quantize_gaussian(double mean, double std, std::size_t count) {
    if (!(std >= 0.0) || !std::isfinite(std) || !std::isfinite(mean)) {
        throw std::invalid_argument("quantize_gaussian: need finite mean and std >= 0");
    }
    if (count == 0) {
        throw std::invalid_argument("quantize_gaussian: need at least one atom");
    }
    if (std == 0.0 || count == 1) {
        return DiscreteMeasure::from_1d({mean}, {1.0});
    }
    const boost::math::normal_distribution<double> normal;
    std::vector<double> points(count);
    const double m = static_cast<double>(count);
    for (std::size_t l = 0; l < count; ++l) {
        points[l] = mean + std * boost::math::quantile(normal, (static_cast<double>(l) + 0.5) / m);
    }
    // Quantile midpoints are symmetric about the median; enforce it exactly so
    // the empirical mean carries no rounding bias.
    for (std::size_t l = 0; l < count / 2; ++l) {
        const double half = 0.5 * (points[count - 1 - l] - points[l]);
        points[l] = mean - half;
        points[count - 1 - l] = mean + half;
    }
    if (count % 2 == 1) points[count / 2] = mean;
    return DiscreteMeasure::from_1d(std::move(points), std::vector<double>(count, 1.0 / m));
}

double lp_norm(std::span<const double> values, std::span<const double> weights, double p) {
    if (values.empty()) {
        throw std::invalid_argument("lp_norm: empty input");
    }
    if (values.size() != weights.size()) {
        throw std::invalid_argument("lp_norm: values and weights differ in length");
    }
    if (!(p >= 1.0)) {
        throw std::invalid_argument("lp_norm: p must be >= 1");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += weights[i] * std::pow(std::abs(values[i]), p);
    }
    return std::pow(acc, 1.0 / p);
}

}  // namespace mkv
