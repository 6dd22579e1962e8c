#include "mkv/tree.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "mkv/parallel.hpp"

namespace mkv {

namespace {

constexpr std::size_t kSaturated = std::numeric_limits<std::size_t>::max();

std::size_t sat_mul(std::size_t a, std::size_t b) {
    if (a != 0 && b > kSaturated / a) return kSaturated;
    return a * b;
}

std::size_t sat_add(std::size_t a, std::size_t b) {
    return a > kSaturated - b ? kSaturated : a + b;
}

// Compositions of `total` into `parts` non-negative counts, lexicographic order.
void compositions(std::size_t total, std::size_t parts, std::vector<std::uint16_t>& prefix,
                  std::vector<std::vector<std::uint16_t>>& out) {
    if (prefix.size() + 1 == parts) {
        prefix.push_back(static_cast<std::uint16_t>(total));
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (std::size_t c = 0; c <= total; ++c) {
        prefix.push_back(static_cast<std::uint16_t>(c));
        compositions(total - c, parts, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace

IncrementScheme IncrementScheme::binomial() {
    return {{1.0, -1.0}, {0.5, 0.5}};
}

IncrementScheme IncrementScheme::trinomial() {
    const double s = std::sqrt(3.0);
    return {{-s, 0.0, s}, {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}};
}

IncrementScheme IncrementScheme::by_name(std::string_view name) {
    if (name == "binomial") return binomial();
    if (name == "trinomial") return trinomial();
    throw std::invalid_argument("unknown increment scheme '" + std::string(name) + "'");
}

double IncrementScheme::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

void IncrementScheme::validate() const {
    if (values.empty() || values.size() != probs.size()) {
        throw std::invalid_argument("increment scheme: values and probabilities must be non-empty and aligned");
    }
    double mass = 0.0;
    double first = 0.0;
    double second = 0.0;
    for (std::size_t b = 0; b < values.size(); ++b) {
        if (!(probs[b] > 0.0) || !std::isfinite(values[b])) {
            throw std::invalid_argument("increment scheme: probabilities must be positive, values finite");
        }
        mass += probs[b];
        first += probs[b] * values[b];
        second += probs[b] * values[b] * values[b];
    }
    if (std::abs(mass - 1.0) > 1e-12 || std::abs(first) > 1e-12 || std::abs(second - 1.0) > 1e-12) {
        throw std::invalid_argument("increment scheme: must be centered with unit variance");
    }
}

TimeGrid::TimeGrid(double horizon, std::size_t periods, std::size_t steps_per_period)
    : horizon(horizon), periods(periods), steps_per_period(steps_per_period) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("time grid: horizon must be positive");
    }
    if (periods == 0 || steps_per_period == 0) {
        throw std::invalid_argument("time grid: need at least one period and one step per period");
    }
}

BranchSet::BranchSet(const IncrementScheme& scheme, std::size_t dim) : dim_(dim) {
    scheme.validate();
    if (dim == 0) {
        throw std::invalid_argument("branch set: dimension must be at least 1");
    }
    const std::size_t base = scheme.size();
    std::size_t count = 1;
    for (std::size_t m = 0; m < dim; ++m) count *= base;
    increments_.resize(count * dim);
    probs_.resize(count);
    for (std::size_t b = 0; b < count; ++b) {
        double p = 1.0;
        std::size_t code = b;
        for (std::size_t m = dim; m-- > 0;) {
            const std::size_t digit = code % base;
            code /= base;
            increments_[b * dim + m] = scheme.values[digit];
            p *= scheme.probs[digit];
        }
        probs_[b] = p;
    }
}

LatticeTopology topology_from_name(std::string_view name) {
    if (name == "path") return LatticeTopology::path;
    if (name == "recombining") return LatticeTopology::recombining;
    throw std::invalid_argument("unknown lattice topology '" + std::string(name) + "'");
}

std::string_view topology_name(LatticeTopology topology) {
    return topology == LatticeTopology::path ? "path" : "recombining";
}

Lattice::Lattice(std::vector<Root> roots, const IncrementScheme& scheme, std::size_t dim, std::size_t depth,
                 LatticeTopology topology)
    : roots_(std::move(roots)), branches_(scheme, dim), depth_(depth), topology_(topology) {
    if (roots_.empty()) {
        throw std::invalid_argument("lattice: no roots");
    }
    std::vector<double> weights;
    weights.reserve(roots_.size());
    for (const Root& r : roots_) {
        if (r.x.size() != dim) {
            throw std::invalid_argument("lattice: root dimension does not match");
        }
        for (double v : r.x) {
            if (!std::isfinite(v)) throw std::invalid_argument("lattice: non-finite root");
        }
        if (r.observer) {
            if (r.weight != 0.0) throw std::invalid_argument("lattice: observer roots must have weight 0");
        } else {
            if (!(r.weight >= 0.0)) throw std::invalid_argument("lattice: negative root weight");
            weights.push_back(r.weight);
        }
    }
    if (std::abs(compensated_sum(weights) - 1.0) > kMassTolerance) {
        throw std::invalid_argument("lattice: non-observer root weights must sum to 1");
    }

    per_root_.resize(depth_ + 1);
    for (std::size_t i = 0; i <= depth_; ++i) {
        per_root_[i] = projected_per_root(branches_.size(), i, topology_);
        if (per_root_[i] == kSaturated || sat_mul(per_root_[i], roots_.size()) == kSaturated ||
            per_root_[i] > std::numeric_limits<std::uint32_t>::max()) {
            throw std::length_error("lattice: node count overflows");
        }
    }
    if (topology_ == LatticeTopology::recombining) build_recombining_tables();

    const std::size_t branching = branches_.size();
    probs_.resize(depth_ + 1);
    probs_[0].resize(roots_.size());
    for (std::size_t r = 0; r < roots_.size(); ++r) probs_[0][r] = roots_[r].weight;
    for (std::size_t i = 0; i < depth_; ++i) {
        const auto& parent = probs_[i];
        auto& next = probs_[i + 1];
        next.assign(node_count(i + 1), 0.0);
        for (std::size_t node = 0; node < parent.size(); ++node) {
            for (std::size_t b = 0; b < branching; ++b) {
                next[child(i, node, b)] += parent[node] * branches_.prob(b);
            }
        }
    }
}

void Lattice::build_recombining_tables() {
    const std::size_t branching = branches_.size();
    std::vector<std::vector<std::vector<std::uint16_t>>> comps(depth_ + 1);
    std::vector<std::map<std::vector<std::uint16_t>, std::uint32_t>> index(depth_ + 1);
    for (std::size_t i = 0; i <= depth_; ++i) {
        std::vector<std::uint16_t> prefix;
        compositions(i, branching, prefix, comps[i]);
        for (std::size_t n = 0; n < comps[i].size(); ++n) index[i][comps[i][n]] = static_cast<std::uint32_t>(n);
    }
    child_table_.resize(depth_);
    parent_table_.resize(depth_ + 1);
    for (std::size_t i = 0; i < depth_; ++i) {
        auto& children = child_table_[i];
        auto& parents = parent_table_[i + 1];
        children.resize(comps[i].size() * branching);
        parents.assign(comps[i + 1].size(), std::numeric_limits<std::uint32_t>::max());
        for (std::size_t n = 0; n < comps[i].size(); ++n) {
            for (std::size_t b = 0; b < branching; ++b) {
                auto c = comps[i][n];
                ++c[b];
                const std::uint32_t target = index[i + 1].at(c);
                children[n * branching + b] = target;
                if (parents[target] == std::numeric_limits<std::uint32_t>::max()) {
                    parents[target] = static_cast<std::uint32_t>(n * branching + b);
                }
            }
        }
    }
}

std::size_t Lattice::total_nodes() const {
    std::size_t total = 0;
    for (std::size_t i = 0; i <= depth_; ++i) total += node_count(i);
    return total;
}

std::size_t Lattice::child(std::size_t depth, std::size_t node, std::size_t b) const {
    const std::size_t branching = branches_.size();
    if (topology_ == LatticeTopology::path) return node * branching + b;
    const std::size_t r = node / per_root_[depth];
    const std::size_t local = node % per_root_[depth];
    return r * per_root_[depth + 1] + child_table_[depth][local * branching + b];
}

std::size_t Lattice::parent(std::size_t depth, std::size_t node) const {
    const std::size_t branching = branches_.size();
    if (topology_ == LatticeTopology::path) return node / branching;
    const std::size_t r = node / per_root_[depth];
    const std::size_t local = node % per_root_[depth];
    return r * per_root_[depth - 1] + parent_table_[depth][local] / branching;
}

std::size_t Lattice::parent_branch(std::size_t depth, std::size_t node) const {
    const std::size_t branching = branches_.size();
    if (topology_ == LatticeTopology::path) return node % branching;
    return parent_table_[depth][node % per_root_[depth]] % branching;
}

std::vector<Root> Lattice::leaves(const SliceValues& x_last) const {
    const std::size_t n = node_count(depth_);
    if (x_last.size() != n || x_last.dim != dim()) {
        throw std::invalid_argument("lattice: leaf slice has the wrong shape");
    }
    std::vector<Root> out(n);
    const auto probs = probabilities(depth_);
    for (std::size_t node = 0; node < n; ++node) {
        const auto x = x_last.at(node);
        out[node].x.assign(x.begin(), x.end());
        out[node].observer = observer(depth_, node);
        out[node].weight = out[node].observer ? 0.0 : probs[node];
    }
    return out;
}

std::size_t Lattice::projected_per_root(std::size_t branching, std::size_t depth, LatticeTopology topology) {
    if (topology == LatticeTopology::path) {
        std::size_t n = 1;
        for (std::size_t i = 0; i < depth; ++i) n = sat_mul(n, branching);
        return n;
    }
    // C(depth + B - 1, B - 1)
    std::size_t n = 1;
    for (std::size_t j = 1; j < branching; ++j) {
        const std::size_t num = depth + j;
        if (n > kSaturated / num) return kSaturated;
        n = n * num / j;
    }
    return n;
}

std::size_t Lattice::projected_nodes(std::size_t roots, std::size_t branching, std::size_t depth,
                                     LatticeTopology topology) {
    std::size_t total = 0;
    for (std::size_t i = 0; i <= depth; ++i) {
        total = sat_add(total, sat_mul(roots, projected_per_root(branching, i, topology)));
    }
    return total;
}

SliceValues conditional_expectation(const SliceValues& child, const BranchSet& branches) {
    const std::size_t branching = branches.size();
    if (child.size() % branching != 0) {
        throw std::invalid_argument("conditional_expectation: child slice length is not a multiple of B");
    }
    const std::size_t dim = child.dim;
    SliceValues out(dim, child.size() / branching);
    parallel_for(out.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t node = begin; node < end; ++node) {
            for (std::size_t c = 0; c < dim; ++c) {
                double acc = 0.0;
                for (std::size_t b = 0; b < branching; ++b) {
                    acc += branches.prob(b) * child.values[(node * branching + b) * dim + c];
                }
                out.values[node * dim + c] = acc;
            }
        }
    });
    return out;
}

SliceValues conditional_expectation(const Lattice& lattice, std::size_t depth, const SliceValues& child) {
    if (depth >= lattice.depth() || child.size() != lattice.node_count(depth + 1)) {
        throw std::invalid_argument("conditional_expectation: child slice does not match the lattice");
    }
    if (lattice.topology() == LatticeTopology::path) return conditional_expectation(child, lattice.branches());

    const auto& branches = lattice.branches();
    const std::size_t dim = child.dim;
    SliceValues out(dim, lattice.node_count(depth));
    for (std::size_t node = 0; node < out.size(); ++node) {
        for (std::size_t c = 0; c < dim; ++c) {
            double acc = 0.0;
            for (std::size_t b = 0; b < branches.size(); ++b) {
                acc += branches.prob(b) * child.values[lattice.child(depth, node, b) * dim + c];
            }
            out.values[node * dim + c] = acc;
        }
    }
    return out;
}

SliceValues z_projection(const SliceValues& child, const BranchSet& branches, double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("z_projection: time step must be positive");
    }
    const std::size_t branching = branches.size();
    if (child.dim != 1 || child.size() % branching != 0) {
        throw std::invalid_argument("z_projection: child slice must be scalar with a multiple of B nodes");
    }
    const std::size_t dim = branches.dim();
    const double root_h = std::sqrt(h);
    SliceValues out(dim, child.size() / branching);
    parallel_for(out.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t node = begin; node < end; ++node) {
            for (std::size_t m = 0; m < dim; ++m) {
                double acc = 0.0;
                for (std::size_t b = 0; b < branching; ++b) {
                    acc += branches.prob(b) * branches.increment(b)[m] * child.values[node * branching + b];
                }
                out.values[node * dim + m] = acc / root_h;
            }
        }
    });
    return out;
}

SliceValues z_projection(const Lattice& lattice, std::size_t depth, const SliceValues& child, double h) {
    if (depth >= lattice.depth() || child.size() != lattice.node_count(depth + 1)) {
        throw std::invalid_argument("z_projection: child slice does not match the lattice");
    }
    if (lattice.topology() == LatticeTopology::path) return z_projection(child, lattice.branches(), h);
    if (!(h > 0.0)) {
        throw std::invalid_argument("z_projection: time step must be positive");
    }
    if (child.dim != 1) {
        throw std::invalid_argument("z_projection: child slice must be scalar");
    }
    const auto& branches = lattice.branches();
    const std::size_t dim = branches.dim();
    const double root_h = std::sqrt(h);
    SliceValues out(dim, lattice.node_count(depth));
    for (std::size_t node = 0; node < out.size(); ++node) {
        for (std::size_t m = 0; m < dim; ++m) {
            double acc = 0.0;
            for (std::size_t b = 0; b < branches.size(); ++b) {
                acc += branches.prob(b) * branches.increment(b)[m] * child.values[lattice.child(depth, node, b)];
            }
            out.values[node * dim + m] = acc / root_h;
        }
    }
    return out;
}

JointLaw slice_law(const SliceValues& x, const SliceValues& y, const Lattice& lattice, std::size_t depth) {
    const std::size_t n = lattice.node_count(depth);
    const std::size_t dim = lattice.dim();
    if (x.size() != n || y.size() != n || x.dim != dim || y.dim != 1) {
        throw std::invalid_argument("slice_law: slices do not match the lattice depth");
    }
    const auto probs = lattice.probabilities(depth);
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> ws;
    xs.reserve(n * dim);
    ys.reserve(n);
    ws.reserve(n);
    for (std::size_t node = 0; node < n; ++node) {
        if (lattice.observer(depth, node)) continue;
        const auto p = x.at(node);
        xs.insert(xs.end(), p.begin(), p.end());
        ys.push_back(y[node]);
        ws.push_back(probs[node]);
    }
    if (ws.empty()) {
        throw std::invalid_argument("slice_law: every node belongs to an observer root");
    }
    return JointLaw(dim, std::move(xs), std::move(ys), std::move(ws));
}

DiscreteMeasure slice_measure(const SliceValues& x, const Lattice& lattice, std::size_t depth) {
    const std::size_t n = lattice.node_count(depth);
    const std::size_t dim = lattice.dim();
    if (x.size() != n || x.dim != dim) {
        throw std::invalid_argument("slice_measure: slice does not match the lattice depth");
    }
    const auto probs = lattice.probabilities(depth);
    std::vector<double> xs;
    std::vector<double> ws;
    xs.reserve(n * dim);
    ws.reserve(n);
    for (std::size_t node = 0; node < n; ++node) {
        if (lattice.observer(depth, node)) continue;
        const auto p = x.at(node);
        xs.insert(xs.end(), p.begin(), p.end());
        ws.push_back(probs[node]);
    }
    if (ws.empty()) {
        throw std::invalid_argument("slice_measure: every node belongs to an observer root");
    }
    return DiscreteMeasure(dim, std::move(xs), std::move(ws));
}

}  // namespace mkv
