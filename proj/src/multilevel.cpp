#include "mkv/multilevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

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

// max over depths of the probability-weighted L2 norm of a - b, observers excluded.
double period_residual(const Slices& a, const Slices& b, const Lattice& lattice, std::size_t last_depth) {
    double worst = 0.0;
    for (std::size_t i = 0; i <= last_depth; ++i) {
        const auto probs = lattice.probabilities(i);
        double acc = 0.0;
        for (std::size_t node = 0; node < probs.size(); ++node) {
            if (lattice.observer(i, node)) continue;
            const double d = a[i][node] - b[i][node];
            acc += probs[node] * d * d;
        }
        worst = std::max(worst, std::sqrt(acc));
    }
    return worst;
}

Slices zero_slices(const Lattice& lattice, std::size_t dim) {
    Slices out(lattice.depth() + 1);
    for (std::size_t i = 0; i <= lattice.depth(); ++i) out[i] = SliceValues(dim, lattice.node_count(i), 0.0);
    return out;
}

}  // namespace

TopologyChoice topology_choice_from_name(std::string_view name) {
    if (name == "auto") return TopologyChoice::automatic;
    if (name == "path") return TopologyChoice::path;
    if (name == "recombining") return TopologyChoice::recombining;
    throw std::invalid_argument("unknown lattice choice '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
    if (levels < 1 || picard < 1 || steps_per_period < 1) {
        throw std::invalid_argument("solver config: levels, picard and steps_per_period must be >= 1");
    }
    if (node_cap < 1) throw std::invalid_argument("solver config: node_cap must be >= 1");
    fixed_point.validate();
    IncrementScheme::by_name(scheme).validate();
}

ResourceLimitError::ResourceLimitError(std::size_t projected, std::size_t cap)
    : std::runtime_error("projected node evaluations " +
                         (projected == kSaturated ? std::string("overflow") : std::to_string(projected)) +
                         " exceed the cap of " + std::to_string(cap)),
      projected_(projected),
      cap_(cap) {}

MultilevelSolver::MultilevelSolver(const CoefficientModel& model, double horizon, SolverConfig config)
    : model_(model),
      config_(std::move(config)),
      grid_(horizon, config_.levels, config_.steps_per_period),
      scheme_(IncrementScheme::by_name(config_.scheme)),
      topology_(LatticeTopology::path) {
    config_.validate();
    switch (config_.topology) {
        case TopologyChoice::automatic:
            topology_ = model_.state_free_dynamics() ? LatticeTopology::recombining : LatticeTopology::path;
            break;
        case TopologyChoice::path:
            topology_ = LatticeTopology::path;
            break;
        case TopologyChoice::recombining:
            if (!model_.state_free_dynamics()) {
                throw std::invalid_argument("recombining lattice requested for model '" + model_.name() +
                                            "' whose dynamics depend on the node state");
            }
            topology_ = LatticeTopology::recombining;
            break;
    }
}

std::size_t MultilevelSolver::projected_node_evals(std::size_t level, std::size_t roots) const {
    if (level >= config_.levels) return roots;
    const std::size_t branching = BranchSet(scheme_, model_.dim()).size();
    const std::size_t n = config_.steps_per_period;
    const std::size_t lattice = Lattice::projected_nodes(roots, branching, n, topology_);
    const std::size_t leaves = sat_mul(roots, Lattice::projected_per_root(branching, n, topology_));
    const std::size_t own = sat_mul(lattice, 1 + 2 * config_.picard);
    return sat_add(own, sat_mul(config_.picard, projected_node_evals(level + 1, leaves)));
}

LevelResult MultilevelSolver::solve_level(std::size_t level, const std::vector<Root>& roots) {
    if (level > config_.levels) {
        throw std::invalid_argument("solve_level: level index exceeds the number of periods");
    }
    const std::size_t projected = projected_node_evals(level, roots.size());
    if (projected > config_.node_cap) throw ResourceLimitError(projected, config_.node_cap);
    return solve_recursive(level, roots);
}

LevelResult MultilevelSolver::terminal_level(const std::vector<Root>& roots) {
    if (roots.empty()) throw std::invalid_argument("solve_level: no roots");
    const std::size_t dim = model_.dim();
    std::vector<double> xs;
    std::vector<double> ws;
    for (const Root& r : roots) {
        if (r.x.size() != dim) throw std::invalid_argument("solve_level: root dimension does not match the model");
        if (r.observer) continue;
        xs.insert(xs.end(), r.x.begin(), r.x.end());
        ws.push_back(r.weight);
    }
    const DiscreteMeasure law(dim, std::move(xs), std::move(ws));

    LevelResult out;
    out.y_at_roots.resize(roots.size());
    for (std::size_t r = 0; r < roots.size(); ++r) {
        out.y_at_roots[r] = model_.terminal(roots[r].x, law);
        if (!std::isfinite(out.y_at_roots[r])) throw NonFiniteValue(0, r, "terminal condition");
    }
    stats_.node_evals = sat_add(stats_.node_evals, roots.size());
    ++stats_.level_calls;
    return out;
}

LevelResult MultilevelSolver::solve_recursive(std::size_t level, const std::vector<Root>& roots) {
    if (level == config_.levels) return terminal_level(roots);

    ++stats_.level_calls;
    const Lattice lattice(roots, scheme_, model_.dim(), config_.steps_per_period, topology_);
    const double h = grid_.step();
    const std::size_t n = lattice.depth();
    const std::size_t passes = 1 + 2 * config_.picard;
    stats_.node_evals = sat_add(stats_.node_evals, sat_mul(lattice.total_nodes(), passes));

    PeriodSolution current;
    current.x = initial_forward(model_, h, lattice);
    current.y = zero_slices(lattice, 1);
    current.z = zero_slices(lattice, model_.dim());
    current.fixed_point_iterations.assign(n, 0);
    if (trace_) trace_(PassEvent{level, 0, lattice, current});

    LevelResult out;
    for (std::size_t j = 1; j <= config_.picard; ++j) {
        const LevelResult next = solve_recursive(level + 1, lattice.leaves(current.x[n]));
        const SliceValues terminal(1, next.y_at_roots);

        PeriodSolution updated;
        try {
            updated = local_solve(current.x, terminal, model_, h, lattice, config_.fixed_point);
        } catch (const FixedPointDivergence& e) {
            throw FixedPointDivergence(e.slice(), e.residual(),
                                       "(level " + std::to_string(level) + ", Picard iteration " +
                                           std::to_string(j) + ")");
        }
        ++stats_.local_solves;

        out.residuals.push_back(period_residual(updated.y, current.y, lattice, n));
        out.root_residuals.push_back(period_residual(updated.y, current.y, lattice, 0));
        const std::size_t sweeps =
            updated.fixed_point_iterations.empty()
                ? 0
                : *std::max_element(updated.fixed_point_iterations.begin(), updated.fixed_point_iterations.end());
        out.fixed_point_iterations.push_back(sweeps);
        stats_.max_fixed_point_iterations = std::max(stats_.max_fixed_point_iterations, sweeps);

        current = std::move(updated);
        if (trace_) trace_(PassEvent{level, j, lattice, current});
    }

    out.y_at_roots.assign(current.y[0].values.begin(), current.y[0].values.end());
    if (config_.record_full) out.solution = std::move(current);
    return out;
}

U0Result MultilevelSolver::evaluate_u0(const Point& x, const DiscreteMeasure& mu) {
    if (x.size() != mu.dim() || x.size() != model_.dim()) {
        throw std::invalid_argument("evaluate_u0: dimension mismatch");
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("evaluate_u0: non-finite evaluation point");
    }

    std::vector<Root> roots;
    roots.reserve(mu.size() + 1);
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < mu.size(); ++l) {
        const auto p = mu.point(l);
        double d2 = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) d2 += (p[c] - x[c]) * (p[c] - x[c]);
        if (d2 < best) {
            best = d2;
            nearest = l;
        }
        roots.push_back(Root{Point(p.begin(), p.end()), mu.weight(l), false});
    }

    U0Result out;
    out.matched_root = roots[nearest].x;
    out.nearest_distance = std::sqrt(best);
    std::size_t target = nearest;
    if (best > 0.0) {
        roots.push_back(Root{x, 0.0, true});
        target = roots.size() - 1;
        out.used_observer = true;
    }
    out.top = solve_level(0, roots);
    out.value = out.top.y_at_roots[target];
    return out;
}

}  // namespace mkv
