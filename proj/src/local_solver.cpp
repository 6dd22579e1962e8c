#include "mkv/local_solver.hpp"

#include <algorithm>
#include <cmath>

#include "mkv/parallel.hpp"

namespace mkv {

namespace {

std::string slice_message(std::size_t slice, double residual, const std::string& context) {
    std::string msg = "fixed point did not converge at slice " + std::to_string(slice) + " (residual " +
                      std::to_string(residual) + ")";
    if (!context.empty()) msg += " " + context;
    return msg;
}

void check_input_shapes(const Slices& input_x, const Lattice& lattice) {
    if (input_x.size() < lattice.depth() + 1) {
        throw std::invalid_argument("backward_pass: input process does not cover every depth");
    }
    for (std::size_t i = 0; i <= lattice.depth(); ++i) {
        if (input_x[i].size() != lattice.node_count(i) || input_x[i].dim != lattice.dim()) {
            throw std::invalid_argument("backward_pass: input slice " + std::to_string(i) + " has the wrong shape");
        }
    }
}

}  // namespace

void FixedPointSettings::validate() const {
    if (!(tolerance > 0.0) || max_iterations < 1) {
        throw std::invalid_argument("fixed point settings: need tolerance > 0 and max_iterations >= 1");
    }
}

FixedPointDivergence::FixedPointDivergence(std::size_t slice, double residual, const std::string& context)
    : std::runtime_error(slice_message(slice, residual, context)), slice_(slice), residual_(residual) {}

NonFiniteValue::NonFiniteValue(std::size_t depth, std::size_t node, const std::string& what)
    : std::runtime_error("non-finite " + what + " at depth " + std::to_string(depth) + ", node " +
                         std::to_string(node)),
      depth_(depth),
      node_(node) {}

SliceValues root_slice(const Lattice& lattice) {
    SliceValues out(lattice.dim(), lattice.root_count());
    for (std::size_t r = 0; r < lattice.root_count(); ++r) {
        std::copy(lattice.root(r).x.begin(), lattice.root(r).x.end(), out.at(r).begin());
    }
    return out;
}

BackwardResult backward_pass(const Slices& input_x, const SliceValues& terminal_y, const CoefficientModel& model,
                             double h, const Lattice& lattice, const FixedPointSettings& fp) {
    fp.validate();
    if (!(h > 0.0)) throw std::invalid_argument("backward_pass: time step must be positive");
    check_input_shapes(input_x, lattice);
    const std::size_t n = lattice.depth();
    const std::size_t dim = lattice.dim();
    if (terminal_y.dim != 1 || terminal_y.size() != lattice.node_count(n)) {
        throw std::invalid_argument("backward_pass: terminal values do not match the last depth");
    }
    for (std::size_t node = 0; node < terminal_y.size(); ++node) {
        if (!std::isfinite(terminal_y[node])) throw NonFiniteValue(n, node, "terminal value");
    }

    BackwardResult out;
    out.y.resize(n + 1);
    out.z.resize(n + 1);
    out.fixed_point_iterations.assign(n, 0);
    out.y[n] = terminal_y;
    out.z[n] = SliceValues(dim, lattice.node_count(n), 0.0);

    for (std::size_t i = n; i-- > 0;) {
        const SliceValues cond = conditional_expectation(lattice, i, out.y[i + 1]);
        out.z[i] = z_projection(lattice, i, out.y[i + 1], h);
        const SliceValues& z = out.z[i];
        const SliceValues& x = input_x[i];

        SliceValues current = cond;
        SliceValues next(1, cond.size());
        std::vector<double> change(cond.size());
        double residual = 0.0;
        std::size_t sweep = 0;
        while (true) {
            ++sweep;
            const JointLaw law = slice_law(x, current, lattice, i);
            parallel_for(cond.size(), [&](std::size_t begin, std::size_t end) {
                for (std::size_t node = begin; node < end; ++node) {
                    const double f = model.driver(x.at(node), current[node], z.at(node), law);
                    if (!std::isfinite(f)) throw NonFiniteValue(i, node, "driver");
                    next[node] = cond[node] + h * f;
                    change[node] = std::abs(next[node] - current[node]);
                }
            });
            residual = *std::max_element(change.begin(), change.end());
            std::swap(current, next);
            if (residual < fp.tolerance) break;
            if (sweep >= fp.max_iterations) throw FixedPointDivergence(i, residual);
        }
        out.y[i] = std::move(current);
        out.fixed_point_iterations[i] = sweep;
    }
    return out;
}

Slices forward_pass(const SliceValues& x0, const Slices& y, const CoefficientModel& model, double h,
                    const Lattice& lattice) {
    if (!(h > 0.0)) throw std::invalid_argument("forward_pass: time step must be positive");
    const std::size_t n = lattice.depth();
    const std::size_t dim = lattice.dim();
    if (x0.dim != dim || x0.size() != lattice.node_count(0)) {
        throw std::invalid_argument("forward_pass: initial slice does not match the roots");
    }
    if (y.size() < n) throw std::invalid_argument("forward_pass: missing Y slices");
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i].dim != 1 || y[i].size() != lattice.node_count(i)) {
            throw std::invalid_argument("forward_pass: Y slice " + std::to_string(i) + " has the wrong shape");
        }
    }

    const auto& branches = lattice.branches();
    const double root_h = std::sqrt(h);
    Slices x(n + 1);
    x[0] = x0;
    for (std::size_t i = 0; i < n; ++i) {
        const SliceValues& xi = x[i];
        const SliceValues& yi = y[i];
        const JointLaw law = slice_law(xi, yi, lattice, i);
        const DiscreteMeasure mu = law.x_marginal();

        const std::size_t parents = lattice.node_count(i);
        std::vector<double> drift(parents * dim);
        std::vector<double> vol(parents * dim * dim);
        parallel_for(parents, [&](std::size_t begin, std::size_t end) {
            for (std::size_t node = begin; node < end; ++node) {
                const std::span<double> b{drift.data() + node * dim, dim};
                const std::span<double> s{vol.data() + node * dim * dim, dim * dim};
                model.drift(xi.at(node), yi[node], law, b);
                model.diffusion(xi.at(node), mu, s);
                for (double v : b) {
                    if (!std::isfinite(v)) throw NonFiniteValue(i, node, "drift");
                }
                for (double v : s) {
                    if (!std::isfinite(v)) throw NonFiniteValue(i, node, "diffusion");
                }
            }
        });

        SliceValues next(dim, lattice.node_count(i + 1));
        parallel_for(next.size(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t c = begin; c < end; ++c) {
                const std::size_t p = lattice.parent(i + 1, c);
                const auto w = branches.increment(lattice.parent_branch(i + 1, c));
                const auto xp = xi.at(p);
                auto out = next.at(c);
                for (std::size_t r = 0; r < dim; ++r) {
                    double noise = 0.0;
                    for (std::size_t m = 0; m < dim; ++m) {
                        noise += vol[(p * dim + r) * dim + m] * (root_h * w[m]);
                    }
                    out[r] = xp[r] + drift[p * dim + r] * h + noise;
                    if (!std::isfinite(out[r])) throw NonFiniteValue(i + 1, c, "forward state");
                }
            }
        });
        x[i + 1] = std::move(next);
    }
    return x;
}

Slices initial_forward(const CoefficientModel& model, double h, const Lattice& lattice) {
    Slices zero(lattice.depth() + 1);
    for (std::size_t i = 0; i <= lattice.depth(); ++i) zero[i] = SliceValues(1, lattice.node_count(i), 0.0);
    return forward_pass(root_slice(lattice), zero, model, h, lattice);
}

PeriodSolution local_solve(const Slices& input_x, const SliceValues& terminal_y, const CoefficientModel& model,
                           double h, const Lattice& lattice, const FixedPointSettings& fp) {
    BackwardResult back = backward_pass(input_x, terminal_y, model, h, lattice, fp);
    PeriodSolution out;
    out.x = forward_pass(input_x[0], back.y, model, h, lattice);
    out.y = std::move(back.y);
    out.z = std::move(back.z);
    out.fixed_point_iterations = std::move(back.fixed_point_iterations);
    return out;
}

}  // namespace mkv
