#include "mkv/experiments.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace mkv {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct MeansReplay {
    double rho;
    double a;
    const TimeGrid& grid;
    std::size_t picard;
    MeansTrace& trace;

    double solve(std::size_t level, double m) {
        if (level == grid.periods) return m;  // g(x) = x
        const std::size_t n = grid.steps_per_period;
        const double h = grid.step();
        const double growth = 1.0 - a * h;

        MeansPass pass{level, 0, std::vector<double>(n + 1, m), std::vector<double>(n + 1, 0.0)};
        trace.passes.push_back(pass);
        for (std::size_t j = 1; j <= picard; ++j) {
            const double eta = solve(level + 1, pass.x_mean[n]);
            pass.iteration = j;
            pass.y_mean[n] = eta;
            for (std::size_t i = n; i-- > 0;) pass.y_mean[i] = pass.y_mean[i + 1] / growth;
            pass.x_mean[0] = m;
            for (std::size_t i = 0; i < n; ++i) pass.x_mean[i + 1] = pass.x_mean[i] - rho * h * pass.y_mean[i];
            trace.passes.push_back(pass);
        }
        return pass.y_mean[0];
    }
};

}  // namespace

double linear_reference(double m0, double rho, double a, double horizon) {
    if (a == 0.0) return m0 / (1.0 + rho * horizon);
    const double growth = std::exp(a * horizon);
    return m0 * growth / (1.0 + rho / a * (growth - 1.0));
}

double linear_reference_at(double x, double m0, double rho, double a, double horizon) {
    const double population = linear_reference(m0, rho, a, horizon);
    if (a == 0.0) return x - rho * horizon * population;
    return std::exp(a * horizon) * (x - rho * population * (1.0 - std::exp(-a * horizon)) / a);
}

MeansTrace linear_means_oracle(double rho, double a, const TimeGrid& grid, std::size_t picard, double m0) {
    if (!(1.0 - a * grid.step() > 0.0)) {
        throw std::invalid_argument("linear_means_oracle: need 1 - a h > 0");
    }
    MeansTrace trace;
    MeansReplay replay{rho, a, grid, picard, trace};
    trace.value = replay.solve(0, m0);
    return trace;
}

double no_mkv_pde_oracle(double rho, double sigma, double horizon, double x, const PdeOracleSettings& settings) {
    if (!(sigma > 0.0) || !(horizon > 0.0) || !(settings.half_width > 0.0) || settings.space_steps < 4) {
        throw std::invalid_argument("no_mkv_pde_oracle: need sigma > 0, T > 0, L > 0 and at least 4 cells");
    }
    const double width = settings.half_width;
    if (std::abs(x) >= width) throw std::invalid_argument("no_mkv_pde_oracle: x outside the domain");

    const std::size_t cells = settings.space_steps;
    const double dx = 2.0 * width / static_cast<double>(cells);
    const double diffusion = 0.5 * sigma * sigma;

    std::size_t steps = settings.time_steps;
    if (steps == 0) {
        double dt_max = 0.45 * dx * dx / diffusion;
        if (rho != 0.0) dt_max = std::min(dt_max, 0.9 * 2.0 * diffusion / (rho * rho));
        steps = static_cast<std::size_t>(std::ceil(horizon / dt_max));
    }
    const double dt = horizon / static_cast<double>(steps);
    const double mesh_ratio = diffusion * dt / (dx * dx);
    const double courant = std::abs(rho) * dt / dx;
    if (mesh_ratio > 0.5 || courant * courant > 2.0 * mesh_ratio) {
        throw StabilityError("no_mkv_pde_oracle: time step " + std::to_string(dt) +
                             " violates the explicit stability bound");
    }

    std::vector<double> grid(cells + 1);
    std::vector<double> u(cells + 1);
    for (std::size_t j = 0; j <= cells; ++j) {
        grid[j] = -width + dx * static_cast<double>(j);
        u[j] = std::sin(grid[j]);
    }
    std::vector<double> next(u.size());
    for (std::size_t s = 1; s <= steps; ++s) {
        for (std::size_t j = 1; j < cells; ++j) {
            const double ux = (u[j + 1] - u[j - 1]) / (2.0 * dx);
            const double uxx = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (dx * dx);
            next[j] = u[j] + dt * (rho * std::cos(u[j]) * ux + diffusion * uxx);
        }
        const double decay = std::exp(-diffusion * dt * static_cast<double>(s));
        next[0] = std::sin(-width) * decay;
        next[cells] = std::sin(width) * decay;
        std::swap(u, next);
    }

    const double pos = (x + width) / dx;
    const auto j = std::min(static_cast<std::size_t>(pos), cells - 1);
    const double t = pos - static_cast<double>(j);
    return (1.0 - t) * u[j] + t * u[j + 1];
}

std::optional<double> log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (!(y[i] > 0.0) || !(x[i] > 0.0)) continue;
        const double lx = std::log10(x[i]);
        const double ly = std::log10(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        count += 1.0;
    }
    if (count < 2.0) return std::nullopt;
    const double denom = count * sxx - sx * sx;
    if (denom == 0.0) return std::nullopt;
    return (count * sxy - sx * sy) / denom;
}

ConvergenceStudy run_convergence_study(const CoefficientModel& model, double horizon, const Point& x,
                                       const DiscreteMeasure& mu, const SolverConfig& base,
                                       const std::vector<std::size_t>& steps, const ReferenceFn& reference) {
    ConvergenceStudy study;
    std::vector<double> xs;
    std::vector<double> errors;
    for (std::size_t s : steps) {
        SolverConfig config = base;
        config.steps_per_period = s;
        MultilevelSolver solver(model, horizon, config);

        const auto start = Clock::now();
        const U0Result result = solver.evaluate_u0(x, mu);

        ErrorReport report;
        report.runtime_ms = elapsed_ms(start);
        report.model = model.name();
        report.config = config;
        report.estimate = result.value;
        if (reference) report.reference = reference(config);
        if (report.reference) {
            report.abs_error = std::abs(report.estimate - *report.reference);
            xs.push_back(static_cast<double>(s));
            errors.push_back(*report.abs_error);
        }
        report.picard_residuals = result.top.residuals;
        report.max_fixed_point_iterations = solver.stats().max_fixed_point_iterations;
        report.node_evals = solver.stats().node_evals;
        study.reports.push_back(std::move(report));
    }
    study.slope = log_log_slope(xs, errors);
    return study;
}

SolverConfig matched_one_level(const SolverConfig& multi_level) {
    SolverConfig one = multi_level;
    one.levels = 1;
    std::size_t picard = 1;
    for (std::size_t k = 0; k < multi_level.levels; ++k) picard *= multi_level.picard;
    one.picard = picard;
    one.steps_per_period = multi_level.levels * multi_level.steps_per_period;
    return one;
}

std::vector<SweepRow> run_coupling_sweep(const ModelFamily& family, const std::vector<double>& rhos, double horizon,
                                         const Point& x, const DiscreteMeasure& mu, const SolverConfig& one_level,
                                         const SolverConfig& two_level, double threshold,
                                         const SweepReferenceFn& reference) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    struct Outcome {
        double value = nan;
        double residual = nan;
        bool converged = false;
        std::size_t node_evals = 0;
    };
    const auto run = [&](const CoefficientModel& model, const SolverConfig& config) {
        Outcome out;
        MultilevelSolver solver(model, horizon, config);
        try {
            const U0Result result = solver.evaluate_u0(x, mu);
            out.value = result.value;
            out.residual = result.top.residuals.back();
            out.converged = std::isfinite(out.value) && out.residual < threshold;
        } catch (const FixedPointDivergence&) {
        } catch (const NonFiniteValue&) {
        }
        out.node_evals = solver.stats().node_evals;
        return out;
    };

    std::vector<SweepRow> rows;
    rows.reserve(rhos.size());
    for (double rho : rhos) {
        const auto start = Clock::now();
        const auto model = family(rho);
        const Outcome one = run(*model, one_level);
        const Outcome two = run(*model, two_level);

        SweepRow row;
        row.rho = rho;
        row.one_level_value = one.value;
        row.two_level_value = two.value;
        row.one_level_residual = one.residual;
        row.two_level_residual = two.residual;
        row.one_level_converged = one.converged;
        row.two_level_converged = two.converged;
        row.node_evals = one.node_evals + two.node_evals;
        if (reference) row.reference = reference(rho);
        row.runtime_ms = elapsed_ms(start);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mkv
