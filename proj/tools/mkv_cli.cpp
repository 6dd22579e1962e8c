// Command-line driver: single evaluations, convergence studies and coupling sweeps.
//
// Exit codes: 0 success, 2 configuration error, 3 solver divergence,
// 4 node-count cap exceeded.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mkv/experiments.hpp"
#include "mkv/multilevel.hpp"
#include "mkv/run_config.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitNodeCap = 4;

struct Options {
    std::string config_path;
    std::string out_path;
    bool timing = false;
    std::string steps;
    std::string param = "rho";
    double from = 0.0;
    double to = 0.0;
    std::size_t count = 1;
    double threshold = 1e-6;
};

std::vector<std::size_t> parse_steps(const std::string& list) {
    std::vector<std::size_t> steps;
    std::stringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        long value = 0;
        try {
            value = std::stol(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || value < 1) throw mkv::ConfigError("--steps: '" + item + "' is not a positive integer");
        steps.push_back(static_cast<std::size_t>(value));
    }
    if (steps.empty()) throw mkv::ConfigError("--steps: empty list");
    return steps;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

// Writes the CSV where requested; returns the stream for human-readable output.
std::ostream& emit(const Options& opt, const mkv::RunConfig& config, const std::vector<mkv::CsvRow>& rows) {
    const std::string path = opt.out_path.empty() ? config.output_path : opt.out_path;
    if (path.empty()) {
        mkv::write_csv(std::cout, rows);
        return std::cerr;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mkv::ConfigError("cannot write output file '" + path + "'");
    mkv::write_csv(out, rows);
    return std::cout;
}

int cmd_run(const Options& opt) {
    const mkv::RunConfig config = mkv::load_run_config(opt.config_path);
    const auto model = config.make_model();
    mkv::MultilevelSolver solver(*model, config.params.horizon, config.solver);

    const auto start = std::chrono::steady_clock::now();
    const mkv::U0Result result = solver.evaluate_u0(config.evaluation_point(), config.initial_measure());
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    mkv::CsvRow row = mkv::csv_row_for(config, config.solver, config.params.rho);
    row.y0_estimate = result.value;
    row.reference = config.reference(config.params.rho);
    if (row.reference) row.abs_error = std::abs(result.value - *row.reference);
    if (opt.timing) row.runtime_ms = ms;
    row.node_evals = solver.stats().node_evals;

    std::ostream& log = emit(opt, config, {row});
    log << "estimate  " << fmt(result.value) << '\n';
    if (row.reference) {
        log << "reference " << fmt(*row.reference) << '\n' << "abs error " << fmt(*row.abs_error) << '\n';
    }
    if (result.used_observer) {
        log << "evaluated through an observer root; nearest support point at distance "
            << fmt(result.nearest_distance) << '\n';
    }
    log << "lattice   " << mkv::topology_name(solver.topology()) << ", " << solver.stats().node_evals
        << " node evaluations, " << fmt(ms) << " ms\n";
    return 0;
}

int cmd_converge(const Options& opt) {
    const mkv::RunConfig config = mkv::load_run_config(opt.config_path);
    const std::vector<std::size_t> steps = parse_steps(opt.steps);
    const auto model = config.make_model();

    const double rho = config.params.rho;
    const mkv::ConvergenceStudy study = mkv::run_convergence_study(
        *model, config.params.horizon, config.evaluation_point(), config.initial_measure(), config.solver, steps,
        [&](const mkv::SolverConfig&) { return config.reference(rho); });

    std::vector<mkv::CsvRow> rows;
    for (const mkv::ErrorReport& report : study.reports) {
        mkv::CsvRow row = mkv::csv_row_for(config, report.config, rho);
        row.y0_estimate = report.estimate;
        row.reference = report.reference;
        row.abs_error = report.abs_error;
        row.slope = study.slope;
        if (opt.timing) row.runtime_ms = report.runtime_ms;
        row.node_evals = report.node_evals;
        rows.push_back(row);
    }

    std::ostream& log = emit(opt, config, rows);
    for (const mkv::ErrorReport& report : study.reports) {
        log << "steps " << report.config.steps_per_period << "  estimate " << fmt(report.estimate);
        if (report.abs_error) log << "  error " << fmt(*report.abs_error);
        log << '\n';
    }
    if (study.slope) log << "log-log slope " << fmt(*study.slope) << '\n';
    return 0;
}

int cmd_sweep(const Options& opt) {
    const mkv::RunConfig config = mkv::load_run_config(opt.config_path);
    if (opt.param != "rho") throw mkv::ConfigError("--param: only 'rho' can be swept");
    if (opt.count < 1) throw mkv::ConfigError("--count must be at least 1");
    if (!std::isfinite(opt.from) || !std::isfinite(opt.to)) throw mkv::ConfigError("--from/--to must be finite");

    std::vector<double> rhos(opt.count);
    for (std::size_t i = 0; i < opt.count; ++i) {
        rhos[i] = opt.count == 1
                      ? opt.from
                      : opt.from + (opt.to - opt.from) * static_cast<double>(i) / static_cast<double>(opt.count - 1);
    }

    const mkv::SolverConfig& two_level = config.solver;
    const mkv::SolverConfig one_level = mkv::matched_one_level(two_level);
    const auto rows_out = mkv::run_coupling_sweep(
        [&](double rho) { return config.make_model(rho); }, rhos, config.params.horizon, config.evaluation_point(),
        config.initial_measure(), one_level, two_level, opt.threshold,
        [&](double rho) { return config.reference(rho); });

    std::vector<mkv::CsvRow> rows;
    for (const mkv::SweepRow& r : rows_out) {
        mkv::CsvRow row = mkv::csv_row_for(config, two_level, r.rho);
        row.reference = r.reference;
        row.one_level_value = r.one_level_value;
        row.two_level_value = r.two_level_value;
        row.converged_one = r.one_level_converged;
        row.converged_two = r.two_level_converged;
        if (opt.timing) row.runtime_ms = r.runtime_ms;
        row.node_evals = r.node_evals;
        rows.push_back(row);
    }

    std::ostream& log = emit(opt, config, rows);
    for (const mkv::SweepRow& r : rows_out) {
        log << "rho " << fmt(r.rho) << "  one-level " << fmt(r.one_level_value)
            << (r.one_level_converged ? " (converged)" : " (not converged)") << "  multi-level "
            << fmt(r.two_level_value) << (r.two_level_converged ? " (converged)" : " (not converged)");
        if (r.reference) log << "  reference " << fmt(*r.reference);
        log << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-level Picard solver for McKean-Vlasov forward-backward SDEs"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&opt](CLI::App* cmd) {
        cmd->add_option("--config", opt.config_path, "JSON run configuration")->required();
        cmd->add_option("--out", opt.out_path, "CSV output file (overrides output.path)");
        cmd->add_flag("--timing", opt.timing, "Fill the runtime_ms column");
    };

    CLI::App* run = app.add_subcommand("run", "Evaluate U(0, x, mu) once");
    add_common(run);

    CLI::App* converge = app.add_subcommand("converge", "Error against the reference over a list of step counts");
    add_common(converge);
    converge->add_option("--steps", opt.steps, "Comma-separated steps_per_period values")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "One-level versus multi-level over a coupling grid");
    add_common(sweep);
    sweep->add_option("--param", opt.param, "Swept parameter (rho)");
    sweep->add_option("--from", opt.from, "First value")->required();
    sweep->add_option("--to", opt.to, "Last value")->required();
    sweep->add_option("--count", opt.count, "Number of grid points")->required();
    sweep->add_option("--threshold", opt.threshold, "Picard residual below which a run counts as converged");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(opt);
        if (converge->parsed()) return cmd_converge(opt);
        return cmd_sweep(opt);
    } catch (const mkv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const mkv::ResourceLimitError& e) {
        std::cerr << "node cap: " << e.what() << '\n';
        return kExitNodeCap;
    } catch (const mkv::FixedPointDivergence& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const mkv::NonFiniteValue& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
}
