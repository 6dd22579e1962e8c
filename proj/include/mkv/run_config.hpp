#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkv/measure.hpp"
#include "mkv/model.hpp"
#include "mkv/multilevel.hpp"

namespace mkv {

/// Malformed or invalid run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct InitialLaw {
    enum class Kind { point, gaussian };
    Kind kind = Kind::point;
    double point = 0.0;
    double mean = 0.0;
    double std = 0.0;
    std::size_t atoms = 1;
};

/**
 * Run configuration, read from a JSON document:
 *
 *   {
 *     "model":   {"kind": "linear", "rho": 0.1, "a": 0.25, "sigma": 1.0, "T": 1.0},
 *     "initial": {"point": 2.0}  or  {"gaussian": {"mean": 0, "std": 1, "M": 16}},
 *     "x":       0.5,            (optional evaluation point; defaults to the point or mean)
 *     "solver":  {"levels": 2, "picard": 5, "steps_per_period": 16, "scheme": "binomial",
 *                 "fp_tol": 1e-12, "fp_max_iters": 100, "node_cap": 50000000, "lattice": "auto"},
 *     "output":  {"path": "out.csv", "format": "csv"}
 *   }
 *
 * Unknown keys are rejected.
 */
struct RunConfig {
    std::string model_kind;
    ModelParams params;
    InitialLaw initial;
    std::optional<double> eval_x;
    SolverConfig solver;
    std::string output_path;
    std::string output_format = "csv";

    std::unique_ptr<CoefficientModel> make_model() const;
    std::unique_ptr<CoefficientModel> make_model(double rho) const;
    DiscreteMeasure initial_measure() const;
    Point evaluation_point() const;
    /// Reference value of U(0, x, mu), when one is available: the closed form
    /// for "linear", the finite-difference oracle for "cos_sin".
    std::optional<double> reference(double rho) const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// One CSV row; empty optionals are written as empty fields.
struct CsvRow {
    std::string model;
    double rho = 0.0;
    double a = 0.0;
    double sigma = 0.0;
    double horizon = 0.0;
    std::size_t levels = 0;
    std::size_t picard = 0;
    std::size_t steps_per_period = 0;
    std::string scheme;
    std::optional<double> y0_estimate;
    std::optional<double> reference;
    std::optional<double> abs_error;
    std::optional<double> slope;
    std::optional<double> one_level_value;
    std::optional<double> two_level_value;
    std::optional<bool> converged_one;
    std::optional<bool> converged_two;
    std::optional<double> runtime_ms;
    std::optional<std::size_t> node_evals;
};

/// CSV header, comma-separated, no trailing newline.
const std::string& csv_header();
/// Writes the header and rows with '\n' line endings and '.' decimals.
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);
/// Shortest round-trip decimal form of `value` ("nan", "inf" for non-finite).
std::string format_double(double value);

/// Row pre-filled with the model and solver columns of `config`.
CsvRow csv_row_for(const RunConfig& config, const SolverConfig& solver, double rho);

}  // namespace mkv
