#include "mkv/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "mkv/experiments.hpp"

namespace mkv {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* k : allowed) known = known || key == k;
        if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

double get_number(const json& obj, const char* key, const std::string& where, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where + "." + key + " must be finite");
    return d;
}

std::size_t get_count(const json& obj, const char* key, const std::string& where, std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    // Accept integral floats such as 5e7.
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 1.0 && d == std::floor(d) && d < 1e18) return static_cast<std::size_t>(d);
    }
    throw ConfigError(where + "." + key + " must be a positive integer");
}

std::string get_string(const json& obj, const char* key, const std::string& where, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
    return v.get<std::string>();
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(doc, "config", {"model", "initial", "x", "solver", "output"});

    RunConfig cfg;
    if (!doc.contains("model")) throw ConfigError("config.model is required");
    const json& model = doc.at("model");
    reject_unknown(model, "model", {"kind", "rho", "a", "sigma", "T"});
    if (!model.contains("kind")) throw ConfigError("model.kind is required");
    cfg.model_kind = get_string(model, "kind", "model", "");
    if (cfg.model_kind != "linear" && cfg.model_kind != "cos_sin" && cfg.model_kind != "mfg_atan") {
        throw ConfigError("model.kind must be one of linear, cos_sin, mfg_atan");
    }
    cfg.params.rho = get_number(model, "rho", "model", 0.0);
    cfg.params.a = get_number(model, "a", "model", 0.0);
    cfg.params.sigma = get_number(model, "sigma", "model", 1.0);
    cfg.params.horizon = get_number(model, "T", "model", 1.0);
    if (!(cfg.params.horizon > 0.0)) throw ConfigError("model.T must be positive");
    if (!(cfg.params.sigma >= 0.0)) throw ConfigError("model.sigma must be non-negative");

    if (!doc.contains("initial")) throw ConfigError("config.initial is required");
    const json& initial = doc.at("initial");
    reject_unknown(initial, "initial", {"point", "gaussian"});
    if (initial.contains("point") == initial.contains("gaussian")) {
        throw ConfigError("initial must have exactly one of 'point' or 'gaussian'");
    }
    if (initial.contains("point")) {
        cfg.initial.kind = InitialLaw::Kind::point;
        cfg.initial.point = get_number(initial, "point", "initial", 0.0);
    } else {
        const json& g = initial.at("gaussian");
        reject_unknown(g, "initial.gaussian", {"mean", "std", "M"});
        cfg.initial.kind = InitialLaw::Kind::gaussian;
        cfg.initial.mean = get_number(g, "mean", "initial.gaussian", 0.0);
        cfg.initial.std = get_number(g, "std", "initial.gaussian", 1.0);
        cfg.initial.atoms = get_count(g, "M", "initial.gaussian", 16);
        if (!(cfg.initial.std >= 0.0)) throw ConfigError("initial.gaussian.std must be non-negative");
    }
    if (doc.contains("x")) cfg.eval_x = get_number(doc, "x", "config", 0.0);

    if (doc.contains("solver")) {
        const json& s = doc.at("solver");
        reject_unknown(s, "solver", {"levels", "picard", "steps_per_period", "scheme", "fp_tol", "fp_max_iters",
                                     "node_cap", "lattice"});
        cfg.solver.levels = get_count(s, "levels", "solver", cfg.solver.levels);
        cfg.solver.picard = get_count(s, "picard", "solver", cfg.solver.picard);
        cfg.solver.steps_per_period = get_count(s, "steps_per_period", "solver", cfg.solver.steps_per_period);
        cfg.solver.scheme = get_string(s, "scheme", "solver", cfg.solver.scheme);
        cfg.solver.fixed_point.tolerance = get_number(s, "fp_tol", "solver", cfg.solver.fixed_point.tolerance);
        cfg.solver.fixed_point.max_iterations =
            get_count(s, "fp_max_iters", "solver", cfg.solver.fixed_point.max_iterations);
        cfg.solver.node_cap = get_count(s, "node_cap", "solver", cfg.solver.node_cap);
        try {
            cfg.solver.topology = topology_choice_from_name(get_string(s, "lattice", "solver", "auto"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    try {
        cfg.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    if (doc.contains("output")) {
        const json& o = doc.at("output");
        reject_unknown(o, "output", {"path", "format"});
        cfg.output_path = get_string(o, "path", "output", "");
        cfg.output_format = get_string(o, "format", "output", "csv");
        if (cfg.output_format != "csv") throw ConfigError("output.format must be 'csv'");
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str());
}

std::unique_ptr<CoefficientModel> RunConfig::make_model() const { return make_model(params.rho); }

std::unique_ptr<CoefficientModel> RunConfig::make_model(double rho) const {
    ModelParams p = params;
    p.rho = rho;
    return mkv::make_model(model_kind, p);
}

DiscreteMeasure RunConfig::initial_measure() const {
    if (initial.kind == InitialLaw::Kind::point) return DiscreteMeasure::from_1d({initial.point}, {1.0});
    return quantize_gaussian(initial.mean, initial.std, initial.atoms);
}

Point RunConfig::evaluation_point() const {
    if (eval_x) return {*eval_x};
    return {initial.kind == InitialLaw::Kind::point ? initial.point : initial.mean};
}

std::optional<double> RunConfig::reference(double rho) const {
    const double x = evaluation_point()[0];
    if (model_kind == "linear") {
        const double m0 = mean(initial_measure())[0];
        return linear_reference_at(x, m0, rho, params.a, params.horizon);
    }
    if (model_kind == "cos_sin") {
        const PdeOracleSettings settings;
        if (!(params.sigma > 0.0) || std::abs(x) >= 0.9 * settings.half_width) return std::nullopt;
        return no_mkv_pde_oracle(rho, params.sigma, params.horizon, x, settings);
    }
    return std::nullopt;
}

const std::string& csv_header() {
    static const std::string header =
        "model,rho,a,sigma,T,N_levels,J_picard,steps_per_period,scheme,y0_estimate,reference,abs_error,slope,"
        "one_level_value,two_level_value,converged_one,converged_two,runtime_ms,node_evals";
    return header;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
    const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    out << csv_header() << '\n';
    for (const CsvRow& r : rows) {
        out << r.model << ',' << format_double(r.rho) << ',' << format_double(r.a) << ',' << format_double(r.sigma)
            << ',' << format_double(r.horizon) << ',' << r.levels << ',' << r.picard << ',' << r.steps_per_period
            << ',' << r.scheme << ',' << opt(r.y0_estimate) << ',' << opt(r.reference) << ',' << opt(r.abs_error)
            << ',' << opt(r.slope) << ',' << opt(r.one_level_value) << ',' << opt(r.two_level_value) << ','
            << (r.converged_one ? (*r.converged_one ? "1" : "0") : "") << ','
            << (r.converged_two ? (*r.converged_two ? "1" : "0") : "") << ',' << opt(r.runtime_ms) << ','
            << (r.node_evals ? std::to_string(*r.node_evals) : std::string()) << '\n';
    }
}

CsvRow csv_row_for(const RunConfig& config, const SolverConfig& solver, double rho) {
    CsvRow row;
    row.model = config.model_kind;
    row.rho = rho;
    row.a = config.params.a;
    row.sigma = config.params.sigma;
    row.horizon = config.params.horizon;
    row.levels = solver.levels;
    row.picard = solver.picard;
    row.steps_per_period = solver.steps_per_period;
    row.scheme = solver.scheme;
    return row;
}

}  // namespace mkv
