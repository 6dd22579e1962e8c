#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mkv/experiments.hpp"
#include "mkv/run_config.hpp"

namespace {

const char* kLinear = R"({
  "model": {"kind": "linear", "rho": 0.1, "a": 0.25, "sigma": 1.0, "T": 1.0},
  "initial": {"point": 2.0},
  "solver": {"levels": 2, "picard": 5, "steps_per_period": 16, "scheme": "binomial",
             "fp_tol": 1e-12, "fp_max_iters": 100, "node_cap": 5e7},
  "output": {"path": "out.csv", "format": "csv"}
})";

}  // namespace

TEST(RunConfig, ParsesFullDocument) {
    const auto cfg = mkv::parse_run_config(kLinear);
    EXPECT_EQ(cfg.model_kind, "linear");
    EXPECT_EQ(cfg.params.a, 0.25);
    EXPECT_EQ(cfg.solver.steps_per_period, 16u);
    EXPECT_EQ(cfg.solver.node_cap, 50'000'000u);
    EXPECT_EQ(cfg.output_path, "out.csv");
    EXPECT_EQ(cfg.evaluation_point()[0], 2.0);
    EXPECT_NEAR(*cfg.reference(0.1), mkv::linear_reference(2.0, 0.1, 0.25, 1.0), 1e-15);
}

TEST(RunConfig, GaussianInitialLaw) {
    const auto cfg = mkv::parse_run_config(
        R"({"model": {"kind": "mfg_atan", "rho": 0.5}, "initial": {"gaussian": {"mean": 1, "std": 2, "M": 8}},
            "x": 0.25})");
    const auto mu = cfg.initial_measure();
    EXPECT_EQ(mu.size(), 8u);
    EXPECT_NEAR(mkv::mean(mu)[0], 1.0, 1e-12);
    EXPECT_EQ(cfg.evaluation_point()[0], 0.25);
    EXPECT_FALSE(cfg.reference(0.5).has_value());
    EXPECT_EQ(cfg.solver.levels, 2u);
}

TEST(RunConfig, CosSinReferenceFromPde) {
    const auto cfg = mkv::parse_run_config(
        R"({"model": {"kind": "cos_sin", "rho": 0.0, "sigma": 1.0}, "initial": {"point": 0.0}})");
    EXPECT_NEAR(*cfg.reference(0.0), 0.0, 1e-12);
}

TEST(RunConfig, RejectsMalformedDocuments) {
    const char* bad[] = {
        "not json",
        R"({"initial": {"point": 0}})",
        R"({"model": {"kind": "heston"}, "initial": {"point": 0}})",
        R"({"model": {"kind": "linear", "beta": 1}, "initial": {"point": 0}})",
        R"({"model": {"kind": "linear"}, "initial": {"point": 0}, "extra": 1})",
        R"({"model": {"kind": "linear"}, "initial": {"point": 0, "gaussian": {}}})",
        R"({"model": {"kind": "linear"}, "initial": {}})",
        R"({"model": {"kind": "linear"}, "initial": {"point": 0}, "solver": {"levels": 0}})",
        R"({"model": {"kind": "linear"}, "initial": {"point": 0}, "solver": {"picard": 2.5}})",
        R"({"model": {"kind": "linear"}, "initial": {"point": 0}, "solver": {"scheme": "pentanomial"}})",
        R"({"model": {"kind": "linear"}, "initial": {"point": 0}, "solver": {"lattice": "grid"}})",
        R"({"model": {"kind": "linear"}, "initial": {"point": 0}, "output": {"format": "parquet"}})",
        R"({"model": {"kind": "linear", "T": -1}, "initial": {"point": 0}})",
        R"({"model": {"kind": "linear", "rho": "big"}, "initial": {"point": 0}})",
    };
    for (const char* doc : bad) EXPECT_THROW(mkv::parse_run_config(doc), mkv::ConfigError) << doc;
    EXPECT_THROW(mkv::load_run_config("/nonexistent/config.json"), mkv::ConfigError);
}

TEST(Csv, HeaderAndEmptyFields) {
    mkv::CsvRow row;
    row.model = "linear";
    row.rho = 0.1;
    row.a = 0.25;
    row.sigma = 1.0;
    row.horizon = 1.0;
    row.levels = 2;
    row.picard = 5;
    row.steps_per_period = 16;
    row.scheme = "binomial";
    row.y0_estimate = 2.5;
    row.converged_one = false;
    row.node_evals = 42;
    std::ostringstream out;
    mkv::write_csv(out, {row});
    EXPECT_EQ(out.str(), mkv::csv_header() + "\nlinear,0.1,0.25,1,1,2,5,16,binomial,2.5,,,,,,0,,,42\n");
}

TEST(Csv, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.306059077246849, 1e-300, 6.02e23}) {
        EXPECT_EQ(std::stod(mkv::format_double(v)), v);
    }
    EXPECT_EQ(mkv::format_double(std::nan("")), "nan");
    EXPECT_EQ(mkv::format_double(-INFINITY), "-inf");
}
