#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "mkv/multilevel.hpp"

namespace {

using mkv::MultilevelSolver;
using mkv::Root;
using mkv::SolverConfig;
using mkv::TopologyChoice;

SolverConfig config(std::size_t levels, std::size_t picard, std::size_t steps,
                    TopologyChoice topology = TopologyChoice::automatic) {
    SolverConfig c;
    c.levels = levels;
    c.picard = picard;
    c.steps_per_period = steps;
    c.topology = topology;
    return c;
}

std::vector<Root> gaussian_roots() {
    return {Root{{-1.2}, 0.25, false}, Root{{0.1}, 0.5, false}, Root{{0.9}, 0.25, false}};
}

std::size_t pow_size(std::size_t base, std::size_t exp) {
    std::size_t out = 1;
    for (std::size_t i = 0; i < exp; ++i) out *= base;
    return out;
}

}  // namespace

TEST(SolveLevel, TerminalLevelAppliesG) {
    const auto model = mkv::mfg_atan_model(0.5);
    MultilevelSolver solver(*model, 1.0, config(2, 3, 4));
    const auto roots = gaussian_roots();
    const auto res = solver.solve_level(2, roots);
    ASSERT_EQ(res.y_at_roots.size(), 3u);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(res.y_at_roots[r], std::atan(roots[r].x[0]));
    EXPECT_TRUE(res.residuals.empty());
    EXPECT_EQ(solver.stats().node_evals, 3u);
    EXPECT_EQ(solver.stats().local_solves, 0u);
}

TEST(SolveLevel, MartingaleAtEveryRoot) {
    const auto model = mkv::linear_model(0.0, 0.0, 1.0);
    for (std::size_t levels : {1u, 2u, 3u}) {
        for (std::size_t steps : {1u, 4u, 7u}) {
            const auto topology = levels * steps > 8 ? TopologyChoice::recombining : TopologyChoice::path;
            MultilevelSolver solver(*model, 1.0, config(levels, 2, steps, topology));
            const auto res = solver.solve_level(0, gaussian_roots());
            for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(res.y_at_roots[r], gaussian_roots()[r].x[0], 1e-13);
        }
    }
}

TEST(SolveLevel, DecoupledProblemNeedsOnePicardIteration) {
    const auto model = mkv::cos_sin_model(0.0, 1.0);
    MultilevelSolver one(*model, 1.0, config(2, 1, 6));
    MultilevelSolver many(*model, 1.0, config(2, 25, 6));
    const auto a = one.solve_level(0, gaussian_roots());
    const auto b = many.solve_level(0, gaussian_roots());
    for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(a.y_at_roots[r], b.y_at_roots[r], 1e-14);
    for (std::size_t j = 1; j < b.residuals.size(); ++j) EXPECT_LT(b.residuals[j], 1e-14);
}

TEST(SolveLevel, PicardResidualsContract) {
    const auto model = mkv::linear_model(0.1, 0.25, 1.0);
    MultilevelSolver solver(*model, 1.0, config(2, 5, 8));
    const auto res = solver.solve_level(0, {Root{{2.0}, 1.0, false}});
    ASSERT_EQ(res.residuals.size(), 5u);
    EXPECT_LT(res.residuals.back() / res.residuals.front(), 0.1);
    for (std::size_t j = 1; j < 5; ++j) EXPECT_LT(res.residuals[j], res.residuals[j - 1]);
    EXPECT_EQ(res.root_residuals.size(), 5u);
}

TEST(SolveLevel, RootPermutationPermutesOutputs) {
    const auto model = mkv::mfg_atan_model(0.7);
    MultilevelSolver solver(*model, 1.0, config(2, 3, 3));
    const auto roots = gaussian_roots();
    const std::vector<Root> permuted{roots[2], roots[0], roots[1]};
    const auto a = solver.solve_level(0, roots);
    const auto b = solver.solve_level(0, permuted);
    EXPECT_NEAR(b.y_at_roots[0], a.y_at_roots[2], 1e-12);
    EXPECT_NEAR(b.y_at_roots[1], a.y_at_roots[0], 1e-12);
    EXPECT_NEAR(b.y_at_roots[2], a.y_at_roots[1], 1e-12);
}

TEST(SolveLevel, ObserverRootChangesNothing) {
    const auto model = mkv::mfg_atan_model(0.7);
    MultilevelSolver solver(*model, 1.0, config(2, 3, 3));
    auto roots = gaussian_roots();
    const auto plain = solver.solve_level(0, roots);
    roots.insert(roots.begin() + 1, Root{{0.4}, 0.0, true});
    const auto observed = solver.solve_level(0, roots);
    EXPECT_EQ(observed.y_at_roots[0], plain.y_at_roots[0]);
    EXPECT_EQ(observed.y_at_roots[2], plain.y_at_roots[1]);
    EXPECT_EQ(observed.y_at_roots[3], plain.y_at_roots[2]);
    EXPECT_EQ(observed.residuals, plain.residuals);
}

TEST(SolveLevel, PathAndRecombiningAgree) {
    const auto model = mkv::linear_model(0.4, 0.25, 0.8);
    MultilevelSolver path(*model, 1.0, config(2, 3, 5, TopologyChoice::path));
    MultilevelSolver recombining(*model, 1.0, config(2, 3, 5, TopologyChoice::recombining));
    const auto a = path.solve_level(0, gaussian_roots());
    const auto b = recombining.solve_level(0, gaussian_roots());
    for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(a.y_at_roots[r], b.y_at_roots[r], 1e-12);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.residuals[j], b.residuals[j], 1e-12);
    EXPECT_LT(recombining.stats().node_evals, path.stats().node_evals);
}

TEST(SolveLevel, NodeEvaluationsClosedForm) {
    // Binomial path tree, R roots, N = 2: the level-0 lattice is visited 1 + 2J
    // times, each of its J leaf sets spawns a level-1 call with R 2^n roots, and
    // each of those calls J terminal evaluations on R 4^n points.
    const auto model = mkv::mfg_atan_model(0.3);
    for (std::size_t n : {2u, 3u, 5u}) {
        for (std::size_t picard : {1u, 2u, 4u}) {
            MultilevelSolver solver(*model, 1.0, config(2, picard, n));
            solver.solve_level(0, gaussian_roots());
            const std::size_t roots = 3;
            const std::size_t tree = pow_size(2, n + 1) - 1;
            const std::size_t passes = 1 + 2 * picard;
            const std::size_t level1 = passes * roots * pow_size(2, n) * tree + picard * roots * pow_size(4, n);
            const std::size_t expected = passes * roots * tree + picard * level1;
            EXPECT_EQ(solver.stats().node_evals, expected);
            EXPECT_EQ(solver.projected_node_evals(0, roots), expected);
            EXPECT_EQ(solver.stats().local_solves, picard + picard * picard);
        }
    }
}

TEST(SolveLevel, NodeCapGuardsBeforeWork) {
    const auto model = mkv::linear_model(0.1, 0.25, 1.0);
    SolverConfig c = config(2, 5, 8);
    c.node_cap = 10;
    MultilevelSolver solver(*model, 1.0, c);
    EXPECT_THROW(solver.solve_level(0, gaussian_roots()), mkv::ResourceLimitError);
    EXPECT_EQ(solver.stats().node_evals, 0u);
    EXPECT_EQ(solver.stats().level_calls, 0u);
}

TEST(SolveLevel, DivergenceCarriesContext) {
    const auto model = mkv::linear_model(0.0, 40.0, 1.0);
    MultilevelSolver solver(*model, 1.0, config(2, 2, 1));
    try {
        solver.solve_level(0, gaussian_roots());
        FAIL() << "expected FixedPointDivergence";
    } catch (const mkv::FixedPointDivergence& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("level 1"), std::string::npos) << msg;
        EXPECT_NE(msg.find("Picard iteration 1"), std::string::npos) << msg;
    }
}

TEST(SolveLevel, TraceVisitsEveryPass) {
    const auto model = mkv::linear_model(0.1, 0.25, 1.0);
    MultilevelSolver solver(*model, 1.0, config(2, 3, 2));
    std::size_t level0 = 0;
    std::size_t level1 = 0;
    solver.set_trace([&](const mkv::PassEvent& e) {
        (e.level == 0 ? level0 : level1) += 1;
        if (e.iteration == 0) {
            for (const auto& s : e.solution.y) {
                for (double v : s.values) EXPECT_EQ(v, 0.0);
            }
        }
    });
    solver.solve_level(0, {Root{{2.0}, 1.0, false}});
    EXPECT_EQ(level0, 4u);
    EXPECT_EQ(level1, 12u);
}

TEST(SolverConfig, Validation) {
    const auto model = mkv::mfg_atan_model(0.5);
    EXPECT_THROW(MultilevelSolver(*model, 1.0, config(0, 5, 8)), std::invalid_argument);
    EXPECT_THROW(MultilevelSolver(*model, 1.0, config(2, 5, 8, TopologyChoice::recombining)), std::invalid_argument);
    SolverConfig bad = config(2, 5, 8);
    bad.scheme = "quadrinomial";
    EXPECT_THROW(MultilevelSolver(*model, 1.0, bad), std::invalid_argument);
    EXPECT_EQ(mkv::topology_choice_from_name("auto"), TopologyChoice::automatic);
    EXPECT_THROW(mkv::topology_choice_from_name("grid"), std::invalid_argument);
}

TEST(SolverConfig, AutomaticTopology) {
    const auto linear = mkv::linear_model(0.5, 0.1, 1.0);
    const auto coupled = mkv::cos_sin_model(0.5, 1.0);
    EXPECT_EQ(MultilevelSolver(*linear, 1.0, config(2, 5, 8)).topology(), mkv::LatticeTopology::recombining);
    EXPECT_EQ(MultilevelSolver(*coupled, 1.0, config(2, 5, 8)).topology(), mkv::LatticeTopology::path);
}

TEST(EvaluateU0, DeterministicLawNeedsNoObserver) {
    const auto model = mkv::linear_model(0.1, 0.25, 1.0);
    MultilevelSolver solver(*model, 1.0, config(2, 5, 4));
    const auto res = solver.evaluate_u0({2.0}, mkv::DiscreteMeasure::dirac({2.0}));
    EXPECT_FALSE(res.used_observer);
    EXPECT_EQ(res.nearest_distance, 0.0);
    EXPECT_EQ(res.matched_root[0], 2.0);
    EXPECT_EQ(res.value, res.top.y_at_roots[0]);
}

TEST(EvaluateU0, OffSupportUsesObserver) {
    const auto model = mkv::linear_model(0.1, 0.25, 1.0);
    MultilevelSolver solver(*model, 1.0, config(2, 5, 4));
    const auto mu = mkv::quantize_gaussian(0.0, 1.0, 4);
    const auto on = solver.evaluate_u0({mu.point(2)[0]}, mu);
    const auto off = solver.evaluate_u0({0.05}, mu);
    EXPECT_FALSE(on.used_observer);
    EXPECT_TRUE(off.used_observer);
    EXPECT_EQ(off.top.y_at_roots.size(), 5u);
    EXPECT_NEAR(off.nearest_distance, std::abs(0.05 - mu.point(2)[0]), 1e-15);
    for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(off.top.y_at_roots[r], on.top.y_at_roots[r]);
    EXPECT_THROW(solver.evaluate_u0({0.0, 1.0}, mu), std::invalid_argument);
}
