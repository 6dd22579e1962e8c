#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mkv/local_solver.hpp"
#include "mkv/parallel.hpp"

namespace {

using mkv::IncrementScheme;
using mkv::Lattice;
using mkv::LatticeTopology;
using mkv::Root;
using mkv::SliceValues;

// Drift turns NaN once |x| exceeds a threshold.
class BlowUpModel final : public mkv::CoefficientModel {
public:
    std::string name() const override { return "blow_up"; }
    void drift(std::span<const double> x, double, const mkv::JointLaw&, std::span<double> out) const override {
        out[0] = std::abs(x[0]) > 2.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    }
    void diffusion(std::span<const double>, const mkv::DiscreteMeasure&, std::span<double> out) const override {
        out[0] = 1.0;
    }
    double driver(std::span<const double>, double, std::span<const double>, const mkv::JointLaw&) const override {
        return 0.0;
    }
    double terminal(std::span<const double> x, const mkv::DiscreteMeasure&) const override { return x[0]; }
};

Lattice two_root_path(std::size_t depth) {
    return Lattice({Root{{-0.5}, 0.4, false}, Root{{1.0}, 0.6, false}}, IncrementScheme::binomial(), 1, depth,
                   LatticeTopology::path);
}

SliceValues random_slice(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    SliceValues s(1, n);
    for (double& v : s.values) v = g(rng);
    return s;
}

}  // namespace

TEST(ForwardPass, PureWalkOneStep) {
    const auto model = mkv::linear_model(0.0, 0.0, 1.0);
    const Lattice lat({Root{{0.0}, 1.0, false}}, IncrementScheme::binomial(), 1, 1, LatticeTopology::path);
    const auto x = mkv::initial_forward(*model, 1.0, lat);
    ASSERT_EQ(x.size(), 2u);
    EXPECT_EQ(x[1][0], 1.0);
    EXPECT_EQ(x[1][1], -1.0);
}

TEST(ForwardPass, InitialDriftOfCosSin) {
    const double h = 0.01;
    const auto model = mkv::cos_sin_model(7.0, 1.0);
    const Lattice lat({Root{{0.3}, 1.0, false}}, IncrementScheme::binomial(), 1, 2, LatticeTopology::path);
    const auto x = mkv::initial_forward(*model, h, lat);
    EXPECT_NEAR(x[1][0], 0.3 + 7.0 * h + 0.1, 1e-15);
    EXPECT_NEAR(x[1][1], 0.3 + 7.0 * h - 0.1, 1e-15);
}

TEST(ForwardPass, NonFiniteDriftReported) {
    const BlowUpModel model;
    const Lattice lat({Root{{0.0}, 1.0, false}}, IncrementScheme::binomial(), 1, 5, LatticeTopology::path);
    try {
        mkv::initial_forward(model, 1.0, lat);
        FAIL() << "expected NonFiniteValue";
    } catch (const mkv::NonFiniteValue& e) {
        EXPECT_EQ(e.depth(), 3u);
    }
}

TEST(BackwardPass, DriverFreeIsConditionalExpectation) {
    const auto model = mkv::cos_sin_model(0.3, 1.0);
    const Lattice lat = two_root_path(6);
    const double h = 0.05;
    const auto x = mkv::initial_forward(*model, h, lat);
    const auto eta = random_slice(lat.node_count(6), 17);
    const auto res = mkv::backward_pass(x, eta, *model, h, lat, {});
    for (std::size_t i = 0; i < 6; ++i) {
        const auto expected = mkv::conditional_expectation(lat, i, res.y[i + 1]);
        for (std::size_t node = 0; node < lat.node_count(i); ++node) {
            EXPECT_NEAR(res.y[i][node], expected[node], 1e-13);
        }
    }
}

TEST(BackwardPass, TerminalZIsZero) {
    const auto model = mkv::linear_model(0.1, 0.25, 1.0);
    const Lattice lat = two_root_path(4);
    const auto x = mkv::initial_forward(*model, 0.1, lat);
    const auto res = mkv::backward_pass(x, random_slice(lat.node_count(4), 3), *model, 0.1, lat, {});
    for (double z : res.z[4].values) EXPECT_EQ(z, 0.0);
    EXPECT_EQ(res.y[4].values, random_slice(lat.node_count(4), 3).values);
}

TEST(BackwardPass, LinearDriverClosedForm) {
    // f = a y with a law-free driver: Y_i = E_i[Y_{i+1}] / (1 - a h) node by node.
    const double a = 0.25;
    const double h = 0.1;
    const auto model = mkv::linear_model(0.0, a, 1.0);
    const Lattice lat({Root{{0.0}, 1.0, false}}, IncrementScheme::trinomial(), 1, 3, LatticeTopology::path);
    const auto x = mkv::initial_forward(*model, h, lat);
    SliceValues eta(1, lat.node_count(3), 1.0);
    const auto res = mkv::backward_pass(x, eta, *model, h, lat, {});
    EXPECT_NEAR(res.y[2][0], 1.0 / 0.975, 1e-12);
    EXPECT_NEAR(res.y[0][0], std::pow(0.975, -3), 1e-12);
}

TEST(BackwardPass, FixedPointIterationBound) {
    const double a = 0.25;
    const double h = 1.0 / 16.0;
    const double tol = 1e-12;
    const auto model = mkv::linear_model(0.1, a, 1.0);
    const Lattice lat = two_root_path(8);
    const auto x = mkv::initial_forward(*model, h, lat);
    const auto res = mkv::backward_pass(x, random_slice(lat.node_count(8), 9), *model, h, lat, {tol, 100});
    const auto bound = static_cast<std::size_t>(std::ceil(std::log(tol) / std::log(a * h))) + 2;
    for (std::size_t it : res.fixed_point_iterations) {
        EXPECT_GE(it, 1u);
        EXPECT_LE(it, bound);
    }
}

TEST(BackwardPass, DivergenceReportsSlice) {
    const auto model = mkv::linear_model(0.0, 40.0, 1.0);
    const Lattice lat = two_root_path(3);
    const auto x = mkv::initial_forward(*model, 0.1, lat);
    try {
        mkv::backward_pass(x, SliceValues(1, lat.node_count(3), 1.0), *model, 0.1, lat, {1e-12, 50});
        FAIL() << "expected FixedPointDivergence";
    } catch (const mkv::FixedPointDivergence& e) {
        EXPECT_EQ(e.slice(), 2u);
        EXPECT_GT(e.residual(), 1e-12);
    }
}

TEST(BackwardPass, RejectsBadInput) {
    const auto model = mkv::linear_model(0.0, 0.0, 1.0);
    const Lattice lat = two_root_path(3);
    const auto x = mkv::initial_forward(*model, 0.1, lat);
    EXPECT_THROW(mkv::backward_pass(x, SliceValues(1, 3, 1.0), *model, 0.1, lat, {}), std::invalid_argument);
    SliceValues bad(1, lat.node_count(3), 1.0);
    bad[2] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(mkv::backward_pass(x, bad, *model, 0.1, lat, {}), mkv::NonFiniteValue);
    EXPECT_THROW(mkv::backward_pass(x, SliceValues(1, lat.node_count(3), 1.0), *model, 0.1, lat, {0.0, 10}),
                 std::invalid_argument);
}

TEST(LocalSolve, MartingaleReturnsRootPoints) {
    const auto model = mkv::linear_model(0.0, 0.0, 1.0);
    const double h = 0.1;
    for (auto topology : {LatticeTopology::path, LatticeTopology::recombining}) {
        const Lattice lat({Root{{-0.5}, 0.4, false}, Root{{1.0}, 0.6, false}, Root{{3.0}, 0.0, true}},
                          IncrementScheme::trinomial(), 1, 5, topology);
        const auto x = mkv::initial_forward(*model, h, lat);
        SliceValues eta(1, lat.node_count(5));
        for (std::size_t node = 0; node < eta.size(); ++node) eta[node] = x[5][node];
        const auto sol = mkv::local_solve(x, eta, *model, h, lat, {});
        EXPECT_NEAR(sol.y[0][0], -0.5, 1e-13);
        EXPECT_NEAR(sol.y[0][1], 1.0, 1e-13);
        EXPECT_NEAR(sol.y[0][2], 3.0, 1e-13);
        EXPECT_EQ(sol.x[5].values, x[5].values);
    }
}

TEST(LocalSolve, RootValueIsWeightedMeanOfTerminal) {
    const auto model = mkv::linear_model(0.0, 0.0, 1.0);
    const Lattice lat({Root{{0.0}, 1.0, false}}, IncrementScheme::binomial(), 1, 4, LatticeTopology::path);
    const auto x = mkv::initial_forward(*model, 0.2, lat);
    const auto eta = random_slice(16, 21);
    double mean = 0.0;
    for (double v : eta.values) mean += v / 16.0;
    const auto sol = mkv::local_solve(x, eta, *model, 0.2, lat, {});
    EXPECT_NEAR(sol.y[0][0], mean, 1e-13);
}

TEST(LocalSolve, DeterministicAcrossThreadCounts) {
    // 2 * 2^14 leaves is large enough to split across workers.
    const auto model = mkv::linear_model(0.3, 0.25, 1.0);
    const Lattice lat = two_root_path(14);
    const double h = 1.0 / 14.0;
    const auto x = mkv::initial_forward(*model, h, lat);
    SliceValues eta(1, lat.node_count(14));
    for (std::size_t node = 0; node < eta.size(); ++node) eta[node] = std::sin(x[14][node]);

    mkv::set_thread_count(1);
    const auto serial = mkv::local_solve(x, eta, *model, h, lat, {});
    mkv::set_thread_count(4);
    const auto threaded = mkv::local_solve(x, eta, *model, h, lat, {});
    const auto again = mkv::local_solve(x, eta, *model, h, lat, {});
    mkv::set_thread_count(0);
    for (std::size_t i = 0; i <= 14; ++i) {
        EXPECT_EQ(serial.y[i].values, threaded.y[i].values);
        EXPECT_EQ(serial.x[i].values, threaded.x[i].values);
        EXPECT_EQ(serial.z[i].values, threaded.z[i].values);
        EXPECT_EQ(again.y[i].values, threaded.y[i].values);
    }
}

TEST(Parallel, CoversEveryIndexOnce) {
    mkv::set_thread_count(3);
    std::vector<int> hits(100000, 0);
    mkv::parallel_for(hits.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    mkv::set_thread_count(0);
    for (int h : hits) ASSERT_EQ(h, 1);
}

TEST(Parallel, RethrowsWorkerException) {
    mkv::set_thread_count(4);
    EXPECT_THROW(mkv::parallel_for(100000,
                                   [](std::size_t b, std::size_t e) {
                                       if (b <= 70000 && 70000 < e) throw std::runtime_error("boom");
                                   }),
                 std::runtime_error);
    mkv::set_thread_count(0);
}
