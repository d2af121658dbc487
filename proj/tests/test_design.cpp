// Design pipeline: fit, constrain, certify, escalate, benchmark.

#include <gtest/gtest.h>

#include <cmath>

#include "ifir/design.hpp"
#include "ifir/plants.hpp"

using namespace ifir;

namespace {

struct FitData {
    SampledSignal u;
    SampledSignal y;
};

// y holds the controller input, u the output of the FOH-sampled target
FitData target_data(int q, std::size_t n = 200, double ts = 0.05) {
    const auto e = filtered_step(n, ts);
    return {simulate_lti(c2d_foh(target_filter(q), ts), e), e};
}

DesignConfig direct_config(PassivityMethod method, Eigen::Index m) {
    DesignConfig cfg;
    cfg.method = method;
    cfg.m = m;
    cfg.fit = FitMode::direct;
    cfg.gamma = GammaMode::fixed_to(0.0);
    return cfg;
}

double rel_gap(double a, double b) { return (a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Design, EveryMethodCertifiesANonPassiveTarget) {
    const auto d = target_data(2);
    for (auto method : {PassivityMethod::posreal, PassivityMethod::toeplitz, PassivityMethod::kyp}) {
        auto cfg = direct_config(method, 12);
        if (method == PassivityMethod::posreal) cfg.epsilon = 1e-4;
        const auto rep = design_controller(d.u, d.y, cfg);
        EXPECT_TRUE(rep.accepted()) << to_string(method) << " margin " << rep.margin;
        EXPECT_GE(rep.margin, kPassiveMarginThreshold);
        EXPECT_GE(passivity_margin(rep.controller.g), kPassiveMarginThreshold);
        EXPECT_EQ(rep.controller.gamma, 0.0);
        EXPECT_EQ(rep.controller.g.size(), 12u);
        EXPECT_DOUBLE_EQ(rep.controller.ts, 0.05);
        // relaxing the constraints can only lower the objective
        EXPECT_GE(rel_gap(rep.solution.objective, rep.unconstrained_objective), -1e-9);
        EXPECT_FALSE(rep.attempts.empty());
    }
}

TEST(Design, UnconstrainedFitIsNotPassiveForSecondOrderTarget) {
    const auto d = target_data(2);
    const auto sys = regressor_from_data(d.u, d.y, direct_config(PassivityMethod::posreal, 12));
    const Eigen::VectorXd x = unconstrained_least_squares(sys);
    EXPECT_LT(passivity_margin(std::span<const double>(x.data(), 12)), -1e-3);
}

TEST(Design, ToeplitzEigenvaluesRecorded) {
    const auto d = target_data(2);
    const auto rep = design_controller(d.u, d.y, direct_config(PassivityMethod::toeplitz, 8));
    ASSERT_EQ(rep.toeplitz_min_eigs.size(), 3u);
    EXPECT_EQ(rep.toeplitz_min_eigs[0].first, 8);
    EXPECT_EQ(rep.toeplitz_min_eigs[2].first, 32);
    EXPECT_GE(rep.toeplitz_min_eigs[0].second, rep.toeplitz_min_eigs[1].second - 1e-12);
    EXPECT_GE(rep.toeplitz_min_eigs[1].second, rep.toeplitz_min_eigs[2].second - 1e-12);
    EXPECT_GE(rep.toeplitz_n, 16);
}

TEST(Design, FreeGammaVrftOnTwoCart) {
    const double ts = 0.05;
    const auto plant = c2d_zoh(two_cart_linear(), ts);
    const auto u = two_cart_probe(600, ts);
    const auto y = simulate_lti(plant, u);
    DesignConfig cfg;
    cfg.m = 20;
    cfg.epsilon = 1e-4;
    cfg.reference.num = {0.1, 1.0};
    cfg.reference.den = {0.0625, 0.5, 1.0};
    const auto rep = design_controller(u, y, cfg);
    ASSERT_TRUE(rep.accepted()) << rep.margin;
    EXPECT_GE(rep.controller.gamma, 0.0);
    // passive controller on a passive plant: bounded closed loop
    const auto r = step_signal(4000, ts);
    const auto tr = closed_loop_sim(plant, rep.controller, r);
    for (double v : tr.y.values()) ASSERT_LE(std::abs(v), 100.0);
}

TEST(Design, EscalationOffRunsOnce) {
    const auto d = target_data(3);
    auto cfg = direct_config(PassivityMethod::posreal, 10);
    cfg.epsilon = 1e-6;
    cfg.escalate = false;
    const auto rep = design_controller(d.u, d.y, cfg);
    EXPECT_EQ(rep.attempts.size(), 1u);
    EXPECT_EQ(rep.epsilon, 1e-6);
    EXPECT_EQ(rep.grid, 20);
}

TEST(Design, EscalationGrowsEpsilonAtFixedOrder) {
    // a section as short as the filter cannot certify a third-order target;
    // escalation gives up after six tenfold steps and says so
    const auto d = target_data(3);
    auto cfg = direct_config(PassivityMethod::toeplitz, 10);
    cfg.n = 10;
    cfg.epsilon = 1e-7;
    const auto rep = design_controller(d.u, d.y, cfg);
    ASSERT_EQ(rep.attempts.size(), 7u);
    for (std::size_t i = 1; i < rep.attempts.size(); ++i) EXPECT_NEAR(rep.attempts[i].epsilon, 10.0 * rep.attempts[i - 1].epsilon, 1e-18);
    for (const auto& a : rep.attempts) EXPECT_EQ(a.size, 10);
    EXPECT_FALSE(rep.certified());
    EXPECT_FALSE(rep.accepted());
    EXPECT_LT(rep.margin, kPassiveMarginThreshold);
}

TEST(Design, DefaultToeplitzScheduleCertifies) {
    const auto d = target_data(3);
    const auto rep = design_controller(d.u, d.y, direct_config(PassivityMethod::toeplitz, 10));
    EXPECT_TRUE(rep.accepted()) << rep.margin;
    for (std::size_t i = 1; i < rep.attempts.size(); ++i) EXPECT_GE(rep.attempts[i].size, rep.attempts[i - 1].size);
    EXPECT_LE(rep.toeplitz_n, 80);
}

TEST(Design, AutoEpsilonUsesSoundBound) {
    const auto d = target_data(1);
    auto cfg = direct_config(PassivityMethod::posreal, 6);
    cfg.rho0 = 0.5;
    cfg.rho = 0.5;
    const auto rep = design_controller(d.u, d.y, cfg);
    EXPECT_NEAR(rep.epsilon, epsilon_bound(0.5, 0.5, 6, 12), 1e-15);
    EXPECT_GE(rep.margin, 0.0);
}

TEST(Design, ScalarOrder) {
    const auto d = target_data(1);
    for (auto method : {PassivityMethod::posreal, PassivityMethod::toeplitz, PassivityMethod::kyp}) {
        auto cfg = direct_config(method, 1);
        cfg.epsilon = 1e-4;
        const auto rep = design_controller(d.u, d.y, cfg);
        EXPECT_TRUE(rep.certified()) << to_string(method);
        EXPECT_GE(rep.controller.g[0], -1e-6);
    }
}

TEST(Design, Rejections) {
    const auto d = target_data(1, 20);
    auto cfg = direct_config(PassivityMethod::posreal, 21);
    EXPECT_THROW(design_controller(d.u, d.y, cfg), InputError);
    cfg.m = 5;
    cfg.ts = 0.1;
    EXPECT_THROW(design_controller(d.u, d.y, cfg), InputError);
    cfg.ts.reset();
    cfg.rho = 1.5;
    EXPECT_THROW(design_controller(d.u, d.y, cfg), InputError);
    cfg.rho = 1.0;
    cfg.gamma = GammaMode::fixed_to(-1.0);
    EXPECT_THROW(design_controller(d.u, d.y, cfg), InputError);
}

TEST(Design, DegenerateRegressorStillFeasible) {
    const SampledSignal e(std::vector<double>(50, 0.0), 0.1);
    std::vector<double> uv(50);
    for (std::size_t i = 0; i < uv.size(); ++i) uv[i] = std::sin(0.3 * static_cast<double>(i));
    DesignConfig cfg;
    cfg.m = 4;
    cfg.fit = FitMode::direct;
    cfg.epsilon = 1e-3;
    const auto rep = design_controller(SampledSignal(uv, 0.1), e, cfg);
    EXPECT_TRUE(rep.check.pass);
    EXPECT_GE(rep.margin, 0.0);
}

TEST(ExtractController, SnapsRoundoffGamma) {
    RegressorSystem sys;
    sys.m = 2;
    sys.ts = 0.1;
    Eigen::Vector3d x(1.0, 0.5, -1e-9);
    auto c = extract_controller(sys, x);
    EXPECT_EQ(c.gamma, 0.0);
    x(2) = -1e-3;
    c = extract_controller(sys, x);
    EXPECT_EQ(c.gamma, -1e-3);
    sys.gamma = GammaMode::fixed_to(0.7);
    c = extract_controller(sys, x);
    EXPECT_EQ(c.gamma, 0.7);
    EXPECT_EQ(c.g, (std::vector<double>{1.0, 0.5}));
}

TEST(Certification, AcceptedImpliesCertified) {
    DesignReport rep;
    rep.margin = -2e-6;
    rep.controller.gamma = 0.0;
    EXPECT_FALSE(rep.certified());
    rep.margin = -5e-7;
    EXPECT_TRUE(rep.certified());
    rep.solution.status = SolveStatus::optimal;
    rep.check.pass = false;
    EXPECT_FALSE(rep.accepted());
    rep.check.pass = true;
    EXPECT_TRUE(rep.accepted());
    rep.controller.gamma = -1.0;
    EXPECT_FALSE(rep.certified());
}

TEST(Bench, OneRowPerVariant) {
    const auto d = target_data(2);
    const auto sys = regressor_from_data(d.u, d.y, direct_config(PassivityMethod::posreal, 10));
    const SolverOptions opts = design_solver_options();
    const BenchVariant variants[] = {{PassivityMethod::posreal, 1.0}, {PassivityMethod::toeplitz, 1.0}, {PassivityMethod::kyp, 1.0}};
    for (const auto& v : variants) {
        const auto row = bench_one(sys, v, 2, std::nullopt, opts);
        EXPECT_EQ(row.m, 10);
        EXPECT_TRUE(row.error.empty()) << row.error;
        EXPECT_GT(row.median_seconds, 0.0);
        EXPECT_GT(row.iterations, 0);
    }
    EXPECT_EQ(BenchVariant(PassivityMethod::posreal, 2.0).name(), "posreal(M=2m)");
    EXPECT_EQ(BenchVariant(PassivityMethod::kyp, 2.0).name(), "kyp");
}

TEST(Bench, ErrorsAreRecorded) {
    const auto d = target_data(2);
    const auto sys = regressor_from_data(d.u, d.y, direct_config(PassivityMethod::posreal, 10));
    const auto row = bench_one(sys, {PassivityMethod::posreal, 1.0}, 1, -1.0, design_solver_options());
    EXPECT_EQ(row.status, "error");
    EXPECT_FALSE(row.error.empty());
}
