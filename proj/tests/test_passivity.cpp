// Constraint builders and frequency-domain passivity checks.

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "instances.hpp"
#include "ifir/controller.hpp"
#include "ifir/passivity.hpp"
#include "ifir/solver.hpp"

using namespace ifir;

namespace {

Eigen::VectorXd layout_vector(const VariableLayout& lay, const std::vector<double>& g, double gamma, const Eigen::MatrixXd& x) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(lay.dimension());
    for (std::size_t k = 0; k < g.size(); ++k) v(static_cast<Eigen::Index>(k)) = g[k];
    if (lay.gamma_free) v(lay.gamma_index()) = gamma;
    for (Eigen::Index j = 0; j < x.rows(); ++j)
        for (Eigen::Index i = 0; i <= j; ++i) v(lay.storage_index(i, j)) = x(i, j);
    return v;
}

double min_eig(const Eigen::MatrixXd& a) { return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().minCoeff(); }

std::vector<double> random_g(std::mt19937_64& rng, std::size_t m) {
    std::normal_distribution<double> nd;
    std::vector<double> g(m);
    for (double& v : g) v = nd(rng);
    return g;
}

}  // namespace

// ---- Toeplitz matrix -------------------------------------------------------

TEST(ToeplitzMatrix, Examples) {
    const double one[] = {1.0};
    EXPECT_TRUE(toeplitz_matrix(one, 2).isIdentity(0.0));
    const double g12[] = {1.0, 2.0};
    Eigen::Matrix3d ref;
    ref << 1, 0, 0, 2, 1, 0, 0, 2, 1;
    EXPECT_EQ(toeplitz_matrix(g12, 3), ref);
    const double g3[] = {4.0, 5.0, 6.0};
    Eigen::Matrix3d full;
    full << 4, 0, 0, 5, 4, 0, 6, 5, 4;
    EXPECT_EQ(toeplitz_matrix(g3, 3), full);
    EXPECT_THROW(toeplitz_matrix(g3, 2), InputError);
}

TEST(ToeplitzMatrix, QuadraticFormIsFirInnerProduct) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = random_g(rng, 1 + trial % 8);
        const Eigen::Index n = static_cast<Eigen::Index>(g.size()) + 10;
        std::vector<double> w(static_cast<std::size_t>(n));
        for (double& v : w) v = nd(rng);
        const Eigen::Map<const Eigen::VectorXd> wv(w.data(), n);
        const double quad = wv.dot(toeplitz_matrix(g, n).transpose() * wv);
        const auto resp = simulate_lti(IFIRController{0.0, g, 1.0}, SampledSignal(w, 1.0));
        const double inner = wv.dot(resp.vector());
        EXPECT_NEAR(quad, inner, 1e-10 * std::max(1.0, std::abs(inner)));
    }
}

// ---- KYP -------------------------------------------------------------------

TEST(Kyp, RealizationAndCounts) {
    const auto set = kyp_constraints(3);
    EXPECT_EQ(set.layout.dimension(), 3 + 1 + 3);  // m + 1 + (m-1)m/2
    ASSERT_EQ(set.psd.size(), 2u);
    EXPECT_EQ(set.psd[0].size, 2);
    EXPECT_EQ(set.psd[1].size, 3);
    EXPECT_EQ(kyp_constraints(10).layout.dimension(), 10 + 1 + 45);
    EXPECT_EQ(kyp_constraints(10, false).layout.dimension(), 10 + 45);
    EXPECT_THROW(kyp_constraints(1), InputError);
}

TEST(Kyp, BlockForUnitFeedthroughAndIdentityStorage) {
    // g = [1, 0, 0], X = I: X - A'XA = diag(1, 0), C' - A'XB = 0, 2 D - B'XB = 1
    const auto set = kyp_constraints(3);
    const Eigen::VectorXd x = layout_vector(set.layout, {1.0, 0.0, 0.0}, 0.0, Eigen::Matrix2d::Identity());
    const Eigen::MatrixXd lmi = set.psd[1].evaluate(x);
    EXPECT_EQ(lmi, Eigen::Vector3d(1.0, 0.0, 1.0).asDiagonal().toDenseMatrix());
    EXPECT_GE(min_eig(lmi), 0.0);
    EXPECT_NEAR(min_eig(set.psd[0].evaluate(x)), 1.0 - 1e-9, 1e-15);
}

TEST(Kyp, BlockMatchesDenseFormula) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    const Eigen::Index m = 5, ns = 4;
    const auto g = random_g(rng, m);
    Eigen::MatrixXd xs(ns, ns);
    for (Eigen::Index i = 0; i < ns; ++i)
        for (Eigen::Index j = 0; j < ns; ++j) xs(i, j) = nd(rng);
    xs = (xs + xs.transpose()).eval();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(ns, ns);
    for (Eigen::Index i = 0; i + 1 < ns; ++i) a(i, i + 1) = 1.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(ns);
    b(ns - 1) = 1.0;
    Eigen::VectorXd c(ns);
    for (Eigen::Index i = 0; i < ns; ++i) c(i) = g[static_cast<std::size_t>(m - 1 - i)];
    Eigen::MatrixXd ref(m, m);
    ref.topLeftCorner(ns, ns) = xs - a.transpose() * xs * a;
    ref.topRightCorner(ns, 1) = c - a.transpose() * xs * b;
    ref.bottomLeftCorner(1, ns) = ref.topRightCorner(ns, 1).transpose();
    ref(ns, ns) = 2.0 * g[0] - b.dot(xs * b);
    const auto set = kyp_constraints(m, false);
    EXPECT_LE((set.psd[1].evaluate(layout_vector(set.layout, g, 0.0, xs)) - ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Kyp, NegativeFeedthroughViolatesDiagonal) {
    const auto set = kyp_constraints(3);
    const Eigen::VectorXd x = layout_vector(set.layout, {-0.1, 0.0, 0.0}, 0.0, 5.0 * Eigen::Matrix2d::Identity());
    const auto& last = set.linear.back();
    EXPECT_EQ(last.label, "2 g0 >= 0");
    EXPECT_LT(last.row.dot(x), last.bound);
}

TEST(Kyp, SolutionsArePassive) {
    // any (g, X) satisfying the LMI has a nonnegative margin
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Index m = 3 + trial;
        const auto set = kyp_constraints(m, false);
        ConstrainedLSProblem pr;
        pr.dimension = set.layout.dimension();
        pr.design = Eigen::MatrixXd::Identity(m, m);
        pr.target.resize(m);
        for (Eigen::Index k = 0; k < m; ++k) pr.target(k) = nd(rng);
        pr.target(m - 1) += 3.0;  // a strong pure delay, far from passive
        pr.linear = set.linear;
        pr.psd = set.psd;
        const Solution s = solve(pr);
        ASSERT_EQ(s.status, SolveStatus::optimal);
        const auto rep = check_solution(pr, s.x, 1e-6);
        EXPECT_TRUE(rep.pass);
        std::vector<double> g(s.x.data(), s.x.data() + m);
        EXPECT_GE(passivity_margin(g), -1e-6) << "m = " << m;
    }
}

// ---- finite Toeplitz -------------------------------------------------------

TEST(FiniteToeplitz, ScalarCase) {
    const auto set = finite_toeplitz_constraints(1, 4, 0.2, 10.0, 1.0);
    ASSERT_EQ(set.psd.size(), 1u);
    for (double g0 : {0.05, 0.09, 0.11, 0.3}) {
        const Eigen::VectorXd x = layout_vector(set.layout, {g0}, 0.0, Eigen::MatrixXd());
        const Eigen::MatrixXd blk = set.psd[0].evaluate(x);
        EXPECT_TRUE(blk.isApprox((2.0 * g0 - 0.2) * Eigen::MatrixXd::Identity(4, 4), 1e-15));
        EXPECT_EQ(min_eig(blk) >= 0.0, g0 >= 0.1);
    }
}

TEST(FiniteToeplitz, Counts) {
    const auto set = finite_toeplitz_constraints(6, 12, 0.1, 1.0, 0.9);
    EXPECT_EQ(set.linear.size(), 1u + 12u);  // gamma and 2m decay rows
    EXPECT_EQ(set.psd.front().size, 12);
    EXPECT_EQ(set.layout.dimension(), 7);
    EXPECT_THROW(finite_toeplitz_constraints(6, 5, 0.1, 1.0, 0.9), InputError);
    EXPECT_THROW(finite_toeplitz_constraints(6, 12, 0.0, 1.0, 0.9), InputError);
    EXPECT_THROW(finite_toeplitz_constraints(6, 12, 0.1, 1.0, 1.1), InputError);
}

TEST(FiniteToeplitz, FlatDecayAtRhoOne) {
    const auto set = finite_toeplitz_constraints(4, 8, 0.1, 10.0, 1.0);
    int upper = 0;
    for (const auto& c : set.linear) {
        if (c.label.find("<= rho0") == std::string::npos) continue;
        EXPECT_EQ(c.bound, -10.0);
        ++upper;
    }
    EXPECT_EQ(upper, 4);
}

TEST(FiniteToeplitz, BlockMatchesToeplitzMatrix) {
    const std::vector<double> g{1.0, -0.4};
    const auto set = finite_toeplitz_constraints(2, 4, 0.1, 10.0, 1.0, false);
    const Eigen::MatrixXd phi = toeplitz_matrix(g, 4);
    const Eigen::MatrixXd blk = set.psd[0].evaluate(layout_vector(set.layout, g, 0.0, Eigen::MatrixXd()));
    EXPECT_TRUE(blk.isApprox(phi + phi.transpose() - 0.1 * Eigen::MatrixXd::Identity(4, 4), 1e-15));
    // tridiagonal 2 / -0.4: eigenvalues 2 - 0.8 cos(k pi / 5)
    EXPECT_NEAR(toeplitz_min_eig(g, 4), 2.0 - 0.8 * std::cos(std::numbers::pi / 5.0), 1e-14);
    EXPECT_GE(min_eig(blk), 0.0);
}

// ---- sampled positive realness ---------------------------------------------

TEST(EpsilonBound, Examples) {
    EXPECT_NEAR(epsilon_bound(1.0, 0.5, 3, 10), std::numbers::pi * 1.75 * 0.1, 1e-15);
    EXPECT_NEAR(epsilon_bound(1.0, 0.5, 3, 10), 0.5497787, 1e-7);
    EXPECT_EQ(epsilon_bound(3.0, 0.7, 1, 10), 0.0);
    EXPECT_NEAR(epsilon_bound(1.0, 1.0, 3, 10), 0.9424778, 1e-7);
    EXPECT_NEAR(epsilon_bound(1.0, 1.0 - 1e-9, 3, 10), epsilon_bound(1.0, 1.0, 3, 10), 1e-7);
    EXPECT_THROW(epsilon_bound(0.0, 0.5, 3, 10), InputError);
    EXPECT_THROW(epsilon_bound(1.0, 0.0, 3, 10), InputError);
    EXPECT_THROW(epsilon_bound(1.0, 0.5, 3, 1), InputError);
}

TEST(Posreal, RowsAndCounts) {
    const auto set = posreal_constraints(4, 6, 2.0, 0.8, 0.25);
    EXPECT_EQ(set.linear.size(), 1u + 8u + 7u);
    EXPECT_EQ(set.epsilon, 0.25);
    EXPECT_FALSE(set.auto_epsilon);
    const auto& dc = set.linear[1 + 8];
    const auto& nyq = set.linear.back();
    for (Eigen::Index k = 0; k < 4; ++k) {
        EXPECT_NEAR(dc.row(k), 2.0, 1e-15);
        EXPECT_NEAR(nyq.row(k), k % 2 ? -2.0 : 2.0, 1e-14);
    }
    EXPECT_EQ(dc.row(4), 0.0);  // gamma does not enter
    EXPECT_EQ(nyq.bound, 0.25);
}

TEST(Posreal, ScalarRowsIdentical) {
    const auto set = posreal_constraints(1, 5, 1.0, 1.0, 0.3, false);
    for (std::size_t i = 2; i < set.linear.size(); ++i) {
        EXPECT_EQ(set.linear[i].row, Eigen::VectorXd::Constant(1, 2.0));
        EXPECT_EQ(set.linear[i].bound, 0.3);
    }
}

TEST(Posreal, AutoEpsilon) {
    const auto set = posreal_constraints(3, 10, 1.0, 0.5);
    EXPECT_TRUE(set.auto_epsilon);
    EXPECT_NEAR(set.epsilon, 0.5497787, 1e-7);
    EXPECT_THROW(posreal_constraints(3, 10, 1.0, 0.5, -1.0), InputError);
}

TEST(Posreal, FeasiblePointsArePassive) {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 200; ++i) {
        const auto inst = fixtures::posreal_instance(rng);
        EXPECT_GE(passivity_margin(inst.g, 100000), 0.0) << "instance " << i;
    }
}

// ---- verification ----------------------------------------------------------

TEST(Margin, Examples) {
    const double a[] = {1.0}, b[] = {0.0, 1.0}, c[] = {1.0, 1.0};
    EXPECT_NEAR(passivity_margin(a), 2.0, 1e-15);
    EXPECT_NEAR(passivity_margin(b), -2.0, 1e-15);
    EXPECT_NEAR(passivity_margin(c), 0.0, 1e-15);
    EXPECT_TRUE(is_passive_fir(c));
    EXPECT_FALSE(is_passive_fir(b));
    EXPECT_THROW(passivity_margin(a, 999), InputError);
    EXPECT_THROW(passivity_margin(std::span<const double>{}), InputError);
}

TEST(Margin, ClenshawMatchesDirectSum) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = random_g(rng, 1 + 7 * trial);
        for (double th : {0.0, 0.3, 1.7, std::numbers::pi}) {
            double ref = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) ref += g[k] * std::cos(static_cast<double>(k) * th);
            EXPECT_NEAR(cosine_sum(g, th), ref, 1e-11 * (1.0 + std::abs(ref)));
            EXPECT_NEAR(2.0 * cosine_sum(g, th), 2.0 * fir_freq_response(g, th).real(), 1e-11 * (1.0 + std::abs(ref)));
        }
    }
}

TEST(ToeplitzMinEig, Examples) {
    const double a[] = {1.0}, b[] = {0.0, 1.0}, c[] = {1.0, 1.0};
    for (Eigen::Index n : {1, 5, 40}) EXPECT_NEAR(toeplitz_min_eig(a, n), 2.0, 1e-14);
    EXPECT_NEAR(toeplitz_min_eig(b, 2), -1.0, 1e-15);
    // 2 + 2 cos(k pi / (n + 1)) at k = n, decreasing toward the margin 0
    const double e512 = toeplitz_min_eig(c, 512);
    EXPECT_NEAR(e512, 2.0 - 2.0 * std::cos(std::numbers::pi / 513.0), 1e-12);
    EXPECT_GE(e512, passivity_margin(c));
    EXPECT_LT(e512, 1e-4);
    EXPECT_THROW(toeplitz_min_eig(c, 1), InputError);
}

TEST(ToeplitzMinEig, MonotoneInOrder) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = random_g(rng, 2 + trial % 9);
        const auto m = static_cast<Eigen::Index>(g.size());
        const double e1 = toeplitz_min_eig(g, m), e2 = toeplitz_min_eig(g, 2 * m), e4 = toeplitz_min_eig(g, 4 * m);
        EXPECT_LE(e2, e1 + 1e-12);
        EXPECT_LE(e4, e2 + 1e-12);
        // the symbol infimum bounds every finite section from below
        EXPECT_GE(e4, passivity_margin(g) - 1e-6);
    }
}

TEST(ToeplitzMinEig, LargeSectionsCloseToMargin) {
    // Fejer test vector: lambda_min(T_n) <= min Re + (2/n) sum_k k |g_k|
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = random_g(rng, 2 + trial % 10);
        const auto m = static_cast<Eigen::Index>(g.size());
        const double eps = 0.05;
        g[0] += (eps - toeplitz_min_eig(g, 8 * m)) / 2.0;
        ASSERT_NEAR(toeplitz_min_eig(g, 8 * m), eps, 1e-10);
        double weighted = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) weighted += static_cast<double>(k) * std::abs(g[k]);
        EXPECT_GE(passivity_margin(g), eps - 2.0 * weighted / static_cast<double>(8 * m)) << "trial " << trial;
    }
}

TEST(ToeplitzMinEig, SectionEigenvalueAloneDoesNotBoundMargin) {
    // sharp dip in the symbol: T_{8m} clears eps while the margin sits well below -eps
    std::vector<double> g{0.0, 1.0, -1.0, 1.0};
    g[0] += (0.05 - toeplitz_min_eig(g, 32)) / 2.0;
    EXPECT_NEAR(toeplitz_min_eig(g, 32), 0.05, 1e-10);
    EXPECT_LT(passivity_margin(g), -0.05);
    // the gap closes as the section grows
    EXPECT_LT(toeplitz_min_eig(g, 1024) - passivity_margin(g), 0.01);
}

TEST(Lipschitz, Examples) {
    const double one[] = {2.5};
    EXPECT_TRUE(lipschitz_bound_check(one, 0.4, 1.0));  // 0 <= 0
    const double delay[] = {0.0, 1.0};
    EXPECT_TRUE(lipschitz_bound_check(delay, 0.0, std::numbers::pi / 2));
    std::mt19937_64 rng(1);
    const auto g = random_g(rng, 9);
    EXPECT_TRUE(lipschitz_bound_check(g, 1.1, 0.0));
}

TEST(Lipschitz, RandomTriples) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> th(0.0, std::numbers::pi), dl(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const auto g = random_g(rng, 1 + i % 30);
        EXPECT_TRUE(lipschitz_bound_check(g, th(rng), dl(rng), 1e-12));
    }
}
