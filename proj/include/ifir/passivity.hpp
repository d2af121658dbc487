/*
 Copyright 2026 The ifir-design Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

// Passivity constraints for the FIR part of an iFIR controller, in three
// interchangeable convex formulations, plus frequency- and Toeplitz-based
// verification.
//
// Unknown vector layout: [g_0 .. g_{m-1}; gamma (only when free); svec(X) (KYP only)].

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ifir/errors.hpp"
#include "ifir/problem.hpp"
#include "ifir/solver.hpp"

namespace ifir {

struct VariableLayout {
    Eigen::Index m = 0;
    bool gamma_free = true;
    bool has_storage = false;  // KYP storage matrix X, (m-1) x (m-1)

    [[nodiscard]] Eigen::Index gamma_index() const { return m; }
    [[nodiscard]] Eigen::Index storage_offset() const { return m + (gamma_free ? 1 : 0); }
    [[nodiscard]] Eigen::Index storage_size() const { return has_storage ? (m - 1) * m / 2 : 0; }
    [[nodiscard]] Eigen::Index dimension() const { return storage_offset() + storage_size(); }
    /// Index of X(i, j) in the unknown vector.
    [[nodiscard]] Eigen::Index storage_index(Eigen::Index i, Eigen::Index j) const {
        if (i > j) std::swap(i, j);
        return storage_offset() + detail::svec_index(i, j);
    }
};

enum class PassivityMethod { kyp, toeplitz, posreal };

inline const char* to_string(PassivityMethod m) {
    switch (m) {
        case PassivityMethod::kyp: return "kyp";
        case PassivityMethod::toeplitz: return "toeplitz";
        case PassivityMethod::posreal: return "posreal";
    }
    return "unknown";
}

struct DecayBound {
    double rho0 = 1.0;
    double rho = 1.0;
};

struct PassivityConstraintSet {
    PassivityMethod method = PassivityMethod::posreal;
    VariableLayout layout;
    std::vector<LinearConstraint> linear;
    std::vector<PsdBlock> psd;
    std::optional<DecayBound> decay;
    // toeplitz: n, epsilon; posreal: grid M, epsilon, whether it came from the bound
    Eigen::Index toeplitz_order = 0;
    Eigen::Index grid = 0;
    double epsilon = 0.0;
    bool auto_epsilon = false;
};

// ---------------------------------------------------------------------------
// Building blocks

/// n x n lower-triangular banded Toeplitz matrix of the FIR response map.
inline Eigen::MatrixXd toeplitz_matrix(std::span<const double> g, Eigen::Index n) {
    const auto m = static_cast<Eigen::Index>(g.size());
    require(m >= 1, "toeplitz_matrix: empty coefficient list");
    require(n >= m, "toeplitz_matrix: order n must be at least the FIR length m");
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < m && k <= i; ++k) phi(i, i - k) = g[static_cast<std::size_t>(k)];
    return phi;
}

/// pi * rho0 * (1 - rho^m) / (1 - rho) * (m - 1) / (2M); the geometric
/// factor is m at rho = 1.
inline double epsilon_bound(double rho0, double rho, Eigen::Index m, Eigen::Index grid) {
    require(rho0 > 0.0 && std::isfinite(rho0), "epsilon_bound: rho0 must be positive");
    require(rho > 0.0 && rho <= 1.0, "epsilon_bound: rho must lie in (0, 1]");
    require(grid >= 2, "epsilon_bound: M must be at least 2");
    require(m >= 1, "epsilon_bound: m must be at least 1");
    const double md = static_cast<double>(m);
    const double geometric = rho == 1.0 ? md : (1.0 - std::pow(rho, md)) / (1.0 - rho);
    return std::numbers::pi * rho0 * geometric * (md - 1.0) / (2.0 * static_cast<double>(grid));
}

namespace detail {

inline LinearConstraint unit_row(const VariableLayout& lay, Eigen::Index var, double coef, double bound, std::string label) {
    LinearConstraint c{Eigen::VectorXd::Zero(lay.dimension()), bound, std::move(label)};
    c.row(var) = coef;
    return c;
}

inline void add_gamma_nonneg(PassivityConstraintSet& set) {
    if (set.layout.gamma_free) set.linear.push_back(unit_row(set.layout, set.layout.gamma_index(), 1.0, 0.0, "gamma >= 0"));
}

inline void add_decay(PassivityConstraintSet& set, double rho0, double rho) {
    require(rho0 > 0.0 && std::isfinite(rho0), "decay bound: rho0 must be positive");
    require(rho > 0.0 && rho <= 1.0, "decay bound: rho must lie in (0, 1]");
    for (Eigen::Index k = 0; k < set.layout.m; ++k) {
        const double b = rho0 * std::pow(rho, static_cast<double>(k));
        const std::string gk = "g" + std::to_string(k);
        set.linear.push_back(unit_row(set.layout, k, -1.0, -b, gk + " <= rho0 rho^k"));
        set.linear.push_back(unit_row(set.layout, k, 1.0, -b, gk + " >= -rho0 rho^k"));
    }
    set.decay = DecayBound{rho0, rho};
}

}  // namespace detail

/// KYP formulation: gamma >= 0, X >= delta I, the (m x m) passivity LMI in
/// (g, X), and 2 g_0 >= 0. FIR realization: A_c upper shift, B_c = e_{m-1},
/// C_c = [g_{m-1} ... g_1], D_c = g_0.
inline PassivityConstraintSet kyp_constraints(Eigen::Index m, bool gamma_free = true, double delta = 1e-9) {
    require(m >= 2, "kyp_constraints: order m must be at least 2");
    PassivityConstraintSet set;
    set.method = PassivityMethod::kyp;
    set.layout = {m, gamma_free, true};
    const auto& lay = set.layout;
    detail::add_gamma_nonneg(set);

    const Eigen::Index ns = m - 1;
    PsdBlock storage(ns, "X >= delta I");
    storage.constant = -delta * Eigen::MatrixXd::Identity(ns, ns);
    for (Eigen::Index j = 0; j < ns; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) storage.add(i, j, lay.storage_index(i, j), 1.0);

    PsdBlock lmi(m, "KYP LMI");
    for (Eigen::Index j = 0; j < ns; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
            // X - A'XA: (A'XA)(i, j) = X(i-1, j-1)
            lmi.add(i, j, lay.storage_index(i, j), 1.0);
            if (i >= 1) lmi.add(i, j, lay.storage_index(i - 1, j - 1), -1.0);
        }
    for (Eigen::Index i = 0; i < ns; ++i) {
        // C_c' - A'XB: entry i is g_{m-1-i} - X(i-1, m-2)
        lmi.add(i, ns, m - 1 - i, 1.0);
        if (i >= 1) lmi.add(i, ns, lay.storage_index(i - 1, ns - 1), -1.0);
    }
    // D_c + D_c' - B'XB
    lmi.add(ns, ns, 0, 2.0);
    lmi.add(ns, ns, lay.storage_index(ns - 1, ns - 1), -1.0);

    set.psd.push_back(std::move(storage));
    set.psd.push_back(std::move(lmi));
    set.linear.push_back(detail::unit_row(lay, 0, 2.0, 0.0, "2 g0 >= 0"));
    return set;
}

/// Finite Toeplitz formulation: gamma >= 0, decay bounds, and
/// phi_n(g) + phi_n(g)' - eps I >= 0.
inline PassivityConstraintSet finite_toeplitz_constraints(Eigen::Index m, Eigen::Index n, double epsilon, double rho0,
                                                          double rho, bool gamma_free = true) {
    require(m >= 1, "finite_toeplitz_constraints: m must be at least 1");
    require(n >= m, "finite_toeplitz_constraints: n must be at least m");
    require(epsilon > 0.0 && std::isfinite(epsilon), "finite_toeplitz_constraints: epsilon must be positive");
    PassivityConstraintSet set;
    set.method = PassivityMethod::toeplitz;
    set.layout = {m, gamma_free, false};
    set.toeplitz_order = n;
    set.epsilon = epsilon;
    detail::add_gamma_nonneg(set);
    detail::add_decay(set, rho0, rho);
    PsdBlock blk(n, "phi_n + phi_n' >= eps I");
    blk.constant = -epsilon * Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
            const Eigen::Index k = j - i;
            if (k >= m) continue;
            blk.add(i, j, k, k == 0 ? 2.0 : 1.0);
        }
    set.psd.push_back(std::move(blk));
    return set;
}

/// Sampled positive-realness formulation: gamma >= 0, decay bounds, and
/// 2 sum_k g_k cos(k pi q / M) >= eps for q = 0..M. Without an override,
/// eps is the worst-case inter-sample variation `epsilon_bound`.
inline PassivityConstraintSet posreal_constraints(Eigen::Index m, Eigen::Index grid, double rho0, double rho,
                                                  std::optional<double> epsilon_override = std::nullopt,
                                                  bool gamma_free = true) {
    require(m >= 1, "posreal_constraints: m must be at least 1");
    require(grid >= 2, "posreal_constraints: M must be at least 2");
    if (epsilon_override) require(*epsilon_override >= 0.0 && std::isfinite(*epsilon_override), "posreal_constraints: epsilon override must be >= 0");
    PassivityConstraintSet set;
    set.method = PassivityMethod::posreal;
    set.layout = {m, gamma_free, false};
    set.grid = grid;
    set.auto_epsilon = !epsilon_override.has_value();
    set.epsilon = epsilon_override ? *epsilon_override : epsilon_bound(rho0, rho, m, grid);
    detail::add_gamma_nonneg(set);
    detail::add_decay(set, rho0, rho);
    for (Eigen::Index q = 0; q <= grid; ++q) {
        LinearConstraint c{Eigen::VectorXd::Zero(set.layout.dimension()), set.epsilon, "Re G at q=" + std::to_string(q)};
        const double theta = std::numbers::pi * static_cast<double>(q) / static_cast<double>(grid);
        for (Eigen::Index k = 0; k < m; ++k) c.row(k) = 2.0 * std::cos(static_cast<double>(k) * theta);
        set.linear.push_back(std::move(c));
    }
    return set;
}

// ---------------------------------------------------------------------------
// Verification

/// sum_k g_k cos(k theta), by Clenshaw's recurrence.
inline double cosine_sum(std::span<const double> g, double theta) {
    const double x = std::cos(theta);
    double b1 = 0.0;
    double b2 = 0.0;
    for (std::size_t k = g.size(); k-- > 1;) {
        const double b0 = g[k] + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    return g.empty() ? 0.0 : g[0] + x * b1 - b2;
}

/// min over theta_i = i pi / (grid - 1) of G(e^{j theta}) + G(e^{-j theta}).
inline double passivity_margin(std::span<const double> g, std::size_t grid_points = 100000) {
    require(!g.empty(), "passivity_margin: empty coefficient list");
    require(grid_points >= 1000, "passivity_margin: grid must have at least 1000 points");
    double mn = std::numeric_limits<double>::infinity();
    const double step = std::numbers::pi / static_cast<double>(grid_points - 1);
    for (std::size_t i = 0; i < grid_points; ++i) mn = std::min(mn, 2.0 * cosine_sum(g, step * static_cast<double>(i)));
    return mn;
}

constexpr double kPassiveMarginThreshold = -1e-6;

inline bool is_passive_fir(std::span<const double> g, std::size_t grid_points = 100000) {
    return passivity_margin(g, grid_points) >= kPassiveMarginThreshold;
}

/// Smallest eigenvalue of phi_n(g) + phi_n(g)'.
inline double toeplitz_min_eig(std::span<const double> g, Eigen::Index n) {
    const Eigen::MatrixXd phi = toeplitz_matrix(g, n);
    const Eigen::MatrixXd sym = phi + phi.transpose();
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

/// |f(theta + delta) - f(theta)| <= (m - 1) |delta| sum |g_k| (+ slack),
/// f(theta) = sum_k g_k cos(k theta).
inline bool lipschitz_bound_check(std::span<const double> g, double theta, double delta, double slack = 0.0) {
    double l1 = 0.0;
    for (double v : g) l1 += std::abs(v);
    double lhs = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double kd = static_cast<double>(k);
        lhs += g[k] * (std::cos(kd * (theta + delta)) - std::cos(kd * theta));
    }
    const double m1 = g.empty() ? 0.0 : static_cast<double>(g.size() - 1);
    return std::abs(lhs) <= m1 * std::abs(delta) * l1 + slack;
}

}  // namespace ifir
