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

// Operator-splitting (ADMM) solver for
//
//   min ||A x - b||^2   s.t.   K x + c = s,   s in R_+^p x S_+^{n_1} x ... x S_+^{n_k}
//
// PSD blocks are handled in scaled half-vectorized form (off-diagonal entries
// times sqrt(2)) so that Euclidean projection in the slack space equals the
// Frobenius projection onto the PSD cone. The x-subproblem is a regularized
// least-squares solve with a cached sparse LDL^T factorization.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "ifir/errors.hpp"
#include "ifir/problem.hpp"

#ifdef IFIR_USE_LAPACKE
#include <lapacke.h>
#endif
#ifdef IFIR_USE_OPENBLAS
extern "C" void openblas_set_num_threads(int);
#endif

namespace ifir {

struct SolverOptions {
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
    int max_iters = 200000;
    // The splitting is deterministic; the seed only labels a run for reproducibility logs.
    std::uint64_t seed = 0;
    double rho = 0.1;
    double sigma = 1e-6;
    double relaxation = 1.6;
    int adapt_interval = 100;
    int log_interval = 0;  // > 0: print residuals to stderr every log_interval iterations
};

enum class SolveStatus { optimal, max_iters, infeasible_detected };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::max_iters: return "max_iters";
        case SolveStatus::infeasible_detected: return "infeasible_detected";
    }
    return "unknown";
}

struct Solution {
    Eigen::VectorXd x;
    double objective = 0.0;
    SolveStatus status = SolveStatus::max_iters;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double primal_tolerance = 0.0;
    double dual_tolerance = 0.0;
    int iterations = 0;
    double solve_seconds = 0.0;
};

namespace detail {

constexpr double kSqrt2 = 1.41421356237309504880;

inline Eigen::Index svec_size(Eigen::Index n) { return n * (n + 1) / 2; }

// Column-major upper triangle: (i, j), i <= j.
inline Eigen::Index svec_index(Eigen::Index i, Eigen::Index j) { return j * (j + 1) / 2 + i; }

inline Eigen::MatrixXd svec_to_matrix(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index n) {
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double val = v(svec_index(i, j));
            if (i == j) {
                m(i, i) = val;
            } else {
                m(i, j) = val / kSqrt2;
                m(j, i) = val / kSqrt2;
            }
        }
    return m;
}

inline void matrix_to_svec(const Eigen::MatrixXd& m, Eigen::Ref<Eigen::VectorXd> v) {
    const Eigen::Index n = m.rows();
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) v(svec_index(i, j)) = i == j ? m(i, i) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
}

/// Frobenius projection onto the PSD cone, in svec coordinates, in place.
inline void project_psd(Eigen::Ref<Eigen::VectorXd> v, Eigen::Index n) {
    const Eigen::MatrixXd m = svec_to_matrix(v, n);
    // Cheap exits: already PSD, or negative semidefinite.
    if (Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success) return;
    if (Eigen::LLT<Eigen::MatrixXd>(-m).info() == Eigen::Success) {
        v.setZero();
        return;
    }
    Eigen::MatrixXd q;
    Eigen::VectorXd lam;
#ifdef IFIR_USE_LAPACKE
    // divide and conquer is several times faster than Eigen's QR iteration for n > 100
    q = m;
    lam.resize(n);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n), q.data(),
                                           static_cast<lapack_int>(n), lam.data());
    if (info != 0) throw NumericError("PSD projection: eigendecomposition failed");
#else
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw NumericError("PSD projection: eigendecomposition failed");
    q = es.eigenvectors();
    lam = es.eigenvalues();
#endif
    // Keep whichever side of the spectrum is smaller: S+ = Q+ L+ Q+' or S - Q- L- Q-'.
    Eigen::Index neg = 0;
    while (neg < n && lam(neg) < 0.0) ++neg;
    Eigen::MatrixXd out;
    if (neg <= n - neg) {
        const auto qn = q.leftCols(neg);
        out = m - qn * lam.head(neg).asDiagonal() * qn.transpose();
    } else {
        const auto qp = q.rightCols(n - neg);
        out = qp * lam.tail(n - neg).asDiagonal() * qp.transpose();
    }
    matrix_to_svec(out, v);
}

struct ConeLayout {
    Eigen::Index linear = 0;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> psd;  // (offset, matrix size)
};

inline void project_cone(Eigen::VectorXd& v, const ConeLayout& cones) {
    v.head(cones.linear) = v.head(cones.linear).cwiseMax(0.0);
    for (const auto& [offset, n] : cones.psd) project_psd(v.segment(offset, svec_size(n)), n);
}

inline double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace detail

/// Solve a ConstrainedLSProblem. Never reports infeasibility from first-order
/// information; an iteration cap yields status max_iters with the best iterate.
inline Solution solve(const ConstrainedLSProblem& problem, const SolverOptions& opts = {}) {
    using detail::inf_norm;
    problem.validate();
    require(opts.abs_tol >= 0.0 && opts.rel_tol >= 0.0 && opts.max_iters >= 1, "solve: invalid options");
#ifdef IFIR_USE_OPENBLAS
    // eigendecompositions stay sequential so repeated solves are bitwise reproducible
    static const bool single_thread = (openblas_set_num_threads(1), true);
    (void)single_thread;
#endif
    const auto t_start = std::chrono::steady_clock::now();
    const Eigen::Index d = problem.dimension;
    const Eigen::Index k = problem.design.cols();

    Solution out;
    out.x = Eigen::VectorXd::Zero(d);

    // Objective: 1/2 x'Qx - q'x (+ const), Q = 2 A'A, q = 2 A'b; scaled by kappa.
    Eigen::MatrixXd q_mat = Eigen::MatrixXd::Zero(k, k);
    q_mat.selfadjointView<Eigen::Lower>().rankUpdate(problem.design.transpose(), 2.0);
    q_mat = q_mat.selfadjointView<Eigen::Lower>();
    Eigen::VectorXd q_vec = Eigen::VectorXd::Zero(d);
    q_vec.head(k) = 2.0 * problem.design.transpose() * problem.target;
    const double max_diag = k > 0 ? q_mat.diagonal().maxCoeff() : 0.0;
    const double kappa = max_diag > 0.0 ? 1.0 / max_diag : 1.0;

    // Constraint rows, equilibrated: each linear row to unit norm, each PSD
    // block by one common factor.
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> c_vals;
    std::vector<double> row_scale;
    detail::ConeLayout cones;
    for (const auto& lc : problem.linear) {
        const double nrm = lc.row.norm();
        if (nrm == 0.0) {
            if (lc.bound > 0.0) {
                out.status = SolveStatus::infeasible_detected;
                out.objective = problem.objective(out.x);
                return out;
            }
            continue;
        }
        const auto r = static_cast<Eigen::Index>(c_vals.size());
        for (Eigen::Index j = 0; j < d; ++j)
            if (lc.row(j) != 0.0) trips.emplace_back(r, j, lc.row(j) / nrm);
        c_vals.push_back(-lc.bound / nrm);
        row_scale.push_back(1.0 / nrm);
    }
    cones.linear = static_cast<Eigen::Index>(c_vals.size());
    for (const auto& blk : problem.psd) {
        const Eigen::Index n = blk.size;
        const Eigen::Index offset = static_cast<Eigen::Index>(c_vals.size());
        std::vector<Eigen::Triplet<double>> local;
        local.reserve(blk.terms.size());
        for (const auto& t : blk.terms)
            local.emplace_back(detail::svec_index(t.row, t.col), t.var, t.row == t.col ? t.coef : detail::kSqrt2 * t.coef);
        Eigen::SparseMatrix<double, Eigen::RowMajor> kb(detail::svec_size(n), d);
        kb.setFromTriplets(local.begin(), local.end());
        double max_row = 0.0;
        for (Eigen::Index r = 0; r < kb.outerSize(); ++r) max_row = std::max(max_row, kb.row(r).norm());
        const double scale = max_row > 0.0 ? 1.0 / max_row : 1.0;
        for (Eigen::Index r = 0; r < kb.outerSize(); ++r)
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(kb, r); it; ++it)
                trips.emplace_back(offset + r, it.col(), scale * it.value());
        Eigen::VectorXd c0(detail::svec_size(n));
        detail::matrix_to_svec(blk.constant, c0);
        for (Eigen::Index i = 0; i < c0.size(); ++i) {
            c_vals.push_back(scale * c0(i));
            row_scale.push_back(scale);
        }
        cones.psd.emplace_back(offset, n);
    }
    const auto p = static_cast<Eigen::Index>(c_vals.size());
    Eigen::SparseMatrix<double> kmat(p, d);
    kmat.setFromTriplets(trips.begin(), trips.end());
    const Eigen::SparseMatrix<double> kmat_t = kmat.transpose();
    const Eigen::Map<const Eigen::VectorXd> c(c_vals.data(), p);
    const Eigen::Map<const Eigen::VectorXd> dscale(row_scale.data(), p);

    // P~ = kappa Q, padded to d x d.
    std::vector<Eigen::Triplet<double>> ptrips;
    ptrips.reserve(static_cast<std::size_t>(k * k));
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index i = 0; i < k; ++i)
            if (q_mat(i, j) != 0.0) ptrips.emplace_back(i, j, kappa * q_mat(i, j));
    Eigen::SparseMatrix<double> pmat(d, d);
    pmat.setFromTriplets(ptrips.begin(), ptrips.end());
    const Eigen::VectorXd qs = kappa * q_vec;
    const Eigen::SparseMatrix<double> ktk = kmat_t * kmat;
    Eigen::SparseMatrix<double> ident(d, d);
    ident.setIdentity();

    double rho = std::clamp(opts.rho, 1e-4, 1e4);
    const double sigma = opts.sigma;
    const double alpha = opts.relaxation;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    auto factor = [&] {
        const Eigen::SparseMatrix<double> mat = pmat + sigma * ident + rho * ktk;
        ldlt.compute(mat);
        if (ldlt.info() != Eigen::Success) throw NumericError("solve: factorization of the x-subproblem failed");
    };
    factor();

    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd s = c;
    detail::project_cone(s, cones);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd s_prev(p);
    Eigen::VectorXd kx(p);
    Eigen::VectorXd v(p);

    double best_score = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = x;
    double best_prim = 0.0, best_dual = 0.0, best_eps_p = 0.0, best_eps_d = 0.0;

    const double qs_norm = inf_norm(qs);
    const double c_norm = inf_norm(c.cwiseQuotient(dscale));
    int iter = 0;
    bool converged = false;
    for (iter = 1; iter <= opts.max_iters; ++iter) {
        const Eigen::VectorXd rhs = qs + sigma * x - rho * (kmat_t * (c - s + u));
        const Eigen::VectorXd x_tilde = ldlt.solve(rhs);
        const Eigen::VectorXd z_tilde = kmat * x_tilde + c;
        x = alpha * x_tilde + (1.0 - alpha) * x;
        s_prev = s;
        v = alpha * z_tilde + (1.0 - alpha) * s_prev;
        s = v + u;
        detail::project_cone(s, cones);
        u += v - s;

        if (!x.allFinite() || !u.allFinite()) throw NumericError("solve: NaN or Inf encountered in iterates");

        // Residuals in the caller's (unscaled) units.
        kx.noalias() = kmat * x;
        const double prim = inf_norm((kx + c - s).cwiseQuotient(dscale));
        const Eigen::VectorXd y = rho * u;
        const Eigen::VectorXd kty = kmat_t * y;
        const Eigen::VectorXd px = pmat * x;
        const double dual = inf_norm(px - qs + kty) / kappa;
        const double eps_p = opts.abs_tol + opts.rel_tol * std::max({inf_norm(kx.cwiseQuotient(dscale)),
                                                                     inf_norm(s.cwiseQuotient(dscale)), c_norm});
        const double eps_d = opts.abs_tol + opts.rel_tol * std::max({inf_norm(px), qs_norm, inf_norm(kty)}) / kappa;

        const double score = std::max(prim / std::max(eps_p, 1e-300), dual / std::max(eps_d, 1e-300));
        if (score < best_score) {
            best_score = score;
            best_x = x;
            best_prim = prim;
            best_dual = dual;
            best_eps_p = eps_p;
            best_eps_d = eps_d;
        }
        if (opts.log_interval > 0 && iter % opts.log_interval == 0)
            std::fprintf(stderr, "iter %7d  prim %.3e (tol %.3e)  dual %.3e (tol %.3e)  rho %.3e\n", iter, prim, eps_p, dual,
                         eps_d, rho);
        if (prim <= eps_p && dual <= eps_d) {
            converged = true;
            break;
        }

        if (p > 0 && opts.adapt_interval > 0 && iter % opts.adapt_interval == 0) {
            const double rp = prim / std::max(eps_p, 1e-300);
            const double rd = dual / std::max(eps_d, 1e-300);
            double new_rho = rho;
            if (rp > 10.0 * rd) new_rho = std::min(rho * 2.0, 1e4);
            else if (rd > 10.0 * rp) new_rho = std::max(rho / 2.0, 1e-4);
            if (new_rho != rho) {
                u *= rho / new_rho;
                rho = new_rho;
                factor();
            }
        }
    }

    out.x = converged ? x : best_x;
    out.status = converged ? SolveStatus::optimal : SolveStatus::max_iters;
    out.iterations = std::min(iter, opts.max_iters);
    out.primal_residual = best_prim;
    out.dual_residual = best_dual;
    out.primal_tolerance = best_eps_p;
    out.dual_tolerance = best_eps_d;
    out.objective = problem.objective(out.x);
    out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

// ---------------------------------------------------------------------------
// Independent checking

struct ConstraintCheck {
    std::string label;
    double value = 0.0;  // linear: violation (bound - row.x); PSD: minimum eigenvalue
    bool pass = true;
};

struct SolutionReport {
    double objective = 0.0;
    double max_linear_violation = 0.0;
    double min_psd_eigenvalue = std::numeric_limits<double>::infinity();
    std::vector<ConstraintCheck> linear;
    std::vector<ConstraintCheck> psd;
    bool pass = true;

    [[nodiscard]] std::vector<std::string> failures() const {
        std::vector<std::string> out;
        for (const auto& c : linear)
            if (!c.pass) out.push_back(c.label);
        for (const auto& c : psd)
            if (!c.pass) out.push_back(c.label);
        return out;
    }
};

/// Recompute objective and constraint satisfaction from scratch.
inline SolutionReport check_solution(const ConstrainedLSProblem& problem, const Eigen::VectorXd& x, double tol = 1e-6) {
    require(x.size() == problem.dimension, "check_solution: iterate has wrong dimension");
    SolutionReport rep;
    rep.objective = problem.objective(x);
    for (std::size_t i = 0; i < problem.linear.size(); ++i) {
        const auto& lc = problem.linear[i];
        const double viol = lc.bound - lc.row.dot(x);
        const std::string label = lc.label.empty() ? "linear[" + std::to_string(i) + "]" : lc.label;
        rep.linear.push_back({label, viol, viol <= tol});
        rep.max_linear_violation = std::max(rep.max_linear_violation, viol);
        rep.pass = rep.pass && viol <= tol;
    }
    for (std::size_t i = 0; i < problem.psd.size(); ++i) {
        const auto& blk = problem.psd[i];
        const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(blk.evaluate(x), Eigen::EigenvaluesOnly).eigenvalues();
        const double mn = eig.minCoeff();
        const std::string label = blk.label.empty() ? "psd[" + std::to_string(i) + "]" : blk.label;
        rep.psd.push_back({label, mn, mn >= -tol});
        rep.min_psd_eigenvalue = std::min(rep.min_psd_eigenvalue, mn);
        rep.pass = rep.pass && mn >= -tol;
    }
    return rep;
}

}  // namespace ifir
