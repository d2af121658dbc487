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

// Reference solutions for tiny instances, used to validate `solve`:
//  - up to three unknowns with linear inequalities: enumerate active sets;
//  - a single PSD block that is the identity map on svec(X) with a Frobenius
//    objective: clip eigenvalues of the target matrix.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "ifir/errors.hpp"
#include "ifir/problem.hpp"
#include "ifir/solver.hpp"

namespace ifir {

namespace detail {

inline Solution oracle_active_set(const ConstrainedLSProblem& pr) {
    const Eigen::Index d = pr.dimension;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(pr.design.rows(), d);
    a.leftCols(pr.design.cols()) = pr.design;
    const Eigen::MatrixXd h = 2.0 * a.transpose() * a;
    const Eigen::VectorXd f = 2.0 * a.transpose() * pr.target;
    require(Eigen::LLT<Eigen::MatrixXd>(h).info() == Eigen::Success,
            "oracle_solve_small: objective must be strictly convex (full column rank design)");

    const auto ncons = static_cast<int>(pr.linear.size());
    require(ncons <= 20, "oracle_solve_small: too many linear constraints to enumerate");
    Solution best;
    best.objective = std::numeric_limits<double>::infinity();
    bool found = false;
    for (unsigned mask = 0; mask < (1u << ncons); ++mask) {
        std::vector<int> act;
        for (int i = 0; i < ncons; ++i)
            if (mask & (1u << i)) act.push_back(i);
        if (static_cast<Eigen::Index>(act.size()) > d) continue;
        const auto na = static_cast<Eigen::Index>(act.size());
        // KKT: [H  -G'; G 0] [x; lambda] = [f; h]
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(d + na, d + na);
        Eigen::VectorXd rhs(d + na);
        kkt.topLeftCorner(d, d) = h;
        rhs.head(d) = f;
        for (Eigen::Index i = 0; i < na; ++i) {
            const auto& lc = pr.linear[static_cast<std::size_t>(act[static_cast<std::size_t>(i)])];
            kkt.block(d + i, 0, 1, d) = lc.row.transpose();
            kkt.block(0, d + i, d, 1) = -lc.row;
            rhs(d + i) = lc.bound;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd sol = lu.solve(rhs);
        const Eigen::VectorXd x = sol.head(d);
        bool ok = true;
        for (Eigen::Index i = 0; i < na; ++i) ok = ok && sol(d + i) >= -1e-12;
        for (const auto& lc : pr.linear) ok = ok && lc.row.dot(x) >= lc.bound - 1e-12;
        if (!ok) continue;
        const double obj = pr.objective(x);
        if (obj < best.objective) {
            best.objective = obj;
            best.x = x;
            found = true;
        }
    }
    if (!found) {
        best.x = Eigen::VectorXd::Zero(d);
        best.objective = pr.objective(best.x);
        best.status = SolveStatus::infeasible_detected;
        return best;
    }
    best.status = SolveStatus::optimal;
    return best;
}

inline bool is_frobenius_psd_instance(const ConstrainedLSProblem& pr) {
    if (pr.psd.size() != 1 || !pr.linear.empty()) return false;
    const auto& blk = pr.psd.front();
    const Eigen::Index n = blk.size;
    if (pr.dimension != svec_size(n) || pr.design.rows() != pr.dimension || pr.design.cols() != pr.dimension) return false;
    if (blk.constant.cwiseAbs().maxCoeff() != 0.0) return false;
    if (static_cast<Eigen::Index>(blk.terms.size()) != pr.dimension) return false;
    for (const auto& t : blk.terms) {
        if (t.var != svec_index(t.row, t.col) || t.coef != 1.0) return false;
    }
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
            const Eigen::Index v = svec_index(i, j);
            const double w = i == j ? 1.0 : kSqrt2;
            for (Eigen::Index r = 0; r < pr.dimension; ++r)
                if (std::abs(pr.design(r, v) - (r == v ? w : 0.0)) > 1e-15) return false;
        }
    return true;
}

}  // namespace detail

/// Exact solution for tiny instances. Throws InputError outside the supported class.
inline Solution oracle_solve_small(const ConstrainedLSProblem& problem) {
    problem.validate();
    if (problem.psd.empty()) {
        require(problem.dimension >= 1 && problem.dimension <= 3,
                "oracle_solve_small: linear instances must have 1 to 3 unknowns");
        return detail::oracle_active_set(problem);
    }
    require(detail::is_frobenius_psd_instance(problem),
            "oracle_solve_small: only a single identity-map PSD block with Frobenius objective is supported");
    const Eigen::Index n = problem.psd.front().size;
    // Target matrix C with ||X - C||_F^2 = objective.
    Eigen::MatrixXd cm(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
            const Eigen::Index v = detail::svec_index(i, j);
            const double val = problem.target(v) / problem.design(v, v);
            cm(i, j) = val;
            cm(j, i) = val;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cm);
    const Eigen::MatrixXd xm = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
    Solution out;
    out.x.resize(problem.dimension);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) out.x(detail::svec_index(i, j)) = xm(i, j);
    out.objective = problem.objective(out.x);
    out.status = SolveStatus::optimal;
    return out;
}

/// Build the Frobenius nearest-PSD problem min ||X - C||_F^2 s.t. X >= 0 over svec-ordered unknowns X_ij (i <= j).
inline ConstrainedLSProblem nearest_psd_problem(const Eigen::MatrixXd& c) {
    require(c.rows() == c.cols(), "nearest_psd_problem: matrix must be square");
    const Eigen::Index n = c.rows();
    const Eigen::Index d = detail::svec_size(n);
    ConstrainedLSProblem pr;
    pr.dimension = d;
    pr.design = Eigen::MatrixXd::Zero(d, d);
    pr.target = Eigen::VectorXd::Zero(d);
    PsdBlock blk(n, "X >= 0");
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
            const Eigen::Index v = detail::svec_index(i, j);
            const double w = i == j ? 1.0 : detail::kSqrt2;
            pr.design(v, v) = w;
            pr.target(v) = w * 0.5 * (c(i, j) + c(j, i));
            blk.add(i, j, v, 1.0);
        }
    pr.psd.push_back(std::move(blk));
    return pr;
}

}  // namespace ifir
