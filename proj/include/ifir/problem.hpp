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

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ifir/errors.hpp"

namespace ifir {

/// row . x >= bound
struct LinearConstraint {
    Eigen::VectorXd row;
    double bound = 0.0;
    std::string label;
};

/// Coefficient of unknown `var` in entries (row, col) and (col, row) of an affine matrix.
struct PsdTerm {
    Eigen::Index row = 0;
    Eigen::Index col = 0;
    Eigen::Index var = 0;
    double coef = 0.0;
};

/// Affine symmetric matrix F(x) = F_0 + sum_j x_j F_j, required PSD. The F_j
/// are stored sparsely as PsdTerms with row <= col.
struct PsdBlock {
    Eigen::Index size = 0;
    Eigen::MatrixXd constant;
    std::vector<PsdTerm> terms;
    std::string label;

    explicit PsdBlock(Eigen::Index n = 0, std::string name = {})
        : size(n), constant(Eigen::MatrixXd::Zero(n, n)), label(std::move(name)) {}

    void add(Eigen::Index row, Eigen::Index col, Eigen::Index var, double coef) {
        if (row > col) std::swap(row, col);
        terms.push_back({row, col, var, coef});
    }

    [[nodiscard]] Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd f = constant;
        for (const auto& t : terms) {
            f(t.row, t.col) += t.coef * x(t.var);
            if (t.row != t.col) f(t.col, t.row) += t.coef * x(t.var);
        }
        return f;
    }
};

/// min || target - design * x ||^2  s.t. linear rows and PSD blocks.
/// `design` may have fewer columns than `dimension`; trailing unknowns (such
/// as the KYP storage matrix) do not enter the objective.
struct ConstrainedLSProblem {
    Eigen::MatrixXd design;
    Eigen::VectorXd target;
    Eigen::Index dimension = 0;
    std::vector<LinearConstraint> linear;
    std::vector<PsdBlock> psd;

    void validate() const {
        require(design.rows() == target.size(), "ConstrainedLSProblem: design/target row mismatch");
        require(design.cols() <= dimension, "ConstrainedLSProblem: design has more columns than unknowns");
        require(design.allFinite() && target.allFinite(), "ConstrainedLSProblem: non-finite data");
        for (const auto& c : linear) {
            require(c.row.size() == dimension, "ConstrainedLSProblem: linear row has wrong length");
            require(c.row.allFinite() && std::isfinite(c.bound), "ConstrainedLSProblem: non-finite linear constraint");
        }
        for (const auto& b : psd) {
            require(b.constant.rows() == b.size && b.constant.cols() == b.size,
                    "ConstrainedLSProblem: PSD constant has wrong size");
            require(b.size >= 1, "ConstrainedLSProblem: empty PSD block");
            require(b.constant.allFinite() && b.constant == b.constant.transpose(),
                    "ConstrainedLSProblem: PSD constant must be finite and symmetric");
            for (const auto& t : b.terms) {
                require(t.row >= 0 && t.col < b.size && t.row <= t.col, "ConstrainedLSProblem: PSD term out of range");
                require(t.var >= 0 && t.var < dimension, "ConstrainedLSProblem: PSD term refers to unknown out of range");
                require(std::isfinite(t.coef), "ConstrainedLSProblem: non-finite PSD coefficient");
            }
        }
    }

    [[nodiscard]] double objective(const Eigen::VectorXd& x) const {
        return (target - design * x.head(design.cols())).squaredNorm();
    }
};

}  // namespace ifir
