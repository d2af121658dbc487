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

// Virtual-reference least-squares problem for an iFIR controller:
//   min_{g, gamma} || target - E g - gamma E_int ||^2
// where E holds delayed copies of the virtual error and E_int its running
// integral.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <utility>

#include "ifir/errors.hpp"
#include "ifir/lti.hpp"

namespace ifir {

struct FilteredData {
    SampledSignal u_f;  // M_r u
    SampledSignal e_f;  // y - M_r y
};

/// Optional user-supplied pre-filter applied to both u and y before the
/// reference-model filtering. Off by default.
using PreFilter = std::function<SampledSignal(const SampledSignal&)>;

inline FilteredData virtual_error_filtered(const SampledSignal& u, const SampledSignal& y,
                                           const DiscreteTransferFunction& mr,
                                           const PreFilter& prefilter = {}) {
    require(u.size() == y.size(), "virtual_error_filtered: u and y differ in length");
    require(same_period(u.ts(), y.ts()), "virtual_error_filtered: u and y differ in sampling period");
    require(same_period(u.ts(), mr.ts), "virtual_error_filtered: reference model sampling period mismatch");
    require(is_stable(mr), "virtual_error_filtered: reference model is not stable");
    const SampledSignal uu = prefilter ? prefilter(u) : u;
    const SampledSignal yy = prefilter ? prefilter(y) : y;
    SampledSignal u_f = simulate_lti(mr, uu);
    const SampledSignal my = simulate_lti(mr, yy);
    std::vector<double> e(yy.size());
    for (std::size_t t = 0; t < e.size(); ++t) e[t] = yy[t] - my[t];
    return {std::move(u_f), SampledSignal(std::move(e), u.ts())};
}

/// N x m banded-causal regressor: column k is e delayed by k samples.
inline Eigen::MatrixXd build_regressor(const SampledSignal& e, std::size_t m) {
    const std::size_t n = e.size();
    require(m >= 1, "build_regressor: order must be at least 1");
    require(m <= n, "build_regressor: order exceeds signal length");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t t = k; t < n; ++t)
            out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = e[t - k];
    return out;
}

/// ts * cumulative sum of e.
inline Eigen::VectorXd build_integral_regressor(const SampledSignal& e) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(e.size()));
    double acc = 0.0;
    for (std::size_t t = 0; t < e.size(); ++t) {
        acc += e[t];
        out(static_cast<Eigen::Index>(t)) = e.ts() * acc;
    }
    return out;
}

/// Integral gain handling: free (an unknown) or fixed to a value >= 0.
struct GammaMode {
    std::optional<double> fixed;

    static GammaMode free() { return {}; }
    static GammaMode fixed_to(double v) { return {v}; }
    [[nodiscard]] bool is_free() const { return !fixed.has_value(); }
};

struct RegressorSystem {
    Eigen::MatrixXd e_mat;
    Eigen::VectorXd e_int;
    Eigen::VectorXd target;  // already reduced by gamma * E_int when gamma is fixed
    double ts = 1.0;
    std::size_t m = 0;
    GammaMode gamma;

    /// Unknowns are [g; gamma] when gamma is free, g otherwise.
    [[nodiscard]] Eigen::MatrixXd design() const {
        if (!gamma.is_free()) return e_mat;
        Eigen::MatrixXd a(e_mat.rows(), e_mat.cols() + 1);
        a << e_mat, e_int;
        return a;
    }

    [[nodiscard]] double objective(const Eigen::VectorXd& x) const { return (target - design() * x).squaredNorm(); }
};

inline RegressorSystem assemble_problem(const SampledSignal& u_f, const SampledSignal& e_f, std::size_t m,
                                        GammaMode gamma) {
    require(u_f.size() == e_f.size(), "assemble_problem: signals differ in length");
    require(same_period(u_f.ts(), e_f.ts()), "assemble_problem: signals differ in sampling period");
    if (gamma.fixed) require(*gamma.fixed >= 0.0 && std::isfinite(*gamma.fixed), "assemble_problem: fixed gamma must be >= 0");
    RegressorSystem sys;
    sys.e_mat = build_regressor(e_f, m);
    sys.e_int = build_integral_regressor(e_f);
    sys.target = u_f.vector();
    if (gamma.fixed) sys.target -= *gamma.fixed * sys.e_int;
    sys.ts = u_f.ts();
    sys.m = m;
    sys.gamma = gamma;
    return sys;
}

/// Unconstrained minimum-norm least-squares solution over the design unknowns.
inline Eigen::VectorXd unconstrained_least_squares(const RegressorSystem& sys) {
    return sys.design().completeOrthogonalDecomposition().solve(sys.target);
}

}  // namespace ifir
