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

// Matrix exponential by scaling and squaring with a [13/13] Pade approximant
// (Higham, "The scaling and squaring method for the matrix exponential
// revisited", 2005). Lower-degree approximants are used when the 1-norm allows.

#include <Eigen/Dense>

#include <array>
#include <cmath>

#include "ifir/errors.hpp"

namespace ifir {

namespace detail {

inline void pade_uv(const Eigen::MatrixXd& a, int degree, Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
    const Eigen::Index n = a.rows();
    const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd a2 = a * a;
    switch (degree) {
        case 3: {
            constexpr std::array<double, 4> b{120., 60., 12., 1.};
            u = a * (b[3] * a2 + b[1] * ident);
            v = b[2] * a2 + b[0] * ident;
            return;
        }
        case 5: {
            constexpr std::array<double, 6> b{30240., 15120., 3360., 420., 30., 1.};
            const Eigen::MatrixXd a4 = a2 * a2;
            u = a * (b[5] * a4 + b[3] * a2 + b[1] * ident);
            v = b[4] * a4 + b[2] * a2 + b[0] * ident;
            return;
        }
        case 7: {
            constexpr std::array<double, 8> b{17297280., 8648640., 1995840., 277200.,
                                              25200.,    1512.,    56.,      1.};
            const Eigen::MatrixXd a4 = a2 * a2;
            const Eigen::MatrixXd a6 = a4 * a2;
            u = a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
            v = b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
            return;
        }
        case 9: {
            constexpr std::array<double, 10> b{17643225600., 8821612800., 2075673600., 302702400.,
                                               30270240.,    2162160.,    110880.,     3960.,
                                               90.,          1.};
            const Eigen::MatrixXd a4 = a2 * a2;
            const Eigen::MatrixXd a6 = a4 * a2;
            const Eigen::MatrixXd a8 = a6 * a2;
            u = a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
            v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
            return;
        }
        default: {
            constexpr std::array<double, 14> b{
                64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
                129060195264000.,   10559470521600.,    670442572800.,     33522128640.,
                1323241920.,        40840800.,          960960.,           16380.,
                182.,               1.};
            const Eigen::MatrixXd a4 = a2 * a2;
            const Eigen::MatrixXd a6 = a4 * a2;
            const Eigen::MatrixXd inner_u = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
            u = a * (inner_u + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
            v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
                b[0] * ident;
            return;
        }
    }
}

}  // namespace detail

/// exp(a) for a square real matrix. Throws NumericError on non-finite input or output.
inline Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a) {
    require(a.rows() == a.cols(), "matrix_exp: matrix must be square");
    if (!a.allFinite()) throw NumericError("matrix_exp: non-finite matrix entries");
    if (a.size() == 0) return a;

    // theta_m thresholds for degrees 3, 5, 7, 9, 13 in double precision.
    constexpr std::array<double, 4> theta{1.495585217958292e-2, 2.539398330063230e-1,
                                          9.504178996162932e-1, 2.097847961257068e0};
    constexpr std::array<int, 4> degrees{3, 5, 7, 9};
    constexpr double theta13 = 5.371920351148152e0;

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    Eigen::MatrixXd u;
    Eigen::MatrixXd v;
    int squarings = 0;
    bool done = false;
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        if (norm1 <= theta[i]) {
            detail::pade_uv(a, degrees[i], u, v);
            done = true;
            break;
        }
    }
    if (!done) {
        if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
        detail::pade_uv(a / std::ldexp(1.0, squarings), 13, u, v);
    }

    Eigen::MatrixXd result = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) result = result * result;
    if (!result.allFinite()) throw NumericError("matrix_exp: result is not finite");
    return result;
}

}  // namespace ifir
