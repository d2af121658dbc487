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
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ifir/errors.hpp"
#include "ifir/expm.hpp"

namespace ifir {

/// Uniformly sampled scalar time series.
class SampledSignal {
public:
    SampledSignal() = default;
    SampledSignal(std::vector<double> values, double ts) : values_(std::move(values)), ts_(ts) {
        require(std::isfinite(ts_) && ts_ > 0.0, "SampledSignal: sampling period must be positive");
        for (double v : values_) require(std::isfinite(v), "SampledSignal: non-finite sample");
    }

    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] std::span<const double> view() const { return values_; }
    [[nodiscard]] double ts() const { return ts_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] bool empty() const { return values_.empty(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

    [[nodiscard]] Eigen::Map<const Eigen::VectorXd> vector() const {
        return {values_.data(), static_cast<Eigen::Index>(values_.size())};
    }

private:
    std::vector<double> values_;
    double ts_ = 1.0;
};

inline bool same_period(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

/// SISO state-space model. `ts` empty means continuous time.
struct StateSpace {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::RowVectorXd c;
    double d = 0.0;
    std::optional<double> ts;

    StateSpace() = default;
    StateSpace(Eigen::MatrixXd a_mat, Eigen::VectorXd b_vec, Eigen::RowVectorXd c_vec, double d_val,
               std::optional<double> period = std::nullopt)
        : a(std::move(a_mat)), b(std::move(b_vec)), c(std::move(c_vec)), d(d_val), ts(period) {
        validate();
    }

    [[nodiscard]] Eigen::Index order() const { return a.rows(); }
    [[nodiscard]] bool is_discrete() const { return ts.has_value(); }

    void validate() const {
        const auto n = a.rows();
        require(a.cols() == n && b.size() == n && c.size() == n, "StateSpace: inconsistent dimensions");
        require(a.allFinite() && b.allFinite() && c.allFinite() && std::isfinite(d),
                "StateSpace: non-finite entries");
        if (ts) require(*ts > 0.0 && std::isfinite(*ts), "StateSpace: discrete sampling period must be positive");
    }
};

/// Discrete transfer function with coefficients in powers of z^-1.
struct DiscreteTransferFunction {
    std::vector<double> num;
    std::vector<double> den;
    double ts = 1.0;

    DiscreteTransferFunction() : num{0.0}, den{1.0} {}
    DiscreteTransferFunction(std::vector<double> numerator, std::vector<double> denominator, double period)
        : num(std::move(numerator)), den(std::move(denominator)), ts(period) {
        require(!num.empty() && !den.empty(), "DiscreteTransferFunction: empty coefficient list");
        require(den.front() != 0.0, "DiscreteTransferFunction: den[0] must be nonzero");
        require(ts > 0.0 && std::isfinite(ts), "DiscreteTransferFunction: sampling period must be positive");
        for (double v : num) require(std::isfinite(v), "DiscreteTransferFunction: non-finite coefficient");
        for (double v : den) require(std::isfinite(v), "DiscreteTransferFunction: non-finite coefficient");
    }

    [[nodiscard]] double feedthrough() const { return num.front() / den.front(); }

    /// H(e^{j theta}).
    [[nodiscard]] std::complex<double> frequency_response(double theta) const {
        std::complex<double> n{0.0};
        std::complex<double> dd{0.0};
        for (std::size_t k = 0; k < num.size(); ++k) n += num[k] * std::polar(1.0, -theta * static_cast<double>(k));
        for (std::size_t k = 0; k < den.size(); ++k) dd += den[k] * std::polar(1.0, -theta * static_cast<double>(k));
        return n / dd;
    }
};

// ---------------------------------------------------------------------------
// Discretization

/// Exact zero-order-hold discretization via the exponential of [[A, B], [0, 0]] ts.
inline StateSpace c2d_zoh(const StateSpace& sys, double ts) {
    require(!sys.is_discrete(), "c2d_zoh: system is already discrete");
    require(ts > 0.0 && std::isfinite(ts), "c2d_zoh: ts must be positive");
    sys.validate();
    const auto n = sys.order();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = sys.a * ts;
    aug.topRightCorner(n, 1) = sys.b * ts;
    const Eigen::MatrixXd e = matrix_exp(aug);
    return {e.topLeftCorner(n, n), e.topRightCorner(n, 1), sys.c, sys.d, ts};
}

/// First-order-hold (triangle) discretization: exact when the input is
/// piecewise linear between samples.
inline StateSpace c2d_foh(const StateSpace& sys, double ts) {
    require(!sys.is_discrete(), "c2d_foh: system is already discrete");
    require(ts > 0.0 && std::isfinite(ts), "c2d_foh: ts must be positive");
    sys.validate();
    const auto n = sys.order();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 2, n + 2);
    aug.topLeftCorner(n, n) = sys.a * ts;
    aug.block(0, n, n, 1) = sys.b * ts;
    aug(n, n + 1) = 1.0;
    const Eigen::MatrixXd e = matrix_exp(aug);
    const Eigen::MatrixXd phi = e.topLeftCorner(n, n);
    const Eigen::VectorXd gamma1 = e.block(0, n, n, 1);
    const Eigen::VectorXd gamma2 = e.block(0, n + 1, n, 1);
    const Eigen::VectorXd bd = gamma1 - gamma2 + phi * gamma2;
    const double dd = sys.d + sys.c.dot(gamma2);
    return {phi, bd, sys.c, dd, ts};
}

/// Backward-Euler integrator gamma * ts / (1 - z^-1).
inline DiscreteTransferFunction backward_euler_integrator(double gamma, double ts, bool certified = false) {
    require(std::isfinite(gamma), "backward_euler_integrator: non-finite gain");
    if (certified) require(gamma >= 0.0, "backward_euler_integrator: negative gain in passivity-certified mode");
    return {{gamma * ts}, {1.0, -1.0}, ts};
}

// ---------------------------------------------------------------------------
// Conversions

/// Coefficients of prod (1 - r_i x), i.e. the characteristic polynomial in z^-1.
inline std::vector<double> poly_from_roots(const Eigen::VectorXcd& roots) {
    std::vector<std::complex<double>> p{1.0};
    for (Eigen::Index i = 0; i < roots.size(); ++i) {
        p.emplace_back(0.0);
        for (std::size_t k = p.size() - 1; k > 0; --k) p[k] -= roots[i] * p[k - 1];
    }
    std::vector<double> out(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) out[k] = p[k].real();
    return out;
}

/// Impulse response h(0..count-1) of a discrete state-space model.
inline std::vector<double> impulse_response(const StateSpace& sys, std::size_t count) {
    std::vector<double> h(count, 0.0);
    if (count == 0) return h;
    h[0] = sys.d;
    Eigen::VectorXd x = sys.b;
    for (std::size_t k = 1; k < count; ++k) {
        h[k] = sys.c.dot(x);
        x = sys.a * x;
    }
    return h;
}

inline DiscreteTransferFunction ss_to_tf(const StateSpace& sys) {
    require(sys.is_discrete(), "ss_to_tf: system must be discrete");
    const auto n = static_cast<std::size_t>(sys.order());
    std::vector<double> den{1.0};
    if (n > 0) den = poly_from_roots(Eigen::EigenSolver<Eigen::MatrixXd>(sys.a, false).eigenvalues());
    // num = den * H truncated at degree n; exact because H = num / den.
    const auto h = impulse_response(sys, n + 1);
    std::vector<double> num(n + 1, 0.0);
    for (std::size_t k = 0; k <= n; ++k)
        for (std::size_t i = 0; i <= k; ++i) num[k] += den[i] * h[k - i];
    return {num, den, *sys.ts};
}

/// Controllable-canonical realization of a proper continuous transfer
/// function given in descending powers of s.
inline StateSpace tf_to_ss(std::vector<double> num, std::vector<double> den) {
    while (den.size() > 1 && den.front() == 0.0) den.erase(den.begin());
    while (num.size() > 1 && num.front() == 0.0) num.erase(num.begin());
    require(!den.empty() && den.front() != 0.0, "tf_to_ss: zero denominator");
    require(num.size() <= den.size(), "tf_to_ss: transfer function must be proper");
    const std::size_t n = den.size() - 1;
    const double lead = den.front();
    for (double& v : den) v /= lead;
    for (double& v : num) v /= lead;
    std::vector<double> padded(n + 1 - num.size(), 0.0);
    padded.insert(padded.end(), num.begin(), num.end());
    const double d = padded.front();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::RowVectorXd c(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i + 1 < n; ++i) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        // den = s^n + den[1] s^{n-1} + ... + den[n]; state x_i ~ s^i.
        a(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(i)) = -den[n - i];
        c(static_cast<Eigen::Index>(i)) = padded[n - i] - d * den[n - i];
    }
    if (n > 0) b(static_cast<Eigen::Index>(n - 1)) = 1.0;
    return {a, b, c, d};
}

/// Spectral radius of the denominator's companion matrix.
inline double pole_radius(const DiscreteTransferFunction& tf) {
    std::vector<double> den = tf.den;
    while (den.size() > 1 && den.back() == 0.0) den.pop_back();
    const auto q = static_cast<Eigen::Index>(den.size()) - 1;
    if (q <= 0) return 0.0;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index j = 0; j < q; ++j) companion(0, j) = -den[static_cast<std::size_t>(j + 1)] / den[0];
    for (Eigen::Index i = 1; i < q; ++i) companion(i, i - 1) = 1.0;
    return Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_stable(const DiscreteTransferFunction& tf, double margin = 1.0 - 1e-9) {
    return pole_radius(tf) < margin;
}

// ---------------------------------------------------------------------------
// Step-wise runners. Each exposes the part of the current output that does not
// depend on the current input (`free_output`), the direct feedthrough gain, and
// `commit(input)` which advances one sample. Output = free_output + feedthrough * input.

class StateSpaceRunner {
public:
    explicit StateSpaceRunner(const StateSpace& sys) : sys_(sys), x_(Eigen::VectorXd::Zero(sys.order())) {
        require(sys.is_discrete(), "StateSpaceRunner: system must be discrete");
    }
    [[nodiscard]] double free_output() const { return sys_.c.dot(x_); }
    [[nodiscard]] double feedthrough() const { return sys_.d; }
    double commit(double input) {
        const double y = free_output() + sys_.d * input;
        x_ = sys_.a * x_ + sys_.b * input;
        return y;
    }
    [[nodiscard]] double ts() const { return *sys_.ts; }

private:
    StateSpace sys_;
    Eigen::VectorXd x_;
};

class TransferFunctionRunner {
public:
    explicit TransferFunctionRunner(const DiscreteTransferFunction& tf)
        : tf_(tf), past_in_(tf.num.size(), 0.0), past_out_(tf.den.size(), 0.0) {}

    [[nodiscard]] double free_output() const {
        double acc = 0.0;
        for (std::size_t k = 1; k < tf_.num.size(); ++k) acc += tf_.num[k] * past_in_[k - 1];
        for (std::size_t k = 1; k < tf_.den.size(); ++k) acc -= tf_.den[k] * past_out_[k - 1];
        return acc / tf_.den.front();
    }
    [[nodiscard]] double feedthrough() const { return tf_.feedthrough(); }
    double commit(double input) {
        const double y = free_output() + feedthrough() * input;
        shift_in(past_in_, input);
        shift_in(past_out_, y);
        return y;
    }
    [[nodiscard]] double ts() const { return tf_.ts; }

private:
    static void shift_in(std::vector<double>& buf, double v) {
        if (buf.empty()) return;
        for (std::size_t k = buf.size() - 1; k > 0; --k) buf[k] = buf[k - 1];
        buf[0] = v;
    }

    DiscreteTransferFunction tf_;
    std::vector<double> past_in_;
    std::vector<double> past_out_;
};

template <typename R>
concept StepRunner = requires(R r, const R cr, double v) {
    { cr.free_output() } -> std::convertible_to<double>;
    { cr.feedthrough() } -> std::convertible_to<double>;
    { r.commit(v) } -> std::convertible_to<double>;
    { cr.ts() } -> std::convertible_to<double>;
};

template <StepRunner R>
SampledSignal run_open_loop(R runner, const SampledSignal& input) {
    require(same_period(runner.ts(), input.ts()), "simulate: sampling period mismatch between system and signal");
    std::vector<double> out;
    out.reserve(input.size());
    for (double u : input.values()) out.push_back(runner.commit(u));
    return {std::move(out), input.ts()};
}

/// Zero-initial-state response of a discrete system to `input`.
inline SampledSignal simulate_lti(const StateSpace& sys, const SampledSignal& input) {
    return run_open_loop(StateSpaceRunner(sys), input);
}

inline SampledSignal simulate_lti(const DiscreteTransferFunction& tf, const SampledSignal& input) {
    return run_open_loop(TransferFunctionRunner(tf), input);
}

// ---------------------------------------------------------------------------
// Frequency response and signals

/// sum_k g_k e^{-j k theta}.
inline std::complex<double> fir_freq_response(std::span<const double> g, double theta) {
    std::complex<double> acc{0.0};
    for (std::size_t k = 0; k < g.size(); ++k) acc += g[k] * std::polar(1.0, -theta * static_cast<double>(k));
    return acc;
}

inline SampledSignal step_signal(std::size_t n, double ts) {
    require(n >= 1, "step_signal: length must be at least 1");
    return {std::vector<double>(n, 1.0), ts};
}

inline SampledSignal impulse_signal(std::size_t n, double ts) {
    require(n >= 1, "impulse_signal: length must be at least 1");
    std::vector<double> v(n, 0.0);
    v[0] = 1.0;
    return {std::move(v), ts};
}

/// sum_i sin(omega_i * ts * t), t = 0..n-1.
inline SampledSignal sine_probe(std::span<const double> omegas, std::size_t n, double ts) {
    require(!omegas.empty(), "sine_probe: empty frequency list");
    require(n >= 1, "sine_probe: length must be at least 1");
    std::vector<double> v(n, 0.0);
    for (std::size_t t = 0; t < n; ++t)
        for (double w : omegas) v[t] += std::sin(w * ts * static_cast<double>(t));
    return {std::move(v), ts};
}

/// `count` frequencies spaced linearly over [lo, hi].
inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count, lo);
    if (count == 1) return out;
    for (std::size_t i = 0; i < count; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return out;
}

}  // namespace ifir
