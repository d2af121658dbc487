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

// Example systems: C_q fitting targets, the compliant two-cart plant (linear
// and piecewise-spring), second-order reference models, the PID baseline and
// closed-loop simulation.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "ifir/controller.hpp"
#include "ifir/errors.hpp"
#include "ifir/loop.hpp"
#include "ifir/lti.hpp"

namespace ifir {

/// Realization of 1 / (0.5 s + 1)^q as a cascade of first-order sections.
inline StateSpace target_filter(int q) {
    require(q >= 1, "target_filter: q must be at least 1");
    const Eigen::Index n = q;
    Eigen::MatrixXd a = -2.0 * Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 1; i < n; ++i) a(i, i - 1) = 2.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(0) = 2.0;
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(n);
    c(n - 1) = 1.0;
    return {a, b, c, 0.0};
}

/// (1 + 0.1 s) / (1 + 2 zeta T s + T^2 s^2).
inline StateSpace reference_model(double t_const, double zeta) {
    require(t_const > 0.0 && zeta > 0.0, "reference_model: T and zeta must be positive");
    return tf_to_ss({0.1, 1.0}, {t_const * t_const, 2.0 * zeta * t_const, 1.0});
}

/// Sampled unit-step response of 1 / (tau s + 1): 1 - exp(-t ts / tau).
inline SampledSignal filtered_step(std::size_t n, double ts, double tau = 0.2) {
    require(n >= 1 && tau > 0.0, "filtered_step: invalid arguments");
    std::vector<double> v(n);
    for (std::size_t t = 0; t < n; ++t) v[t] = 1.0 - std::exp(-static_cast<double>(t) * ts / tau);
    return {std::move(v), ts};
}

/// Ten sinusoids with frequencies spaced linearly over [0.5, 10] rad/s.
inline SampledSignal two_cart_probe(std::size_t n = 2001, double ts = 0.05) {
    const auto omegas = linspace(0.5, 10.0, 10);
    return sine_probe(omegas, n, ts);
}

// ---------------------------------------------------------------------------
// Two-cart plant

struct SpringLaw {
    bool piecewise = false;
    double threshold = 0.5;
    double slope_small = 1.0;
    double slope_large = 2.0;

    [[nodiscard]] double force(double delta, double k_linear) const {
        if (!piecewise) return k_linear * delta;
        const double mag = std::abs(delta);
        if (mag <= threshold) return slope_small * delta;
        return std::copysign(slope_small * threshold + slope_large * (mag - threshold), delta);
    }
};

struct TwoCartParams {
    double m1 = 3.0;
    double m2 = 0.5;
    double k12 = 1.0;
    double c12 = 1.05;
    double c = 0.5;
    SpringLaw spring;

    void validate() const {
        require(m1 > 0.0 && m2 > 0.0 && c12 > 0.0 && c > 0.0 && k12 > 0.0, "TwoCartParams: parameters must be positive");
        if (spring.piecewise) require(spring.threshold > 0.0, "TwoCartParams: spring threshold must be positive");
    }

    /// Stored energy 1/2 m1 v1^2 + 1/2 m2 v2^2 + spring potential.
    [[nodiscard]] double storage(const Eigen::Vector3d& x) const {
        double spring_energy = 0.0;
        const double d = std::abs(x(2));
        if (!spring.piecewise) {
            spring_energy = 0.5 * k12 * d * d;
        } else if (d <= spring.threshold) {
            spring_energy = 0.5 * spring.slope_small * d * d;
        } else {
            const double t = spring.threshold;
            spring_energy = 0.5 * spring.slope_small * t * t + spring.slope_small * t * (d - t) +
                            0.5 * spring.slope_large * (d - t) * (d - t);
        }
        return 0.5 * m1 * x(0) * x(0) + 0.5 * m2 * x(1) * x(1) + spring_energy;
    }
};

/// Continuous nonlinear SISO plant with state-only output.
struct NonlinearPlant {
    Eigen::Index state_dim = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> derivative;
    std::function<double(const Eigen::VectorXd&)> output;
};

/// Linear two-cart model, states (v1, v2, Delta = x1 - x2), output y = v1.
inline StateSpace two_cart_linear(const TwoCartParams& p = {}) {
    p.validate();
    require(!p.spring.piecewise, "two_cart_linear: spring must be linear");
    Eigen::MatrixXd a(3, 3);
    a << -(p.c12 + p.c) / p.m1, p.c12 / p.m1, -p.k12 / p.m1,
         p.c12 / p.m2, -(p.c12 + p.c) / p.m2, p.k12 / p.m2,
         1.0, -1.0, 0.0;
    Eigen::VectorXd b(3);
    b << 1.0 / p.m1, 0.0, 0.0;
    Eigen::RowVectorXd c(3);
    c << 1.0, 0.0, 0.0;
    return {a, b, c, 0.0};
}

inline NonlinearPlant two_cart_nonlinear(const TwoCartParams& p) {
    p.validate();
    NonlinearPlant plant;
    plant.state_dim = 3;
    plant.derivative = [p](const Eigen::VectorXd& x, double u) {
        const double f = p.spring.force(x(2), p.k12);
        const double damp = p.c12 * (x(0) - x(1));
        Eigen::VectorXd dx(3);
        dx << (u - f - damp - p.c * x(0)) / p.m1, (f + damp - p.c * x(1)) / p.m2, x(0) - x(1);
        return dx;
    };
    plant.output = [](const Eigen::VectorXd& x) { return x(0); };
    return plant;
}

/// Linear spring gives a state-space model, piecewise spring a nonlinear plant.
inline std::variant<StateSpace, NonlinearPlant> two_cart(const TwoCartParams& p) {
    if (p.spring.piecewise) return two_cart_nonlinear(p);
    return two_cart_linear(p);
}

/// Fixed-step RK4 integration between samples with the input held constant.
class NonlinearRunner {
public:
    NonlinearRunner(NonlinearPlant plant, double ts, int substeps = 10)
        : plant_(std::move(plant)), ts_(ts), substeps_(substeps), x_(Eigen::VectorXd::Zero(plant_.state_dim)) {
        require(ts > 0.0 && substeps >= 1, "NonlinearRunner: invalid step configuration");
        require(static_cast<bool>(plant_.derivative) && static_cast<bool>(plant_.output), "NonlinearRunner: plant maps missing");
    }

    [[nodiscard]] double free_output() const { return plant_.output(x_); }
    [[nodiscard]] double feedthrough() const { return 0.0; }
    double commit(double u) {
        const double y = free_output();
        const double h = ts_ / substeps_;
        for (int i = 0; i < substeps_; ++i) {
            const Eigen::VectorXd k1 = plant_.derivative(x_, u);
            const Eigen::VectorXd k2 = plant_.derivative(x_ + 0.5 * h * k1, u);
            const Eigen::VectorXd k3 = plant_.derivative(x_ + 0.5 * h * k2, u);
            const Eigen::VectorXd k4 = plant_.derivative(x_ + h * k3, u);
            x_ += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!x_.allFinite()) throw NumericError("NonlinearRunner: state diverged");
        return y;
    }
    [[nodiscard]] double ts() const { return ts_; }
    [[nodiscard]] const Eigen::VectorXd& state() const { return x_; }

private:
    NonlinearPlant plant_;
    double ts_;
    int substeps_;
    Eigen::VectorXd x_;
};

inline SampledSignal simulate_nonlinear(const NonlinearPlant& plant, const SampledSignal& input, int substeps = 10) {
    return run_open_loop(NonlinearRunner(plant, input.ts(), substeps), input);
}

// ---------------------------------------------------------------------------
// PID baseline

/// C(z) = Kp + Kd ts / (1 - z^-1) + Ki (z - 1) / (z ts), with the gains in the
/// roles as printed. `swap_roles` exchanges Kd and Ki (Ki on the integrator,
/// Kd on the difference term).
inline DiscreteTransferFunction pid_controller(double kp, double kd, double ki, double ts, bool swap_roles = false) {
    require(kp >= 0.0 && kd >= 0.0 && ki >= 0.0, "pid_controller: gains must be non-negative");
    require(ts > 0.0, "pid_controller: ts must be positive");
    const double k_int = swap_roles ? ki : kd;
    const double k_diff = swap_roles ? kd : ki;
    // Common denominator 1 - z^-1:
    //   Kp (1 - z^-1) + k_int ts + (k_diff / ts) (1 - z^-1)^2
    std::vector<double> num{kp + k_int * ts + k_diff / ts, -kp - 2.0 * k_diff / ts, k_diff / ts};
    return {num, {1.0, -1.0}, ts};
}

struct PidGains {
    double kp = 0.0;
    double kd = 0.0;
    double ki = 0.0;
};

inline constexpr PidGains kPidReference1{0.8051, 4.4090, 0.0068};
inline constexpr PidGains kPidReference2{2.6142, 10.2330, 0.0232};

// ---------------------------------------------------------------------------
// Closed loop

using LoopController = std::variant<IFIRController, DiscreteTransferFunction>;
using LoopPlant = std::variant<StateSpace, NonlinearPlant>;

/// u(t) = C(r - y)(t) with y(t) read from the plant state before u(t) is
/// applied. Plants with direct feedthrough are rejected when the controller
/// also has one.
inline LoopTrace closed_loop_sim(const LoopPlant& plant, const LoopController& controller, const SampledSignal& r,
                                 int substeps = 10) {
    return std::visit(
        [&](const auto& p, const auto& c) -> LoopTrace {
            using P = std::decay_t<decltype(p)>;
            using C = std::decay_t<decltype(c)>;
            auto make_controller = [&] {
                if constexpr (std::is_same_v<C, IFIRController>) return IfirRunner(c);
                else return TransferFunctionRunner(c);
            };
            if constexpr (std::is_same_v<P, StateSpace>) {
                require(p.is_discrete(), "closed_loop_sim: linear plant must be discretized first");
                return run_loop(StateSpaceRunner(p), make_controller(), r, false);
            } else {
                return run_loop(NonlinearRunner(p, r.ts(), substeps), make_controller(), r, false);
            }
        },
        plant, controller);
}

inline double rms(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size() && !a.empty(), "rms: signals must be non-empty and equally long");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace ifir
