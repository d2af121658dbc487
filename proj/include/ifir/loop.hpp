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

#include <cmath>
#include <vector>

#include "ifir/controller.hpp"
#include "ifir/errors.hpp"
#include "ifir/lti.hpp"

namespace ifir {

struct LoopTrace {
    SampledSignal y;
    SampledSignal u;
};

/// Unity negative feedback loop u = C(r - y), y = P u, from rest.
/// A loop with direct feedthrough on both sides is solved algebraically when
/// `allow_algebraic_loop` is set and 1 + d_p d_c is not near zero.
template <StepRunner Plant, StepRunner Controller>
LoopTrace run_loop(Plant plant, Controller controller, const SampledSignal& r, bool allow_algebraic_loop) {
    require(same_period(plant.ts(), r.ts()) && same_period(controller.ts(), r.ts()),
            "closed loop: sampling periods of plant, controller and reference differ");
    const double dp = plant.feedthrough();
    const double dc = controller.feedthrough();
    if (dp != 0.0 && dc != 0.0) {
        require(allow_algebraic_loop,
                "closed loop: algebraic loop (plant and controller both have direct feedthrough)");
        require(std::abs(1.0 + dp * dc) > 1e-12, "closed loop: ill-posed loop, 1 + P(inf) C(inf) = 0");
    }
    std::vector<double> ys;
    std::vector<double> us;
    ys.reserve(r.size());
    us.reserve(r.size());
    for (double ref : r.values()) {
        const double pf = plant.free_output();
        const double cf = controller.free_output();
        const double y = (pf + dp * cf + dp * dc * ref) / (1.0 + dp * dc);
        const double u = cf + dc * (ref - y);
        controller.commit(ref - y);
        plant.commit(u);
        if (!std::isfinite(y) || !std::isfinite(u)) throw NumericError("closed loop: response diverged to non-finite values");
        ys.push_back(y);
        us.push_back(u);
    }
    return {SampledSignal(std::move(ys), r.ts()), SampledSignal(std::move(us), r.ts())};
}

/// Truncated impulse-response energy of M_r - PC/(1+PC):
///   sqrt(sum_{t<horizon} h(t)^2).
inline double h2_matching_distance(const DiscreteTransferFunction& mr, const DiscreteTransferFunction& p,
                                   const IFIRController& c, std::size_t horizon) {
    require(horizon >= 1, "h2_matching_distance: horizon must be at least 1");
    const auto delta = impulse_signal(horizon, mr.ts);
    const auto target = simulate_lti(mr, delta);
    const auto loop = run_loop(TransferFunctionRunner(p), IfirRunner(c), delta, true);
    double acc = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const double h = target[t] - loop.y[t];
        acc += h * h;
    }
    return std::sqrt(acc);
}

}  // namespace ifir
