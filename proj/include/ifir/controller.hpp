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
#include <complex>
#include <numbers>
#include <vector>

#include "ifir/errors.hpp"
#include "ifir/lti.hpp"

namespace ifir {

/// Parallel integrator + FIR controller:
///   C(z) = gamma * ts / (1 - z^-1) + sum_k g_k z^-k.
struct IFIRController {
    double gamma = 0.0;
    std::vector<double> g;
    double ts = 1.0;

    [[nodiscard]] std::size_t order() const { return g.size(); }

    void validate() const {
        require(!g.empty(), "IFIRController: empty FIR coefficient list");
        require(ts > 0.0 && std::isfinite(ts), "IFIRController: sampling period must be positive");
        require(std::isfinite(gamma), "IFIRController: non-finite integral gain");
        for (double v : g) require(std::isfinite(v), "IFIRController: non-finite coefficient");
    }

    /// Frequency response of the FIR part only.
    [[nodiscard]] std::complex<double> fir_response(double theta) const { return fir_freq_response(g, theta); }

    /// Equivalent rational transfer function (integrator folded over a common denominator).
    [[nodiscard]] DiscreteTransferFunction to_transfer_function() const {
        validate();
        if (gamma == 0.0) return {g, {1.0}, ts};
        std::vector<double> num(g.size() + 1, 0.0);
        for (std::size_t k = 0; k < g.size(); ++k) {
            num[k] += g[k];
            num[k + 1] -= g[k];
        }
        num[0] += gamma * ts;
        return {num, {1.0, -1.0}, ts};
    }
};

/// Step-wise evaluation of an iFIR controller with zero initial state.
class IfirRunner {
public:
    explicit IfirRunner(const IFIRController& c) : c_(c), history_(c.g.size(), 0.0) { c_.validate(); }

    [[nodiscard]] double free_output() const {
        double acc = integral_;
        // history_[k-1] holds e(t-k)
        for (std::size_t k = 1; k < c_.g.size(); ++k) acc += c_.g[k] * history_[k - 1];
        return acc;
    }
    [[nodiscard]] double feedthrough() const { return c_.gamma * c_.ts + c_.g.front(); }
    double commit(double e) {
        const double y = free_output() + feedthrough() * e;
        integral_ += c_.gamma * c_.ts * e;
        if (!history_.empty()) {
            for (std::size_t k = history_.size() - 1; k > 0; --k) history_[k] = history_[k - 1];
            history_[0] = e;
        }
        return y;
    }
    [[nodiscard]] double ts() const { return c_.ts; }

private:
    IFIRController c_;
    std::vector<double> history_;
    double integral_ = 0.0;
};

inline SampledSignal simulate_lti(const IFIRController& c, const SampledSignal& input) {
    return run_open_loop(IfirRunner(c), input);
}

}  // namespace ifir
