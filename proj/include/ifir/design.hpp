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

// End-to-end passive iFIR design: regressor assembly, passivity constraints,
// constrained least squares, independent checks and frequency-domain
// certification.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ifir/controller.hpp"
#include "ifir/errors.hpp"
#include "ifir/lti.hpp"
#include "ifir/passivity.hpp"
#include "ifir/problem.hpp"
#include "ifir/solver.hpp"
#include "ifir/vrft.hpp"

namespace ifir {

/// Continuous reference model, descending powers of s, discretized by ZOH.
struct ReferenceModelSpec {
    std::vector<double> num{0.1, 1.0};
    std::vector<double> den{0.0625, 0.5, 1.0};

    [[nodiscard]] DiscreteTransferFunction discretize(double ts) const { return ss_to_tf(c2d_zoh(tf_to_ss(num, den), ts)); }
};

enum class FitMode {
    vrft,    // columns (u, y) are open-loop plant data, filtered through M_r
    direct,  // y is the controller input e, u its output; no reference model
};

/// Designs are certified by the dense-grid margin afterwards, so the solver
/// runs at 1e-6 rather than the library default.
inline SolverOptions design_solver_options() {
    SolverOptions o;
    o.abs_tol = 1e-6;
    o.rel_tol = 1e-6;
    return o;
}

struct DesignConfig {
    PassivityMethod method = PassivityMethod::posreal;
    Eigen::Index m = 100;
    std::optional<Eigen::Index> n;     // toeplitz order; empty -> 2m, 4m, 8m schedule
    std::optional<Eigen::Index> grid;  // posreal M; empty -> 2m
    std::optional<double> rho0;        // empty -> 10 max |g_LS|
    double rho = 1.0;
    std::optional<double> epsilon;     // empty -> auto
    bool escalate = true;              // retry uncertified designs (larger epsilon, tighter tolerance)
    GammaMode gamma = GammaMode::free();
    std::optional<double> ts;
    FitMode fit = FitMode::vrft;
    ReferenceModelSpec reference;
    SolverOptions solver = design_solver_options();
    std::size_t verify_grid = 100000;
};

struct DesignAttempt {
    Eigen::Index size = 0;  // toeplitz n or posreal M
    double epsilon = 0.0;
    SolveStatus status = SolveStatus::max_iters;
    double margin = 0.0;
    int iterations = 0;
    double seconds = 0.0;
};

struct DesignReport {
    IFIRController controller;
    PassivityMethod method = PassivityMethod::posreal;
    Solution solution;
    SolutionReport check;
    double margin = 0.0;
    double unconstrained_objective = 0.0;
    Eigen::VectorXd unconstrained_x;
    double rho0 = 0.0;
    double rho = 1.0;
    double epsilon = 0.0;
    Eigen::Index toeplitz_n = 0;
    Eigen::Index grid = 0;
    std::size_t unknowns = 0;
    std::size_t linear_count = 0;
    std::size_t psd_count = 0;
    std::size_t psd_total_size = 0;
    double assembly_seconds = 0.0;
    std::vector<DesignAttempt> attempts;
    std::vector<std::pair<Eigen::Index, double>> toeplitz_min_eigs;

    [[nodiscard]] bool converged() const { return solution.status == SolveStatus::optimal; }
    [[nodiscard]] bool certified() const {
        return margin >= kPassiveMarginThreshold && controller.gamma >= 0.0;
    }
    /// Certified, converged, and every constraint satisfied to 1e-6.
    [[nodiscard]] bool accepted() const { return certified() && check.pass && solution.status == SolveStatus::optimal; }
};

/// Combine the least-squares fit with a constraint set over the same unknowns.
inline ConstrainedLSProblem make_problem(const RegressorSystem& sys, const PassivityConstraintSet& set) {
    require(static_cast<Eigen::Index>(sys.m) == set.layout.m, "make_problem: FIR order differs between data and constraints");
    require(sys.gamma.is_free() == set.layout.gamma_free, "make_problem: gamma mode differs between data and constraints");
    ConstrainedLSProblem pr;
    pr.design = sys.design();
    pr.target = sys.target;
    pr.dimension = set.layout.dimension();
    pr.linear = set.linear;
    pr.psd = set.psd;
    return pr;
}

inline IFIRController extract_controller(const RegressorSystem& sys, const Eigen::VectorXd& x) {
    IFIRController c;
    const auto m = static_cast<Eigen::Index>(sys.m);
    c.g.assign(x.data(), x.data() + m);
    c.gamma = sys.gamma.is_free() ? x(m) : *sys.gamma.fixed;
    // gamma >= 0 holds only to solver accuracy; snap roundoff-level negatives onto the bound
    if (c.gamma < 0.0 && c.gamma > -1e-6) c.gamma = 0.0;
    c.ts = sys.ts;
    return c;
}

/// Build the regressor from raw (u, y) according to the fit mode.
inline RegressorSystem regressor_from_data(const SampledSignal& u, const SampledSignal& y, const DesignConfig& cfg) {
    require(u.size() == y.size(), "design: u and y differ in length");
    require(cfg.m >= 1, "design: order m must be at least 1");
    require(static_cast<std::size_t>(cfg.m) <= u.size(), "design: order m exceeds the data length");
    if (cfg.ts) require(std::abs(*cfg.ts - u.ts()) <= 1e-9 * u.ts(), "design: sampling period of data differs from configuration");
    if (cfg.fit == FitMode::direct) return assemble_problem(u, y, static_cast<std::size_t>(cfg.m), cfg.gamma);
    const auto mr = cfg.reference.discretize(u.ts());
    const auto filtered = virtual_error_filtered(u, y, mr);
    return assemble_problem(filtered.u_f, filtered.e_f, static_cast<std::size_t>(cfg.m), cfg.gamma);
}

namespace detail {

inline double default_rho0(const Eigen::VectorXd& x_ls, Eigen::Index m) {
    const double mx = x_ls.head(m).cwiseAbs().maxCoeff();
    return mx > 0.0 ? 10.0 * mx : 1.0;
}

inline PassivityConstraintSet build_set(const DesignConfig& cfg, Eigen::Index m, bool gamma_free, double rho0,
                                        Eigen::Index size, double eps, bool auto_eps) {
    switch (cfg.method) {
        case PassivityMethod::kyp: return kyp_constraints(m, gamma_free);
        case PassivityMethod::toeplitz: return finite_toeplitz_constraints(m, size, eps, rho0, cfg.rho, gamma_free);
        case PassivityMethod::posreal:
            return posreal_constraints(m, size, rho0, cfg.rho, auto_eps ? std::nullopt : std::optional<double>(eps), gamma_free);
    }
    throw InputError("design: unknown method");
}

/// m = 1 under KYP: the FIR part is the constant g_0, passive iff g_0 >= 0.
inline PassivityConstraintSet scalar_kyp_set(bool gamma_free) {
    PassivityConstraintSet set;
    set.method = PassivityMethod::kyp;
    set.layout = {1, gamma_free, false};
    add_gamma_nonneg(set);
    set.linear.push_back(unit_row(set.layout, 0, 1.0, 0.0, "g0 >= 0"));
    return set;
}

}  // namespace detail

/// Solve one design for a fixed constraint set and fill the report.
inline DesignReport design_with_set(const RegressorSystem& sys, const PassivityConstraintSet& set, const SolverOptions& opts,
                                    std::size_t verify_grid = 100000) {
    const auto t0 = std::chrono::steady_clock::now();
    const ConstrainedLSProblem pr = make_problem(sys, set);
    DesignReport rep;
    rep.assembly_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.method = set.method;
    rep.solution = solve(pr, opts);
    rep.check = check_solution(pr, rep.solution.x, 1e-6);
    rep.controller = extract_controller(sys, rep.solution.x);
    rep.margin = passivity_margin(rep.controller.g, verify_grid);
    rep.unknowns = static_cast<std::size_t>(pr.dimension);
    rep.linear_count = pr.linear.size();
    rep.psd_count = pr.psd.size();
    for (const auto& b : pr.psd) rep.psd_total_size += static_cast<std::size_t>(b.size);
    rep.epsilon = set.epsilon;
    rep.toeplitz_n = set.toeplitz_order;
    rep.grid = set.grid;
    if (set.decay) {
        rep.rho0 = set.decay->rho0;
        rep.rho = set.decay->rho;
    }
    rep.attempts.push_back({set.method == PassivityMethod::toeplitz ? set.toeplitz_order : set.grid, set.epsilon,
                            rep.solution.status, rep.margin, rep.solution.iterations, rep.solution.solve_seconds});
    return rep;
}

namespace detail {

// Re-solve a certified design at tighter tolerances until the constraint check passes too.
inline DesignReport tighten(const RegressorSystem& sys, const PassivityConstraintSet& set, SolverOptions opts,
                            std::size_t verify_grid, DesignReport rep, std::vector<DesignAttempt>& history) {
    while (rep.certified() && !rep.accepted() && std::max(opts.abs_tol, opts.rel_tol) > 1e-9) {
        history.insert(history.end(), rep.attempts.begin(), rep.attempts.end());
        opts.abs_tol *= 0.1;
        opts.rel_tol *= 0.1;
        auto next = design_with_set(sys, set, opts, verify_grid);
        if (!next.certified()) break;
        rep = std::move(next);
    }
    return rep;
}

}  // namespace detail

/// Full design with retry schedules (all disabled by escalate = false):
///  - kyp: tolerances shrink tenfold (down to 1e-9) while the margin fails;
///  - toeplitz with no n given: n = 2m, 4m, 8m, with up to three tenfold
///    epsilon increases at each order before moving on;
///  - toeplitz with n given, or posreal with an explicit epsilon: epsilon grows
///    tenfold (at most six times) while the margin fails; posreal stops once
///    epsilon reaches the sound bound.
/// A design whose margin certifies but whose constraint check fails is re-solved
/// at tighter tolerances.
inline DesignReport design_from_regressor(const RegressorSystem& sys, const DesignConfig& cfg) {
    const auto m = static_cast<Eigen::Index>(sys.m);
    const bool gamma_free = sys.gamma.is_free();
    const Eigen::VectorXd x_ls = unconstrained_least_squares(sys);
    const double ls_obj = sys.objective(x_ls);
    const double rho0 = cfg.rho0 ? *cfg.rho0 : detail::default_rho0(x_ls, m);
    require(rho0 > 0.0, "design: rho0 must be positive");
    require(cfg.rho > 0.0 && cfg.rho <= 1.0, "design: rho must lie in (0, 1]");

    std::vector<DesignAttempt> history;
    auto finish = [&](const PassivityConstraintSet& set, const SolverOptions& opts, DesignReport rep) {
        if (cfg.escalate) rep = detail::tighten(sys, set, opts, cfg.verify_grid, std::move(rep), history);
        history.insert(history.end(), rep.attempts.begin(), rep.attempts.end());
        rep.attempts = std::move(history);
        rep.unconstrained_objective = ls_obj;
        rep.unconstrained_x = x_ls;
        rep.rho0 = rho0;
        for (Eigen::Index n : {m, 2 * m, 4 * m}) rep.toeplitz_min_eigs.emplace_back(n, toeplitz_min_eig(rep.controller.g, n));
        return rep;
    };

    if (cfg.method == PassivityMethod::kyp) {
        // The LMI has no slack, so the optimum sits on the boundary and the margin is only as good as the
        // solver accuracy: tighten tolerances rather than perturb the constraint.
        const auto set = m == 1 ? detail::scalar_kyp_set(gamma_free) : kyp_constraints(m, gamma_free);
        SolverOptions opts = cfg.solver;
        for (;;) {
            auto rep = design_with_set(sys, set, opts, cfg.verify_grid);
            const bool done = rep.certified() || !cfg.escalate || std::max(opts.abs_tol, opts.rel_tol) <= 1e-9;
            if (done) return finish(set, opts, std::move(rep));
            history.insert(history.end(), rep.attempts.begin(), rep.attempts.end());
            opts.abs_tol *= 0.1;
            opts.rel_tol *= 0.1;
        }
    }

    if (cfg.method == PassivityMethod::posreal) {
        const Eigen::Index grid = cfg.grid ? *cfg.grid : 2 * m;
        const double bound = epsilon_bound(rho0, cfg.rho, m, grid);
        if (!cfg.epsilon) {
            const auto set = detail::build_set(cfg, m, gamma_free, rho0, grid, bound, true);
            return finish(set, cfg.solver, design_with_set(sys, set, cfg.solver, cfg.verify_grid));
        }
        double eps = *cfg.epsilon;
        for (int round = 0;; ++round) {
            const auto set = detail::build_set(cfg, m, gamma_free, rho0, grid, eps, false);
            auto rep = design_with_set(sys, set, cfg.solver, cfg.verify_grid);
            const bool done = rep.certified() || !cfg.escalate || round >= 6 || eps >= bound;
            if (done) return finish(set, cfg.solver, std::move(rep));
            history.insert(history.end(), rep.attempts.begin(), rep.attempts.end());
            eps = std::min(std::max(eps, 1e-12) * 10.0, bound);
        }
    }

    // toeplitz: per order, epsilon grows tenfold up to three times before n doubles
    const double eps0 = cfg.epsilon ? *cfg.epsilon : 1e-3 * rho0;
    std::vector<Eigen::Index> orders;
    if (cfg.n) orders.push_back(*cfg.n);
    else if (!cfg.escalate) orders.push_back(2 * m);
    else orders = {2 * m, 4 * m, 8 * m};
    const int rounds = !cfg.escalate ? 0 : cfg.n ? 6 : 3;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        double eps = eps0;
        for (int round = 0; round <= rounds; ++round, eps *= 10.0) {
            const auto set = detail::build_set(cfg, m, gamma_free, rho0, orders[i], eps, false);
            auto rep = design_with_set(sys, set, cfg.solver, cfg.verify_grid);
            const bool last = i + 1 == orders.size() && round == rounds;
            if (rep.certified() || last) return finish(set, cfg.solver, std::move(rep));
            history.insert(history.end(), rep.attempts.begin(), rep.attempts.end());
        }
    }
    throw NumericError("design: empty toeplitz schedule");
}

inline DesignReport design_controller(const SampledSignal& u, const SampledSignal& y, const DesignConfig& cfg) {
    return design_from_regressor(regressor_from_data(u, y, cfg), cfg);
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchVariant {
    PassivityMethod method = PassivityMethod::posreal;
    double size_ratio = 1.0;  // n / m or M / m
    [[nodiscard]] std::string name() const {
        std::string s = to_string(method);
        if (method != PassivityMethod::kyp) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%s=%gm", method == PassivityMethod::toeplitz ? "n" : "M", size_ratio);
            s += std::string("(") + buf + ")";
        }
        return s;
    }
};

struct BenchRow {
    std::string variant;
    Eigen::Index m = 0;
    double median_seconds = 0.0;
    double assembly_seconds = 0.0;
    int iterations = 0;
    double objective = 0.0;
    double margin = 0.0;
    std::string status;
    std::string error;
};

/// Time single solves (no schedules) of each variant on the same data.
/// epsilon defaults to 1e-3 rho0. Failures are recorded in the row, never thrown.
inline BenchRow bench_one(const RegressorSystem& sys, const BenchVariant& v, int repeats, std::optional<double> epsilon_opt,
                          const SolverOptions& opts, std::optional<double> rho0_opt = std::nullopt, double rho = 1.0) {
    BenchRow row;
    row.variant = v.name();
    row.m = static_cast<Eigen::Index>(sys.m);
    try {
        const auto m = static_cast<Eigen::Index>(sys.m);
        const Eigen::VectorXd x_ls = unconstrained_least_squares(sys);
        const double rho0 = rho0_opt ? *rho0_opt : detail::default_rho0(x_ls, m);
        const double epsilon = epsilon_opt ? *epsilon_opt : 1e-3 * rho0;
        const auto size = std::max<Eigen::Index>(v.method == PassivityMethod::toeplitz ? m : 2,
                                                 static_cast<Eigen::Index>(std::llround(v.size_ratio * static_cast<double>(m))));
        const auto t0 = std::chrono::steady_clock::now();
        PassivityConstraintSet set;
        switch (v.method) {
            case PassivityMethod::kyp: set = kyp_constraints(m, sys.gamma.is_free()); break;
            case PassivityMethod::toeplitz: set = finite_toeplitz_constraints(m, size, epsilon, rho0, rho, sys.gamma.is_free()); break;
            case PassivityMethod::posreal: set = posreal_constraints(m, size, rho0, rho, epsilon, sys.gamma.is_free()); break;
        }
        const ConstrainedLSProblem pr = make_problem(sys, set);
        row.assembly_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::vector<double> times;
        Solution sol;
        for (int r = 0; r < std::max(1, repeats); ++r) {
            sol = solve(pr, opts);
            times.push_back(sol.solve_seconds);
        }
        std::sort(times.begin(), times.end());
        row.median_seconds = times[times.size() / 2];
        row.iterations = sol.iterations;
        row.objective = sol.objective;
        row.margin = passivity_margin(std::span<const double>(sol.x.data(), static_cast<std::size_t>(m)));
        row.status = to_string(sol.status);
    } catch (const std::exception& e) {
        row.status = "error";
        row.error = e.what();
    }
    return row;
}

}  // namespace ifir
