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

// ifir: design, verify, simulate and benchmark passive iFIR controllers.
//
// Exit codes: 0 success / certified, 2 input error, 3 solver did not
// converge, 4 certification failed.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ifir/ifir.hpp"

namespace {

using namespace ifir;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitUncertified = 4;

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path);
    f << text;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// tf:<num>/<den>, continuous coefficients in descending powers of s
StateSpace parse_tf_plant(const std::string& spec) {
    const std::string body = spec.substr(3);
    const auto slash = body.find('/');
    if (slash == std::string::npos) throw InputError("plant '" + spec + "': expected tf:<num>/<den>");
    const auto num = parse_list(body.substr(0, slash), "plant numerator");
    const auto den = parse_list(body.substr(slash + 1), "plant denominator");
    return tf_to_ss(num, den);
}

LoopPlant make_plant(const std::string& spec, double ts) {
    if (spec == "two-cart") return c2d_zoh(two_cart_linear(), ts);
    if (spec == "two-cart-nl") {
        TwoCartParams p;
        p.spring.piecewise = true;
        return two_cart_nonlinear(p);
    }
    if (starts_with(spec, "tf:")) return c2d_zoh(parse_tf_plant(spec), ts);
    throw InputError("unknown plant '" + spec + "' (two-cart, two-cart-nl, tf:<num>/<den>)");
}

SampledSignal open_loop(const LoopPlant& plant, const SampledSignal& u) {
    if (const auto* ss = std::get_if<StateSpace>(&plant)) return simulate_lti(*ss, u);
    return simulate_nonlinear(std::get<NonlinearPlant>(plant), u);
}

// pid:kp,kd,ki or pid-swapped:kp,kd,ki, otherwise a controller file
LoopController load_controller(const std::string& spec, double ts) {
    for (const bool swapped : {false, true}) {
        const std::string prefix = swapped ? "pid-swapped:" : "pid:";
        if (!starts_with(spec, prefix)) continue;
        const auto k = parse_list(spec.substr(prefix.size()), "PID gains");
        if (k.size() != 3) throw InputError("PID gains: expected kp,kd,ki");
        return pid_controller(k[0], k[1], k[2], ts, swapped);
    }
    return read_controller(spec);
}

double controller_ts(const LoopController& c) {
    return std::visit([](const auto& x) { return x.ts; }, c);
}

SampledSignal read_reference(const std::string& spec, std::size_t horizon, double ts) {
    if (spec == "step") {
        if (horizon == 0) throw InputError("--horizon is required with --ref step");
        return {std::vector<double>(horizon, 1.0), ts};
    }
    if (!starts_with(spec, "csv:")) throw InputError("--ref must be step or csv:<path>");
    const std::string path = spec.substr(4);
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || (line != "t,r" && line != "t,r\r")) throw InputError(path + ": expected header 't,r'");
    std::vector<double> t, r;
    for (std::size_t lineno = 2; std::getline(f, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw InputError(path + " line " + std::to_string(lineno) + ": expected t,r");
        t.push_back(parse_double(line.substr(0, comma), path));
        r.push_back(parse_double(line.substr(comma + 1), path));
    }
    if (r.empty()) throw InputError(path + ": no samples");
    if (t.size() > 1) {
        const double step = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
        if (std::abs(step - ts) > 1e-9 * ts) throw InputError(path + ": sampling period differs from the controller's");
    }
    if (horizon > 0) {
        if (horizon > r.size()) throw InputError(path + ": shorter than --horizon");
        r.resize(horizon);
    }
    return {std::move(r), ts};
}

std::string design_report(const DesignReport& rep) {
    std::ostringstream os;
    const auto& s = rep.solution;
    os << "method            " << to_string(rep.method) << '\n';
    os << "m                 " << rep.controller.g.size() << '\n';
    if (rep.method == PassivityMethod::toeplitz) os << "n                 " << rep.toeplitz_n << '\n';
    if (rep.method == PassivityMethod::posreal) os << "M                 " << rep.grid << '\n';
    if (rep.method != PassivityMethod::kyp) {
        os << "epsilon           " << fmt("%.6g", rep.epsilon) << '\n';
        os << "rho0              " << fmt("%.6g", rep.rho0) << '\n';
        os << "rho               " << fmt("%.6g", rep.rho) << '\n';
    }
    os << "status            " << to_string(s.status) << '\n';
    os << "objective         " << fmt("%.10g", s.objective) << '\n';
    os << "ls objective      " << fmt("%.10g", rep.unconstrained_objective) << '\n';
    os << "primal residual   " << fmt("%.3e", s.primal_residual) << " (tol " << fmt("%.3e", s.primal_tolerance) << ")\n";
    os << "dual residual     " << fmt("%.3e", s.dual_residual) << " (tol " << fmt("%.3e", s.dual_tolerance) << ")\n";
    os << "iterations        " << s.iterations << '\n';
    os << "solve seconds     " << fmt("%.3f", s.solve_seconds) << '\n';
    os << "assembly seconds  " << fmt("%.3f", rep.assembly_seconds) << '\n';
    os << "unknowns          " << rep.unknowns << '\n';
    os << "linear rows       " << rep.linear_count << '\n';
    os << "psd blocks        " << rep.psd_count << " (total size " << rep.psd_total_size << ")\n";
    os << "max lin violation " << fmt("%.3e", rep.check.max_linear_violation) << '\n';
    if (rep.psd_count > 0) os << "min psd eigenval  " << fmt("%.3e", rep.check.min_psd_eigenvalue) << '\n';
    os << "constraint check  " << (rep.check.pass ? "pass" : "FAIL") << '\n';
    for (const auto& f : rep.check.failures()) os << "  violated: " << f << '\n';
    os << "gamma             " << fmt("%.10g", rep.controller.gamma) << '\n';
    os << "passivity margin  " << fmt("%.6e", rep.margin) << '\n';
    for (const auto& [n, e] : rep.toeplitz_min_eigs) os << "toeplitz eig n=" << n << "  " << fmt("%.6e", e) << '\n';
    if (rep.attempts.size() > 1) {
        os << "attempts:\n";
        for (const auto& a : rep.attempts)
            os << "  size " << a.size << "  eps " << fmt("%.3g", a.epsilon) << "  " << to_string(a.status) << "  margin "
               << fmt("%.3e", a.margin) << "  it " << a.iterations << "  " << fmt("%.2f", a.seconds) << " s\n";
    }
    os << "certified         " << (rep.accepted() ? "yes" : "no") << '\n';
    return os.str();
}

int cmd_design(const std::string& data_path, const std::string& config_path, const std::string& out_path,
               const std::string& report_path) {
    const IOData data = read_data_csv(data_path);
    const DesignConfig cfg = read_config(config_path);
    const DesignReport rep = design_controller(data.u, data.y, cfg);
    const std::string text = design_report(rep);
    std::cout << text;
    write_controller(out_path, rep.controller);
    if (!report_path.empty()) write_text(report_path, text);
    if (!rep.converged()) return kExitNoConvergence;
    return rep.accepted() ? kExitOk : kExitUncertified;
}

int cmd_verify(const std::string& path, std::size_t grid) {
    const IFIRController c = read_controller(path);
    if (grid < 1000) throw InputError("--grid must be at least 1000");
    const double margin = passivity_margin(c.g, grid);
    const auto m = static_cast<Eigen::Index>(c.g.size());
    const bool gamma_ok = c.gamma >= 0.0;
    const bool ok = gamma_ok && margin >= kPassiveMarginThreshold;
    std::printf("gamma             %.10g (%s)\n", c.gamma, gamma_ok ? "ok" : "NEGATIVE");
    std::printf("passivity margin  %.6e on %zu points\n", margin, grid);
    for (Eigen::Index n : {m, 2 * m, 4 * m}) std::printf("toeplitz eig n=%ld  %.6e\n", static_cast<long>(n), toeplitz_min_eig(c.g, n));
    std::printf("certified         %s\n", ok ? "yes" : "no");
    return ok ? kExitOk : kExitUncertified;
}

struct SimulateArgs {
    std::string plant, controller, ref = "step", out;
    std::size_t horizon = 0;
    double ts = 0.05;
    std::optional<double> model_t;
    double model_zeta = 1.0;
};

int cmd_simulate(const SimulateArgs& a) {
    const LoopController c = load_controller(a.controller, a.ts);
    const double ts = controller_ts(c);
    const SampledSignal r = read_reference(a.ref, a.horizon, ts);
    const LoopTrace tr = closed_loop_sim(make_plant(a.plant, ts), c, r);
    std::ostringstream os;
    os << "t,r,u,y\n";
    for (std::size_t k = 0; k < r.size(); ++k)
        os << format_double(static_cast<double>(k) * ts) << ',' << format_double(r[k]) << ',' << format_double(tr.u[k]) << ','
           << format_double(tr.y[k]) << '\n';
    if (!a.out.empty()) write_text(a.out, os.str());
    double peak = 0.0;
    for (double y : tr.y.values()) peak = std::max(peak, std::abs(y));
    std::printf("samples           %zu\n", r.size());
    std::printf("peak |y|          %.6g\n", peak);
    std::printf("final y           %.10g\n", tr.y.values().back());
    if (a.model_t) {
        const SampledSignal yref = simulate_lti(c2d_zoh(reference_model(*a.model_t, a.model_zeta), ts), r);
        std::printf("rms(y - M_r r)    %.10g\n", rms(tr.y.view(), yref.view()));
    }
    return kExitOk;
}

int cmd_probe(const std::string& plant_spec, std::size_t samples, double ts, const std::string& out) {
    const SampledSignal u = two_cart_probe(samples, ts);
    const SampledSignal y = open_loop(make_plant(plant_spec, ts), u);
    std::ostringstream os;
    write_data_csv(os, u, y);
    write_text(out, os.str());
    return kExitOk;
}

// Fitting data for a controller target 1/(0.5 s + 1)^q: y holds the filtered-step input e, u the target's output.
int cmd_target(int q, std::size_t samples, double ts, const std::string& out) {
    const SampledSignal e = filtered_step(samples, ts);
    const SampledSignal u = simulate_lti(c2d_foh(target_filter(q), ts), e);
    std::ostringstream os;
    write_data_csv(os, u, e);
    write_text(out, os.str());
    return kExitOk;
}

std::vector<PassivityMethod> parse_methods(const std::vector<std::string>& names) {
    std::vector<PassivityMethod> out;
    for (const auto& n : names) {
        if (n == "all") {
            out.insert(out.end(), {PassivityMethod::kyp, PassivityMethod::toeplitz, PassivityMethod::posreal});
        } else {
            out.push_back(parse_method(n));
        }
    }
    return out;
}

int cmd_bench(const std::vector<int>& orders, const std::vector<std::string>& methods, const std::string& data_path,
              const std::string& config_path, int repeat, std::optional<double> epsilon, double size_ratio, const std::string& csv_path) {
    if (repeat < 1) throw InputError("--repeat must be at least 1");
    const IOData data = read_data_csv(data_path);
    DesignConfig cfg = config_path.empty() ? DesignConfig{} : read_config(config_path);
    const auto meths = parse_methods(methods);
    std::vector<BenchRow> rows;
    for (int m : orders) {
        if (m < 2) throw InputError("--orders entries must be at least 2");
        cfg.m = m;
        const RegressorSystem sys = regressor_from_data(data.u, data.y, cfg);
        for (auto meth : meths) {
            rows.push_back(bench_one(sys, {meth, size_ratio}, repeat, epsilon ? epsilon : cfg.epsilon, cfg.solver, cfg.rho0, cfg.rho));
            const auto& r = rows.back();
            std::fprintf(stderr, "%s m=%ld: %.3f s\n", r.variant.c_str(), static_cast<long>(r.m), r.median_seconds);
        }
    }
    std::printf("%-16s %6s %12s %12s %8s %14s %13s  %s\n", "method", "m", "median_s", "assembly_s", "iters", "objective", "margin",
                "status");
    std::ostringstream csv;
    csv << "method,m,median_seconds,assembly_seconds,iterations,objective,margin,status,error\n";
    for (const auto& r : rows) {
        std::printf("%-16s %6ld %12.4f %12.4f %8d %14.6e %13.4e  %s%s%s\n", r.variant.c_str(), static_cast<long>(r.m), r.median_seconds,
                    r.assembly_seconds, r.iterations, r.objective, r.margin, r.status.c_str(), r.error.empty() ? "" : ": ",
                    r.error.c_str());
        csv << r.variant << ',' << r.m << ',' << format_double(r.median_seconds) << ',' << format_double(r.assembly_seconds) << ','
            << r.iterations << ',' << format_double(r.objective) << ',' << format_double(r.margin) << ',' << r.status << ",\""
            << r.error << "\"\n";
    }
    if (!csv_path.empty()) write_text(csv_path, csv.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Passive iFIR controller design"};
    app.require_subcommand(1);

    std::string data, config, out, report, controller;
    std::size_t grid = 100000;

    auto* design = app.add_subcommand("design", "Fit a passive iFIR controller to data");
    design->add_option("--data", data, "CSV with header t,u,y")->required();
    design->add_option("--config", config, "key=value design configuration")->required();
    design->add_option("--out", out, "controller file to write")->required();
    design->add_option("--report", report, "also write the report here");

    auto* verify = app.add_subcommand("verify", "Check passivity of a controller file");
    verify->add_option("--controller", controller, "controller file")->required();
    verify->add_option("--grid", grid, "frequency grid size");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Closed-loop simulation");
    simulate->add_option("--plant", sim.plant, "two-cart, two-cart-nl or tf:<num>/<den>")->required();
    simulate->add_option("--controller", sim.controller, "controller file, pid:kp,kd,ki or pid-swapped:kp,kd,ki")->required();
    simulate->add_option("--ref", sim.ref, "step or csv:<path> with header t,r");
    simulate->add_option("--horizon", sim.horizon, "number of samples");
    simulate->add_option("--out", sim.out, "trajectory CSV (t,r,u,y)");
    simulate->add_option("--ts", sim.ts, "sampling period for PID controllers");
    simulate->add_option("--model-T", sim.model_t, "reference model time constant; prints RMS tracking error");
    simulate->add_option("--model-zeta", sim.model_zeta, "reference model damping");

    std::string plant = "two-cart";
    std::size_t samples = 2001;
    double ts = 0.05;
    auto* probe = app.add_subcommand("probe", "Open-loop multisine experiment, written as t,u,y");
    probe->add_option("--plant", plant, "two-cart, two-cart-nl or tf:<num>/<den>");
    probe->add_option("--samples", samples, "number of samples");
    probe->add_option("--ts", ts, "sampling period");
    probe->add_option("--out", out, "data CSV")->required();

    int q = 1;
    std::size_t target_samples = 400;
    auto* target = app.add_subcommand("target", "Fitting data for the target 1/(0.5s+1)^q (use fit=direct)");
    target->add_option("--q", q, "target order");
    target->add_option("--samples", target_samples, "number of samples");
    target->add_option("--ts", ts, "sampling period");
    target->add_option("--out", out, "data CSV")->required();

    std::vector<int> orders;
    std::vector<std::string> methods{"all"};
    int repeat = 3;
    std::optional<double> bench_eps;
    double size_ratio = 1.0;
    std::string csv;
    auto* bench = app.add_subcommand("bench", "Median solve time per method and order");
    bench->add_option("--orders", orders, "FIR orders")->required()->delimiter(',');
    bench->add_option("--methods", methods, "kyp, toeplitz, posreal or all")->delimiter(',');
    bench->add_option("--data", data, "CSV with header t,u,y")->required();
    bench->add_option("--config", config, "design configuration (fit mode, gamma, reference, solver)");
    bench->add_option("--repeat", repeat, "solves per cell");
    bench->add_option("--epsilon", bench_eps, "constraint margin (default 1e-3 rho0)");
    bench->add_option("--size-ratio", size_ratio, "toeplitz n / m and posreal M / m");
    bench->add_option("--csv", csv, "also write the table as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*design) return cmd_design(data, config, out, report);
        if (*verify) return cmd_verify(controller, grid);
        if (*simulate) return cmd_simulate(sim);
        if (*probe) return cmd_probe(plant, samples, ts, out);
        if (*target) return cmd_target(q, target_samples, ts, out);
        if (*bench) return cmd_bench(orders, methods, data, config, repeat, bench_eps, size_ratio, csv);
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNoConvergence;
    }
    return kExitInput;
}
