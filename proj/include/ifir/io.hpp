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

// File formats: the `t,u,y` data CSV, the `ifir-v1` controller file and the
// flat key=value design configuration.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ifir/controller.hpp"
#include "ifir/design.hpp"
#include "ifir/errors.hpp"
#include "ifir/lti.hpp"

namespace ifir {

namespace io_detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

inline std::string where(const std::string& ctx, std::size_t line) { return ctx + " line " + std::to_string(line); }

}  // namespace io_detail

/// Whole-token numeric parse; anything left over is an error.
inline double parse_double(std::string_view s, const std::string& what) {
    s = io_detail::trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        throw InputError(what + ": expected a finite number, got '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s, const std::string& what) {
    s = io_detail::trim(s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw InputError(what + ": expected an integer, got '" + std::string(s) + "'");
    return v;
}

inline std::vector<double> parse_list(std::string_view s, const std::string& what) {
    std::vector<double> out;
    for (auto tok : io_detail::split(s, ',')) out.push_back(parse_double(tok, what));
    return out;
}

/// %.17g, which is enough digits for every double to survive a text round trip.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Data CSV

struct IOData {
    SampledSignal u;
    SampledSignal y;
    std::vector<double> t;
    [[nodiscard]] double ts() const { return u.ts(); }
};

inline IOData read_data_csv(std::istream& in, const std::string& name = "data") {
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    std::vector<double> t, u, y;
    while (std::getline(in, line)) {
        ++lineno;
        const auto sv = io_detail::trim(line);
        if (sv.empty()) continue;
        if (!header) {
            if (sv != "t,u,y") throw InputError(io_detail::where(name, lineno) + ": expected header 't,u,y'");
            header = true;
            continue;
        }
        const auto cols = io_detail::split(sv, ',');
        if (cols.size() != 3) throw InputError(io_detail::where(name, lineno) + ": expected 3 columns");
        const auto ctx = io_detail::where(name, lineno);
        t.push_back(parse_double(cols[0], ctx));
        u.push_back(parse_double(cols[1], ctx));
        y.push_back(parse_double(cols[2], ctx));
    }
    if (!header) throw InputError(name + ": empty file");
    if (t.size() < 2) throw InputError(name + ": need at least two samples to define the sampling period");
    // the first step rather than the mean, so grids written as k * ts read back exactly
    const double ts = t[1] - t[0];
    if (!(ts > 0.0)) throw InputError(name + ": time column must increase");
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (std::abs((t[k] - t[k - 1]) - ts) > 1e-9 * ts)
            throw InputError(io_detail::where(name, k + 2) + ": non-uniform time grid");
    }
    return {SampledSignal(std::move(u), ts), SampledSignal(std::move(y), ts), std::move(t)};
}

inline IOData read_data_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path);
    return read_data_csv(f, path);
}

inline void write_data_csv(std::ostream& out, const SampledSignal& u, const SampledSignal& y) {
    require(u.size() == y.size(), "write_data_csv: u and y differ in length");
    require(same_period(u.ts(), y.ts()), "write_data_csv: u and y have different sampling periods");
    out << "t,u,y\n";
    for (std::size_t k = 0; k < u.size(); ++k)
        out << format_double(static_cast<double>(k) * u.ts()) << ',' << format_double(u[k]) << ',' << format_double(y[k]) << '\n';
}

// ---------------------------------------------------------------------------
// Controller file

inline constexpr std::string_view kControllerMagic = "ifir-v1";

inline void write_controller(std::ostream& out, const IFIRController& c) {
    c.validate();
    out << kControllerMagic << '\n';
    out << "ts=" << format_double(c.ts) << '\n';
    out << "gamma=" << format_double(c.gamma) << '\n';
    out << "m=" << c.g.size() << '\n';
    for (std::size_t k = 0; k < c.g.size(); ++k) out << 'g' << k << '=' << format_double(c.g[k]) << '\n';
}

inline std::string controller_to_string(const IFIRController& c) {
    std::ostringstream os;
    write_controller(os, c);
    return os.str();
}

inline IFIRController read_controller(std::istream& in, const std::string& name = "controller") {
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && io_detail::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw InputError(name + ": empty file");
    if (lines[0] != kControllerMagic) throw InputError(name + ": first line must be 'ifir-v1'");

    auto field = [&](std::size_t i, std::string_view key) -> std::string_view {
        if (i >= lines.size()) throw InputError(name + ": missing '" + std::string(key) + "' line");
        std::string_view sv = lines[i];
        const auto eq = sv.find('=');
        if (eq == std::string_view::npos || sv.substr(0, eq) != key)
            throw InputError(io_detail::where(name, i + 1) + ": expected '" + std::string(key) + "=<value>'");
        return sv.substr(eq + 1);
    };

    IFIRController c;
    c.ts = parse_double(field(1, "ts"), io_detail::where(name, 2));
    c.gamma = parse_double(field(2, "gamma"), io_detail::where(name, 3));
    const auto m = parse_int(field(3, "m"), io_detail::where(name, 4));
    if (m < 1) throw InputError(name + ": m must be at least 1");
    if (lines.size() != static_cast<std::size_t>(m) + 4)
        throw InputError(name + ": expected " + std::to_string(m) + " coefficient lines, found " + std::to_string(lines.size() - 4));
    for (long long k = 0; k < m; ++k) {
        const auto i = static_cast<std::size_t>(k) + 4;
        c.g.push_back(parse_double(field(i, "g" + std::to_string(k)), io_detail::where(name, i + 1)));
    }
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw InputError(name + ": " + e.what());
    }
    return c;
}

inline IFIRController read_controller(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path);
    return read_controller(f, path);
}

inline void write_controller(const std::string& path, const IFIRController& c) {
    const std::string text = controller_to_string(c);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path);
    f << text;
}

// ---------------------------------------------------------------------------
// Design configuration

/// Recognised keys, in the order they are documented.
inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "method", "m",  "n",    "M",        "rho0", "rho", "epsilon", "gamma", "ts", "fit", "ref_num", "ref_den", "discretization",
        "escalate", "abs_tol", "rel_tol", "max_iters", "seed", "verify_grid"};
    return keys;
}

inline PassivityMethod parse_method(std::string_view s) {
    if (s == "kyp") return PassivityMethod::kyp;
    if (s == "toeplitz") return PassivityMethod::toeplitz;
    if (s == "posreal") return PassivityMethod::posreal;
    throw InputError("unknown method '" + std::string(s) + "' (kyp, toeplitz, posreal)");
}

inline bool parse_bool(std::string_view s, const std::string& what) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw InputError(what + ": expected true or false, got '" + std::string(s) + "'");
}

/// Blank lines and lines starting with '#' are ignored; unknown or repeated keys are errors.
inline DesignConfig read_config(std::istream& in, const std::string& name = "config") {
    std::map<std::string, std::pair<std::string, std::size_t>> kv;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        const auto sv = io_detail::trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        const auto eq = sv.find('=');
        if (eq == std::string_view::npos) throw InputError(io_detail::where(name, lineno) + ": expected key=value");
        const std::string key(io_detail::trim(sv.substr(0, eq)));
        const auto& known = config_keys();
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw InputError(io_detail::where(name, lineno) + ": unknown key '" + key + "'");
        if (kv.count(key)) throw InputError(io_detail::where(name, lineno) + ": repeated key '" + key + "'");
        kv[key] = {std::string(io_detail::trim(sv.substr(eq + 1))), lineno};
    }

    DesignConfig cfg;
    auto ctx = [&](const std::string& key) { return io_detail::where(name, kv.at(key).second) + " (" + key + ")"; };
    auto get = [&](const std::string& key) -> const std::string* { return kv.count(key) ? &kv.at(key).first : nullptr; };
    auto positive_index = [&](const std::string& key) {
        const auto v = parse_int(*get(key), ctx(key));
        if (v < 1) throw InputError(ctx(key) + ": must be at least 1");
        return static_cast<Eigen::Index>(v);
    };

    if (auto v = get("method")) cfg.method = parse_method(*v);
    if (get("m")) cfg.m = positive_index("m");
    if (get("n")) cfg.n = positive_index("n");
    if (get("M")) cfg.grid = positive_index("M");
    if (get("rho0")) cfg.rho0 = parse_double(*get("rho0"), ctx("rho0"));
    if (get("rho")) cfg.rho = parse_double(*get("rho"), ctx("rho"));
    if (auto v = get("epsilon"); v && *v != "auto") cfg.epsilon = parse_double(*v, ctx("epsilon"));
    if (auto v = get("gamma"); v && *v != "free") cfg.gamma = GammaMode::fixed_to(parse_double(*v, ctx("gamma")));
    if (get("ts")) cfg.ts = parse_double(*get("ts"), ctx("ts"));
    if (auto v = get("fit")) {
        if (*v == "vrft") cfg.fit = FitMode::vrft;
        else if (*v == "direct") cfg.fit = FitMode::direct;
        else throw InputError(ctx("fit") + ": expected vrft or direct");
    }
    if (get("ref_num")) cfg.reference.num = parse_list(*get("ref_num"), ctx("ref_num"));
    if (get("ref_den")) cfg.reference.den = parse_list(*get("ref_den"), ctx("ref_den"));
    if (auto v = get("discretization"); v && *v != "zoh") throw InputError(ctx("discretization") + ": only zoh is supported");
    if (get("escalate")) cfg.escalate = parse_bool(*get("escalate"), ctx("escalate"));
    if (get("abs_tol")) cfg.solver.abs_tol = parse_double(*get("abs_tol"), ctx("abs_tol"));
    if (get("rel_tol")) cfg.solver.rel_tol = parse_double(*get("rel_tol"), ctx("rel_tol"));
    if (get("max_iters")) cfg.solver.max_iters = static_cast<int>(positive_index("max_iters"));
    if (get("seed")) cfg.solver.seed = static_cast<std::uint64_t>(parse_int(*get("seed"), ctx("seed")));
    if (get("verify_grid")) cfg.verify_grid = static_cast<std::size_t>(positive_index("verify_grid"));

    if (cfg.rho0) require(*cfg.rho0 > 0.0, ctx("rho0") + ": must be positive");
    require(cfg.rho > 0.0 && cfg.rho <= 1.0, "config: rho must lie in (0, 1]");
    if (cfg.epsilon) require(*cfg.epsilon >= 0.0, ctx("epsilon") + ": must be non-negative");
    if (cfg.n) require(*cfg.n >= cfg.m, ctx("n") + ": toeplitz order must be at least m");
    if (cfg.grid) require(*cfg.grid >= 2, ctx("M") + ": posreal grid needs at least 2 intervals");
    require(!cfg.reference.den.empty() && cfg.reference.den.front() != 0.0, "config: ref_den needs a nonzero leading coefficient");
    require(cfg.reference.num.size() <= cfg.reference.den.size(), "config: reference model must be proper");
    require(cfg.solver.abs_tol > 0.0 && cfg.solver.rel_tol >= 0.0, "config: tolerances must be positive");
    return cfg;
}

inline DesignConfig read_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path);
    return read_config(f, path);
}

}  // namespace ifir
