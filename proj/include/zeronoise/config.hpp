/*
   Copyright 2026 The zeronoise Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <zeronoise/experiments.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

namespace zeronoise {

/// Parse failure of an experiment config (unknown key, malformed value,
/// missing mandatory entry).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat sectioned key = value experiment description.
///
///     [problem]
///     tag = peano_alpha
///     alpha = 0.5
///
/// Lists are comma separated. `#` starts a comment. mc.seed is mandatory.
struct ExperimentConfig {
    std::string id = "run";
    std::string problem = "constant_heat";
    double alpha = 0.5;
    bool waive = false;
    std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    Vector window_lo{-1.0};
    Vector window_hi{1.0};
    double h = 0.01;
    double T = 1.0;
    double t_max = 0.75;
    BoundaryCondition boundary = BoundaryCondition::frozen_dirichlet;
    std::size_t slices = 20;
    std::size_t N = 100000;
    std::size_t N_tightness = 10000;
    std::size_t tightness_pairs = 20;
    double dt_mc = 1e-3;
    std::uint64_t seed = 0;
    std::string payoff = "tanh";
    std::vector<std::string> fdd{"tanh", "tanh", "tanh"};
    std::vector<double> delta{0.2, 0.1, 0.05};
    std::string output_dir = "zeronoise_out";
    std::vector<std::string> formats{"json", "csv", "md"};
    double memory_budget_gib = 2.0;
    unsigned workers = 0;
    std::string probe_source = "fd";

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto res = std::from_chars(v.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(out)) {
        throw ConfigError(key + ": not a finite number: '" + v + "'");
    }
    return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto res = std::from_chars(v.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end) {
        throw ConfigError(key + ": not a nonnegative integer: '" + v + "'");
    }
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "yes" || v == "1") {
        return true;
    }
    if (v == "false" || v == "no" || v == "0") {
        return false;
    }
    throw ConfigError(key + ": not a boolean: '" + v + "'");
}

inline std::vector<double> parse_doubles(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    for (const auto& s : split_list(v)) {
        out.push_back(parse_double(key, s));
    }
    if (out.empty()) {
        throw ConfigError(key + ": empty list");
    }
    return out;
}

inline std::string join(const std::vector<std::string>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + v[i];
    }
    return out;
}

inline std::string join(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + format_double(v[i]);
    }
    return out;
}

} // namespace detail

inline ExperimentConfig parse_config(const std::string& text)
{
    using namespace detail;
    ExperimentConfig c;
    bool have_seed = false;
    std::string section;
    std::set<std::string> seen;
    std::stringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(where + "malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + "expected key = value");
        }
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string v = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) {
            throw ConfigError(where + "duplicate key " + key);
        }
        try {
            if (key == "experiment.id") {
                if (v.empty() || v.find_first_of(",/\\ ") != std::string::npos) {
                    throw ConfigError(key + ": must be a nonempty word");
                }
                c.id = v;
            } else if (key == "problem.tag") {
                c.problem = v;
            } else if (key == "problem.alpha") {
                c.alpha = parse_double(key, v);
            } else if (key == "problem.waive") {
                c.waive = parse_bool(key, v);
            } else if (key == "perturbation.eps") {
                c.eps = parse_doubles(key, v);
            } else if (key == "grid.window_lo") {
                c.window_lo = parse_doubles(key, v);
            } else if (key == "grid.window_hi") {
                c.window_hi = parse_doubles(key, v);
            } else if (key == "grid.h") {
                c.h = parse_double(key, v);
            } else if (key == "grid.T") {
                c.T = parse_double(key, v);
            } else if (key == "grid.t_max") {
                c.t_max = parse_double(key, v);
            } else if (key == "grid.boundary") {
                c.boundary = boundary_from_string(v);
            } else if (key == "grid.slices") {
                c.slices = parse_uint(key, v);
            } else if (key == "mc.N") {
                c.N = parse_uint(key, v);
            } else if (key == "mc.N_tightness") {
                c.N_tightness = parse_uint(key, v);
            } else if (key == "mc.tightness_pairs") {
                c.tightness_pairs = parse_uint(key, v);
            } else if (key == "mc.dt") {
                c.dt_mc = parse_double(key, v);
            } else if (key == "mc.seed") {
                c.seed = parse_uint(key, v);
                have_seed = true;
            } else if (key == "payoffs.payoff") {
                c.payoff = v;
            } else if (key == "payoffs.fdd") {
                c.fdd = split_list(v);
            } else if (key == "semilimits.delta") {
                c.delta = parse_doubles(key, v);
            } else if (key == "output.dir") {
                c.output_dir = v;
            } else if (key == "output.formats") {
                c.formats = split_list(v);
                for (const auto& f : c.formats) {
                    if (f != "json" && f != "csv" && f != "md") {
                        throw ConfigError(key + ": unknown format '" + f + "'");
                    }
                }
            } else if (key == "output.memory_budget_gib") {
                c.memory_budget_gib = parse_double(key, v);
            } else if (key == "output.workers") {
                c.workers = static_cast<unsigned>(parse_uint(key, v));
            } else if (key == "output.probe_source") {
                if (v != "fd" && v != "mc") {
                    throw ConfigError(key + ": expected fd or mc");
                }
                c.probe_source = v;
            } else {
                throw ConfigError("unknown key " + key);
            }
        } catch (const DomainError& e) {
            throw ConfigError(where + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    if (!have_seed) {
        throw ConfigError("mc.seed is mandatory");
    }
    if (c.window_lo.size() != c.window_hi.size()) {
        throw ConfigError("grid.window_lo and grid.window_hi differ in length");
    }
    return c;
}

/// Canonical text form; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c)
{
    using detail::join;
    std::string s;
    s += "[experiment]\nid = " + c.id + "\n\n";
    s += "[problem]\ntag = " + c.problem + "\nalpha = " + format_double(c.alpha) +
         "\nwaive = " + (c.waive ? "true" : "false") + "\n\n";
    s += "[perturbation]\neps = " + join(c.eps) + "\n\n";
    s += "[grid]\nwindow_lo = " + join(c.window_lo) + "\nwindow_hi = " + join(c.window_hi) + "\nh = " +
         format_double(c.h) + "\nT = " + format_double(c.T) + "\nt_max = " + format_double(c.t_max) +
         "\nboundary = " + to_string(c.boundary) + "\nslices = " + std::to_string(c.slices) + "\n\n";
    s += "[mc]\nN = " + std::to_string(c.N) + "\nN_tightness = " + std::to_string(c.N_tightness) +
         "\ntightness_pairs = " + std::to_string(c.tightness_pairs) + "\ndt = " + format_double(c.dt_mc) +
         "\nseed = " + std::to_string(c.seed) + "\n\n";
    s += "[payoffs]\npayoff = " + c.payoff + "\nfdd = " + join(c.fdd) + "\n\n";
    s += "[semilimits]\ndelta = " + join(c.delta) + "\n\n";
    s += "[output]\ndir = " + c.output_dir + "\nformats = " + join(c.formats) +
         "\nmemory_budget_gib = " + format_double(c.memory_budget_gib) + "\nworkers = " + std::to_string(c.workers) +
         "\nprobe_source = " + c.probe_source + "\n";
    return s;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Resolves the catalog problem and applies the config waiver.
inline Problem problem_from_config(const ExperimentConfig& c)
{
    Problem p = make_problem(c.problem, c.alpha);
    if (c.waive) {
        p.waived = true;
    }
    return p;
}

inline SelectionSettings settings_from_config(const ExperimentConfig& c)
{
    SelectionSettings s;
    s.experiment_id = c.id;
    s.eps_list = c.eps;
    s.window = Box{c.window_lo, c.window_hi};
    s.T = c.T;
    s.t_max = c.t_max;
    s.h = c.h;
    s.boundary = c.boundary;
    s.slices = c.slices;
    s.payoff = c.payoff;
    s.fdd_payoffs = c.fdd;
    s.delta_list = c.delta;
    s.N = c.N;
    s.N_tightness = c.N_tightness;
    s.tightness_pairs = c.tightness_pairs;
    s.dt_mc = c.dt_mc;
    s.seed = c.seed;
    s.workers = c.workers == 0 ? default_workers() : c.workers;
    s.probes_from_mc = c.probe_source == "mc";
    return s;
}

/// Checks that every tag in the config resolves; throws DomainError otherwise.
inline void resolve_tags(const ExperimentConfig& c)
{
    (void)make_problem(c.problem, c.alpha);
    (void)make_payoff(c.payoff);
    for (const auto& t : c.fdd) {
        (void)make_payoff(t);
    }
}

/// Output directory: relative paths are placed under $ZERONOISE_OUTPUT_ROOT when set.
inline std::filesystem::path output_directory(const ExperimentConfig& c)
{
    std::filesystem::path p(c.output_dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv("ZERONOISE_OUTPUT_ROOT"); root && *root) {
            return std::filesystem::path(root) / p;
        }
    }
    return p;
}

/// Writes `content` to a sibling temp file and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << content;
        out.flush();
        if (!out) {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace zeronoise
