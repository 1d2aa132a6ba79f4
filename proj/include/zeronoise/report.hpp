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

#include <zeronoise/config.hpp>
#include <zeronoise/experiments.hpp>

#include <json.hpp>

namespace zeronoise {

using ordered_json = nlohmann::ordered_json;

/// CSV table name -> documented columns. Every row of the selection tables
/// carries its provenance (seed, grid spacing or MC step, sample count).
inline ordered_json csv_schema()
{
    ordered_json s;
    s["estimates.csv"] = {{"experiment_id", "run identifier"},
                          {"eps", "noise level"},
                          {"x", "start point, components separated by ';'"},
                          {"t", "elapsed time"},
                          {"value", "Monte Carlo estimate"},
                          {"std_error", "sample standard deviation / sqrt(N)"},
                          {"N", "number of paths"}};
    s["cauchy.csv"] = {{"experiment_id", "run identifier"},
                       {"eps_i", "row noise level"},
                       {"eps_j", "column noise level"},
                       {"sup_diff", "sup over window x [0, t_max] of |u^eps_i - u^eps_j|"},
                       {"h", "grid spacing"},
                       {"dt", "grid time step"}};
    s["probes.csv"] = {{"experiment_id", "run identifier"},
                       {"x", "probe point"},
                       {"t", "probe time"},
                       {"value", "selected limit value"},
                       {"uncertainty", "last Cauchy increment (fd) or MC standard error (mc)"},
                       {"extrapolated", "first-order-in-eps extrapolation (heuristic)"},
                       {"source", "fd or mc"},
                       {"h", "grid spacing"},
                       {"dt", "grid time step"},
                       {"seed", "MC seed"}};
    s["feller.csv"] = {{"experiment_id", "run identifier"},
                       {"eps", "noise level"},
                       {"t", "probe time"},
                       {"global_modulus", "max |u(x+h)-u(x)| over adjacent window nodes"},
                       {"local_slope", "max |u(x+h)-u(x)|/h within five cells of the degenerate point"},
                       {"jump", "|u(x*+h)-u(x*-h)|"},
                       {"h", "grid spacing"},
                       {"dt", "grid time step"}};
    s["jumps.csv"] = {{"experiment_id", "run identifier"},
                      {"t", "probe time"},
                      {"jump", "jump of the selected limit across the degenerate point"},
                      {"x_low", "lower extremal ODE solution"},
                      {"x_high", "upper extremal ODE solution"},
                      {"threshold", "0.5 |f(x_high) - f(x_low)|"},
                      {"baseline", "elliptic reference jump on the same stencil"},
                      {"flagged", "1 when the jump rule fires"},
                      {"h", "grid spacing"}};
    s["tightness.csv"] = {{"experiment_id", "run identifier"},
                          {"eps", "noise level"},
                          {"s", "earlier time"},
                          {"t", "later time"},
                          {"lhs", "sample mean of |X_t - X_s|^4"},
                          {"lhs_std_error", "standard error of lhs"},
                          {"bound", "8 K^4 |t-s|^4 + 24 K^4 |t-s|^2"},
                          {"pass", "1 when lhs <= bound (1 + 5 relative std errors)"},
                          {"N", "number of paths"},
                          {"dt", "Euler step"},
                          {"seed", "ensemble seed"}};
    s["modulus.csv"] = {{"experiment_id", "run identifier"},
                        {"eps", "noise level"},
                        {"delta", "time window"},
                        {"q50", "median pathwise modulus"},
                        {"q90", "90% quantile"},
                        {"q99", "99% quantile"},
                        {"N", "number of paths"},
                        {"dt", "Euler step"},
                        {"seed", "ensemble seed"}};
    s["crosscheck.csv"] = {{"experiment_id", "run identifier"},
                           {"eps", "noise level"},
                           {"x", "probe point"},
                           {"t", "time"},
                           {"mc", "Monte Carlo estimate"},
                           {"mc_std_error", "its standard error"},
                           {"fd", "finite-difference value at the nearest node"},
                           {"abs_diff", "|mc - fd|"},
                           {"tolerance", "3 std errors + 0.02"},
                           {"pass", "1 when abs_diff <= tolerance"},
                           {"N", "number of paths"},
                           {"dt_mc", "Euler step"},
                           {"h", "grid spacing"},
                           {"seed", "MC seed"}};
    s["fdd.csv"] = {{"experiment_id", "run identifier"},
                    {"eps", "noise level"},
                    {"times", "t1;t2;t3"},
                    {"value", "estimate of E[f1(X_t1) f2(X_t2) f3(X_t3)]"},
                    {"std_error", "standard error"},
                    {"N", "number of paths"},
                    {"dt", "Euler step"},
                    {"seed", "MC seed"}};
    s["semilimits.csv"] = {{"experiment_id", "run identifier"},
                           {"delta", "relaxation radius"},
                           {"gap", "sup over window of u* - u_*"},
                           {"eps_used", "number of sweep entries with eps < delta"},
                           {"h", "grid spacing"},
                           {"dt_saved", "spacing of saved time slices"}};
    s["probe_lines.csv"] = {{"eps", "noise level"}, {"t", "time"}, {"x", "node"}, {"value", "u^eps(x,t)"}};
    return s;
}

namespace detail {

inline std::string csv_line(std::initializer_list<std::string> cells)
{
    std::string out;
    bool first = true;
    for (const auto& c : cells) {
        if (!first) {
            out.push_back(',');
        }
        out += c;
        first = false;
    }
    out.push_back('\n');
    return out;
}

inline std::string header_of(const ordered_json& schema, const std::string& table)
{
    std::string out;
    for (const auto& [k, v] : schema.at(table).items()) {
        out += (out.empty() ? "" : ",") + k;
    }
    return out + "\n";
}

inline std::string fmt(double v) { return format_double(v); }
inline std::string fmt(std::size_t v) { return std::to_string(v); }
inline std::string fmt_bool(bool b) { return b ? "1" : "0"; }

} // namespace detail

/// The selection report's CSV tables, keyed by file name.
inline std::map<std::string, std::string> selection_csv(const SelectionReport& r)
{
    using detail::csv_line;
    using detail::fmt;
    const auto schema = csv_schema();
    const auto& id = r.experiment_id;
    const auto& s = r.settings;
    const std::string h = fmt(r.grid.h);
    const std::string dt = fmt(r.grid.dt);
    const std::string seed = std::to_string(s.seed);
    std::map<std::string, std::string> t;
    for (const auto& name : {"estimates.csv", "cauchy.csv", "probes.csv", "feller.csv", "jumps.csv", "tightness.csv",
                             "modulus.csv", "crosscheck.csv", "fdd.csv", "semilimits.csv"}) {
        t[name] = detail::header_of(schema, name);
    }
    for (const auto& c : r.crosscheck) {
        t["estimates.csv"] += to_csv(EstimateRow{id, c.eps, c.x, c.t, c.mc}) + "\n";
    }
    for (std::size_t i = 0; i < r.sweep.size(); ++i) {
        for (std::size_t j = i + 1; j < r.sweep.size(); ++j) {
            t["cauchy.csv"] += csv_line({id, fmt(r.sweep.eps[i]), fmt(r.sweep.eps[j]), fmt(r.sweep.cauchy[i][j]), h, dt});
        }
    }
    for (const auto& p : r.probes) {
        t["probes.csv"] += csv_line({id, format_vector(p.x), fmt(p.t), fmt(p.value), fmt(p.uncertainty),
                                     fmt(p.extrapolated), r.probe_source, h, dt, seed});
    }
    for (const auto& f : r.feller) {
        t["feller.csv"] += csv_line({id, fmt(f.eps), fmt(f.t), fmt(f.global_modulus), fmt(f.local_slope), fmt(f.jump), h, dt});
    }
    for (const auto& j : r.jumps) {
        t["jumps.csv"] += csv_line({id, fmt(j.t), fmt(j.jump), fmt(j.extremal_low), fmt(j.extremal_high),
                                    fmt(j.extremal_threshold), fmt(j.baseline), detail::fmt_bool(j.flagged), h});
    }
    for (std::size_t k = 0; k < r.tightness.size(); ++k) {
        const auto& x = r.tightness[k];
        std::size_t e = 0;
        while (s.eps_list[e] != x.eps) {
            ++e;
        }
        t["tightness.csv"] += csv_line({id, fmt(x.eps), fmt(x.s), fmt(x.t), fmt(x.check.lhs), fmt(x.check.lhs_std_error),
                                        fmt(x.check.bound), detail::fmt_bool(x.check.pass), fmt(s.N_tightness),
                                        fmt(s.dt_mc), std::to_string(s.seed + e)});
    }
    for (std::size_t e = 0; e < r.modulus.size(); ++e) {
        const auto& m = r.modulus[e];
        t["modulus.csv"] += csv_line({id, fmt(m.eps), fmt(m.q.delta), fmt(m.q.q50), fmt(m.q.q90), fmt(m.q.q99),
                                      fmt(s.N_tightness), fmt(s.dt_mc), std::to_string(s.seed + e)});
    }
    for (const auto& c : r.crosscheck) {
        t["crosscheck.csv"] += csv_line({id, fmt(c.eps), format_vector(c.x), fmt(c.t), fmt(c.mc.value), fmt(c.mc.std_error),
                                         fmt(c.fd), fmt(std::abs(c.mc.value - c.fd)), fmt(c.tolerance),
                                         detail::fmt_bool(c.pass), fmt(c.mc.num_samples), fmt(s.dt_mc), h,
                                         std::to_string(c.mc.seed)});
    }
    for (const auto& f : r.fdd) {
        t["fdd.csv"] += csv_line({id, fmt(f.eps), format_vector(f.times), fmt(f.estimate.value), fmt(f.estimate.std_error),
                                  fmt(f.estimate.num_samples), fmt(s.dt_mc), std::to_string(f.estimate.seed)});
    }
    for (const auto& l : r.semilimit_levels) {
        t["semilimits.csv"] += csv_line({id, fmt(l.delta), fmt(l.gap), fmt(l.eps_used), h, fmt(r.grid.saved_dt())});
    }
    return t;
}

inline ordered_json selection_json(const SelectionReport& r)
{
    ordered_json j;
    j["experiment_id"] = r.experiment_id;
    j["problem_tag"] = r.problem_tag;
    j["seed"] = r.settings.seed;
    j["N"] = r.settings.N;
    j["N_tightness"] = r.settings.N_tightness;
    j["dt_mc"] = r.settings.dt_mc;
    j["payoff"] = r.settings.payoff;
    j["sweep"] = sweep_json(r.sweep);
    ordered_json probes = ordered_json::array();
    for (const auto& p : r.probes) {
        probes.push_back({{"x", p.x}, {"t", p.t}, {"value", p.value}, {"uncertainty", p.uncertainty},
                          {"extrapolated", p.extrapolated}});
    }
    j["probe_source"] = r.probe_source;
    j["probes"] = probes;
    ordered_json semi = ordered_json::array();
    for (const auto& l : r.semilimit_levels) {
        semi.push_back({{"delta", l.delta}, {"gap", l.gap}, {"eps_used", l.eps_used}});
    }
    j["semilimits"] = semi;
    ordered_json jumps = ordered_json::array();
    for (const auto& x : r.jumps) {
        jumps.push_back({{"t", x.t}, {"jump", x.jump}, {"x_low", x.extremal_low}, {"x_high", x.extremal_high},
                         {"threshold", x.extremal_threshold}, {"baseline", x.baseline}, {"flagged", x.flagged}});
    }
    j["jumps"] = jumps;
    ordered_json cross = ordered_json::array();
    for (const auto& c : r.crosscheck) {
        cross.push_back({{"eps", c.eps}, {"x", c.x}, {"t", c.t}, {"mc", c.mc.value}, {"mc_std_error", c.mc.std_error},
                         {"fd", c.fd}, {"pass", c.pass}});
    }
    j["crosscheck"] = cross;
    ordered_json fdd = ordered_json::array();
    for (const auto& f : r.fdd) {
        fdd.push_back({{"eps", f.eps}, {"times", f.times}, {"value", f.estimate.value}, {"std_error", f.estimate.std_error}});
    }
    j["fdd"] = fdd;
    j["flags"] = r.flags;
    j["notes"] = r.notes;
    return j;
}

inline std::string selection_markdown(const SelectionReport& r)
{
    std::string md = "# Selection report: " + r.experiment_id + "\n\n";
    md += "Problem `" + r.problem_tag + "`, payoff `" + r.settings.payoff + "`, seed " + std::to_string(r.settings.seed) +
          ", N = " + std::to_string(r.settings.N) + ", grid h = " + format_double(r.grid.h) +
          ", dt = " + format_double(r.grid.dt) + ".\n\n## Flags\n\n| flag | value |\n|---|---|\n";
    for (const auto& [k, v] : r.flags) {
        md += "| " + k + " | " + (v ? "yes" : "no") + " |\n";
    }
    md += "\n## Cauchy table\n\n| eps |";
    for (double e : r.sweep.eps) {
        md += " " + format_double(e) + " |";
    }
    md += "\n|---|";
    for (std::size_t i = 0; i < r.sweep.size(); ++i) {
        md += "---|";
    }
    md += "\n";
    for (std::size_t i = 0; i < r.sweep.size(); ++i) {
        md += "| " + format_double(r.sweep.eps[i]) + " |";
        for (std::size_t j = 0; j < r.sweep.size(); ++j) {
            md += " " + format_double(r.sweep.cauchy[i][j]) + " |";
        }
        md += "\n";
    }
    md += "\nError bar of the selected limit: " + format_double(r.sweep.error_bar()) + ".\n";
    if (!r.jumps.empty()) {
        md += "\n## Jump across the degenerate point\n\n| t | jump | threshold | baseline | flagged |\n|---|---|---|---|---|\n";
        for (const auto& j : r.jumps) {
            md += "| " + format_double(j.t) + " | " + format_double(j.jump) + " | " + format_double(j.extremal_threshold) +
                  " | " + format_double(j.baseline) + " | " + (j.flagged ? "yes" : "no") + " |\n";
        }
    }
    md += "\n## Probe values (" + r.probe_source + ")\n\n| x | t | value | uncertainty |\n|---|---|---|---|\n";
    for (const auto& p : r.probes) {
        md += "| " + format_vector(p.x) + " | " + format_double(p.t) + " | " + format_double(p.value) + " | " +
              format_double(p.uncertainty) + " |\n";
    }
    if (!r.notes.empty()) {
        md += "\n## Notes\n\n";
        for (const auto& n : r.notes) {
            md += "- " + n + "\n";
        }
    }
    return md;
}

/// Writes the selected formats plus the CSV schema into `dir`, atomically per file.
inline void write_selection(const SelectionReport& r, const std::filesystem::path& dir, const std::vector<std::string>& formats)
{
    auto want = [&](const std::string& f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };
    if (want("json")) {
        write_atomic(dir / "report.json", selection_json(r).dump(2) + "\n");
    }
    if (want("csv")) {
        for (const auto& [name, content] : selection_csv(r)) {
            write_atomic(dir / name, content);
        }
        write_atomic(dir / "csv_schema.json", csv_schema().dump(2) + "\n");
    }
    if (want("md")) {
        write_atomic(dir / "summary.md", selection_markdown(r));
    }
}

inline ordered_json check_json(const Problem& p, const ProblemCheck& c)
{
    ordered_json j;
    j["problem_tag"] = p.tag;
    j["pass"] = c.pass;
    j["failures"] = c.failures;
    j["waived"] = c.waived;
    j["notes"] = c.notes;
    j["exponents"] = {{"pass", c.exponents.pass},
                      {"slack_1", c.exponents.slack_1},
                      {"slack_2", c.exponents.slack_2},
                      {"boundary_case", c.exponents.boundary_case}};
    ordered_json reps = ordered_json::array();
    for (const auto& r : c.reports) {
        reps.push_back({{"check", r.check}, {"pass", r.pass}, {"metrics", r.metrics}, {"series", r.series}, {"notes", r.notes}});
    }
    j["reports"] = reps;
    return j;
}

} // namespace zeronoise
