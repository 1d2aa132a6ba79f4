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

#include <zeronoise/coeffs.hpp>
#include <zeronoise/kolmogorov_fd.hpp>
#include <zeronoise/mc_engine.hpp>
#include <zeronoise/viscosity_lab.hpp>

#include <json.hpp>

#include <numbers>
#include <numeric>
#include <set>
#include <tuple>

namespace zeronoise {

// ---------------------------------------------------------------------------
// Payoffs

/// Built-in payoff by tag: tanh, gauss, sin, cos, one, zero, atan,
/// indicator_pos, half_tanh. All read the first coordinate except gauss.
inline Payoff make_payoff(const std::string& tag)
{
    using X = std::span<const double>;
    if (tag == "tanh") {
        return {tag, [](X x) { return std::tanh(x[0]); }, 1.0};
    }
    if (tag == "gauss") {
        return {tag, [](X x) {
                    double s = 0.0;
                    for (double v : x) {
                        s += v * v;
                    }
                    return std::exp(-s);
                },
                1.0};
    }
    if (tag == "sin") {
        return {tag, [](X x) { return std::sin(x[0]); }, 1.0};
    }
    if (tag == "cos") {
        return {tag, [](X x) { return std::cos(x[0]); }, 1.0};
    }
    if (tag == "one") {
        return {tag, [](X) { return 1.0; }, 1.0};
    }
    if (tag == "zero") {
        return {tag, [](X) { return 0.0; }, 0.0};
    }
    if (tag == "atan") {
        return {tag, [](X x) { return 2.0 / std::numbers::pi * std::atan(x[0]); }, 1.0};
    }
    if (tag == "indicator_pos") {
        return {tag, [](X x) { return x[0] > 0.0 ? 1.0 : 0.0; }, 1.0};
    }
    if (tag == "half_tanh") {
        return {tag, [](X x) { return 0.5 * std::tanh(x[0]); }, 0.5};
    }
    throw DomainError("unknown payoff tag '" + tag + "'");
}

inline std::vector<std::string> payoff_tags()
{
    return {"tanh", "gauss", "sin", "cos", "one", "zero", "atan", "indicator_pos", "half_tanh"};
}

inline Payoff constant_payoff(double c)
{
    return {"const(" + format_double(c) + ")", [c](std::span<const double>) { return c; }, std::abs(c)};
}

/// Five payoff pairs with f1 <= f2 pointwise.
inline std::vector<std::pair<Payoff, Payoff>> ordered_payoff_pairs()
{
    using X = std::span<const double>;
    std::vector<std::pair<Payoff, Payoff>> p;
    p.emplace_back(Payoff{"tanh-1", [](X x) { return std::tanh(x[0]) - 1.0; }, 2.0}, make_payoff("tanh"));
    p.emplace_back(Payoff{"half_gauss", [](X x) { return 0.5 * std::exp(-x[0] * x[0]); }, 0.5}, make_payoff("gauss"));
    p.emplace_back(constant_payoff(-1.0), make_payoff("sin"));
    p.emplace_back(Payoff{"min(tanh,cos)", [](X x) { return std::min(std::tanh(x[0]), std::cos(x[0])); }, 1.0},
                   Payoff{"max(tanh,cos)", [](X x) { return std::max(std::tanh(x[0]), std::cos(x[0])); }, 1.0});
    p.emplace_back(make_payoff("tanh"), Payoff{"tanh(x+0.5)", [](X x) { return std::tanh(x[0] + 0.5); }, 1.0});
    return p;
}

// ---------------------------------------------------------------------------
// Problem catalog

/// A catalog entry. `waiver` names the assumption checks this problem is
/// allowed to fail; it only takes effect when `waived` is set.
struct Problem {
    std::string tag;
    CoefficientField field;
    PerturbationFamily family;
    InitialLaw init_law;
    std::vector<Payoff> payoffs;
    std::string notes;
    std::vector<std::string> check_notes;
    std::set<std::string> waiver;
    bool waived = false;
    bool allow_exponent_boundary = false;
    Box check_box;
};

namespace detail {

inline Problem make_problem(std::string tag, CoefficientField field, std::string notes)
{
    Problem p;
    p.tag = std::move(tag);
    p.field = field.with_tag(p.tag);
    p.family = PerturbationFamily::additive_isotropic(p.field);
    p.init_law = Dirac{Vector(field.dim_state(), 0.0)};
    p.payoffs = {make_payoff("tanh"), make_payoff("gauss"), make_payoff("sin")};
    p.notes = std::move(notes);
    p.check_box = Box::interval(-1.0, 1.0);
    return p;
}

} // namespace detail

inline std::vector<std::string> catalog_tags()
{
    return {"constant_heat", "peano_alpha", "cubic", "signed_sqrt"};
}

/// Catalog lookup. `alpha` is used by peano_alpha only; `counterexample` is an
/// alias of signed_sqrt.
inline Problem make_problem(const std::string& tag, double alpha = 0.5)
{
    if (tag == "constant_heat") {
        return detail::make_problem(tag, builtin::constant_heat(),
                                    "b = 0, sigma = sqrt(2); uniformly elliptic reference problem");
    }
    if (tag == "peano_alpha") {
        auto p = detail::make_problem(tag, builtin::peano_alpha(alpha),
                                      "b = |x|^alpha (saturated at |x| = 1), sigma = 0, alpha = " + format_double(alpha) +
                                          "; ODE with non-unique solutions from 0");
        p.field = p.field.with_tag("peano_alpha(" + format_double(alpha) + ")");
        p.family = PerturbationFamily::additive_isotropic(p.field);
        p.tag = p.field.tag();
        p.waiver = {"degenerate_point"};
        p.waived = true;
        p.check_notes.push_back("sigma = 0 violates the lower diffusion bound at 0; waived because the example "
                                "list includes the Peano drift");
        return p;
    }
    if (tag == "cubic") {
        auto p = detail::make_problem(tag, builtin::cubic(),
                                      "b = 3 x^(1/3), sigma = 3 x^(2/3) (saturated at |x| = 1); multiple strong "
                                      "solutions from 0");
        p.allow_exponent_boundary = true;
        p.check_notes.push_back("boundary case 1 + alpha - 2 beta = 0; the special supersolution is handled through "
                                "the explicit coefficients");
        return p;
    }
    if (tag == "signed_sqrt" || tag == "counterexample") {
        auto p = detail::make_problem("signed_sqrt", builtin::signed_sqrt(),
                                      "b = sgn(x) |x|^(1/2) for |x| <= 1, saturated to +-1 beyond; sigma = 0; "
                                      "counterexample without a Feller selection");
        p.waiver = {"degenerate_point"};
        p.waived = false;
        return p;
    }
    throw DomainError("unknown problem tag '" + tag + "'");
}

/// Every catalog problem with the shipped parameters (peano alpha in {0.3, 0.5, 0.7}).
inline std::vector<Problem> full_catalog()
{
    return {make_problem("constant_heat"), make_problem("peano_alpha", 0.3), make_problem("peano_alpha", 0.5),
            make_problem("peano_alpha", 0.7),  make_problem("cubic"),        make_problem("signed_sqrt")};
}

// ---------------------------------------------------------------------------
// Assumption checks for a problem

struct ProblemCheck {
    std::vector<CheckReport> reports;
    ExponentCheck exponents;
    std::vector<std::string> notes;
    std::vector<std::string> failures;  ///< unwaived failures
    std::vector<std::string> waived;
    bool pass = false;
};

inline ProblemCheck check_problem(const Problem& p, const std::vector<double>& eps_list, std::uint64_t seed,
                                  std::size_t num_pairs = 20000)
{
    ProblemCheck out;
    out.notes = p.check_notes;
    auto record = [&](const std::string& name, bool ok) {
        if (ok) {
            return;
        }
        if (p.waived && p.waiver.count(name)) {
            out.waived.push_back(name);
        } else {
            out.failures.push_back(name);
        }
    };
    auto holder = check_holder(p.field, p.check_box, num_pairs, seed);
    record("holder", holder.pass);
    out.reports.push_back(std::move(holder));
    for (const auto& dp : p.field.degenerate_points()) {
        auto r = check_degenerate_point(p.field, dp.point, dp.radius, 5000, seed);
        record("degenerate_point", r.pass);
        out.reports.push_back(std::move(r));
    }
    out.exponents = check_exponents(p.field.holder().alpha, p.field.holder().beta);
    const bool boundary_ok = p.allow_exponent_boundary && out.exponents.boundary_case && out.exponents.slack_1 >= 0.0 &&
                             out.exponents.slack_2 >= 0.0;
    record("exponents", out.exponents.pass || boundary_ok);
    if (!eps_list.empty()) {
        const double tol = 1.01 * std::sqrt(static_cast<double>(p.field.dim_state())) * eps_list.back();
        auto r = verify_perturbation_assumption(p.family, eps_list, p.check_box, tol);
        record("perturbation", r.pass);
        out.reports.push_back(std::move(r));
    }
    out.pass = out.failures.empty();
    return out;
}

// ---------------------------------------------------------------------------
// Extremal ODE solutions

/// Extremal solutions x-(t) <= x+(t) of xdot = b(x) from the 1-d degenerate
/// point x*. A side whose drift points back toward x* keeps x* as extremal.
inline std::pair<double, double> extremal_solutions(const CoefficientField& field, double x_star, double t,
                                                    double kick = 1e-12, std::size_t steps = 20000)
{
    require(field.dim_state() == 1, "extremal_solutions: one-dimensional fields only");
    auto b = [&](double x) {
        const double xs[1] = {x};
        double out[1];
        field.drift_into(xs, out);
        return out[0];
    };
    auto integrate = [&](double x) {
        const double dt = t / static_cast<double>(steps);
        for (std::size_t k = 0; k < steps; ++k) {
            const double k1 = b(x);
            const double k2 = b(x + 0.5 * dt * k1);
            const double k3 = b(x + 0.5 * dt * k2);
            const double k4 = b(x + dt * k3);
            x += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        }
        return x;
    };
    const double up = b(x_star + kick) > 0.0 ? integrate(x_star + kick) : x_star;
    const double down = b(x_star - kick) < 0.0 ? integrate(x_star - kick) : x_star;
    return {down, up};
}

// ---------------------------------------------------------------------------
// Feller diagnostics

struct FellerRow {
    double eps = 0.0;
    double t = 0.0;
    double global_modulus = 0.0;  ///< max |u(x+h) - u(x)| over adjacent window nodes
    double local_slope = 0.0;     ///< max |u(x+h) - u(x)| / h within 5 cells of x*
    double jump = 0.0;            ///< |u(x*+h) - u(x*-h)|
};

struct JumpRow {
    double t = 0.0;
    double jump = 0.0;
    double extremal_low = 0.0;
    double extremal_high = 0.0;
    double extremal_threshold = 0.0;  ///< 0.5 |f(x+) - f(x-)|
    double baseline = 0.0;            ///< heat-problem jump on the same stencil
    bool flagged = false;
};

/// Jump is flagged when it exceeds half the gap between f at the extremal ODE
/// solutions and three times the elliptic baseline, and the extremal solutions
/// actually split.
inline constexpr double jump_baseline_factor = 3.0;

inline FellerRow feller_row(const LatticeFunction& u, std::size_t slice, const std::vector<std::size_t>& window_nodes,
                            std::optional<double> x_star)
{
    const GridSpec& g = u.grid();
    FellerRow r;
    r.eps = u.eps();
    r.t = u.times()[slice];
    const std::size_t n0 = g.axis_nodes(0);
    for (std::size_t i : window_nodes) {
        const auto k = g.multi_index(i);
        if (k[0] + 1 < n0 && std::find(window_nodes.begin(), window_nodes.end(), i + 1) != window_nodes.end()) {
            r.global_modulus = std::max(r.global_modulus, std::abs(u.at(i + 1, slice) - u.at(i, slice)));
        }
    }
    if (x_star && g.dim() == 1) {
        const Vector xs{*x_star};
        const std::size_t c = g.nearest_node(xs);
        if (c >= 1 && c + 1 < n0) {
            r.jump = std::abs(u.at(c + 1, slice) - u.at(c - 1, slice));
        }
        const std::size_t lo = c >= 5 ? c - 5 : 0;
        const std::size_t hi = std::min(n0 - 1, c + 5);
        for (std::size_t i = lo; i < hi; ++i) {
            r.local_slope = std::max(r.local_slope, std::abs(u.at(i + 1, slice) - u.at(i, slice)) / g.h);
        }
    }
    return r;
}

/// Jump of the heat problem across 0 at the given stencil (h, eps, times).
inline std::vector<double> heat_baseline_jumps(const Payoff& f, double h, double T, double eps,
                                               const std::vector<double>& times, std::size_t slices)
{
    const Problem heat = make_problem("constant_heat");
    const Box window = Box::interval(-1.0, 1.0);
    const Box box = box_for_window(heat.family, window, T, eps, h);
    const CoefficientField fe = heat.family.perturb(eps);
    const GridSpec g = make_grid(box, h, T, {fe}, BoundaryCondition::frozen_dirichlet, slices);
    const auto u = solve(fe, f, g, eps);
    std::vector<double> out;
    const auto nodes = detail::nodes_in(g, window);
    for (double t : times) {
        out.push_back(feller_row(u, u.slice_index(t), nodes, 0.0).jump);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Selection run

struct SelectionSettings {
    std::string experiment_id = "run";
    std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};
    Box window = Box::interval(-1.0, 1.0);
    double T = 1.0;
    double t_max = 0.75;
    double h = 0.01;
    BoundaryCondition boundary = BoundaryCondition::frozen_dirichlet;
    std::size_t slices = 20;
    std::string payoff = "tanh";
    std::vector<std::string> fdd_payoffs{"tanh", "tanh", "tanh"};
    std::vector<double> delta_list{0.2, 0.1, 0.05};
    std::size_t N = 100000;
    std::size_t N_tightness = 10000;
    std::size_t tightness_pairs = 20;
    double dt_mc = 1e-3;
    std::uint64_t seed = 42;
    unsigned workers = default_workers();
    bool probes_from_mc = false;
};

/// Probe times {0.25, 0.5, 0.75} T.
inline std::vector<double> probe_times(double T) { return {0.25 * T, 0.5 * T, 0.75 * T}; }

/// Five probe points evenly spread over the window (along the diagonal in n-d).
inline std::vector<Vector> probe_points(const Box& window)
{
    std::vector<Vector> pts;
    for (std::size_t k = 0; k < 5; ++k) {
        Vector x(window.dim());
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = window.lo[i] + (window.hi[i] - window.lo[i]) * static_cast<double>(k) / 4.0;
        }
        pts.push_back(x);
    }
    return pts;
}

struct TightnessRow {
    double eps = 0.0;
    double s = 0.0;
    double t = 0.0;
    MomentCheck check;
};

struct ModulusRow {
    double eps = 0.0;
    ModulusQuantiles q;
};

struct CrossCheckRow {
    double eps = 0.0;
    Vector x;
    double t = 0.0;
    MCEstimate mc;
    double fd = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct FddRow {
    double eps = 0.0;
    std::vector<double> times;
    MCEstimate estimate;
};

struct ProbeValue {
    Vector x;
    double t = 0.0;
    double value = 0.0;
    double uncertainty = 0.0;
    double extrapolated = 0.0;
};

struct SelectionReport {
    std::string experiment_id;
    std::string problem_tag;
    SelectionSettings settings;
    GridSpec grid;
    SweepReport sweep;
    std::vector<SemilimitLevel> semilimit_levels;
    std::vector<ProbeValue> probes;
    std::string probe_source;
    std::vector<FellerRow> feller;
    std::vector<JumpRow> jumps;
    std::vector<TightnessRow> tightness;
    std::vector<ModulusRow> modulus;
    std::vector<CrossCheckRow> crosscheck;
    std::vector<FddRow> fdd;
    std::map<std::string, bool> flags;
    std::vector<std::string> notes;
};

/// Rough peak memory of run_selection in bytes, computed without allocating.
inline double selection_memory_bytes(const Problem& p, const SelectionSettings& s)
{
    const Box box = box_for_window(p.family, s.window, s.T, s.eps_list.front(), s.h);
    double nodes = 1.0;
    for (std::size_t i = 0; i < box.dim(); ++i) {
        nodes *= std::round((box.hi[i] - box.lo[i]) / s.h) + 1.0;
    }
    const double fd = nodes * 8.0 * (static_cast<double>(s.eps_list.size()) * static_cast<double>(s.slices + 1) + 12.0);
    const double mc = static_cast<double>(s.N_tightness) * (std::floor(s.T / s.dt_mc) + 1.0) *
                      static_cast<double>(p.field.dim_state()) * 8.0;
    const double est = static_cast<double>(s.N) * 8.0;
    return fd + mc + est;
}

inline SelectionReport run_selection(const Problem& problem, const SelectionSettings& s)
{
    auto context = [&](const std::string& stage, const std::exception& e) {
        return DomainError("run_selection(" + problem.tag + ") " + stage + ": " + e.what());
    };
    SelectionReport rep;
    rep.experiment_id = s.experiment_id;
    rep.problem_tag = problem.tag;
    rep.settings = s;
    const Payoff f = make_payoff(s.payoff);
    const auto times = probe_times(s.T);
    for (double t : times) {
        require(t <= s.t_max * (1.0 + 1e-12), "run_selection: probe time " + format_double(t) + " beyond window time");
    }
    const std::size_t n = problem.field.dim_state();
    require(s.window.dim() == n, "run_selection: window dimension mismatch");

    // step 1: tightness per eps
    try {
        const CounterRng pick(s.seed ^ 0x7469676874ull);
        const auto total = grid_steps(s.T, s.dt_mc, "tightness");
        for (std::size_t e = 0; e < s.eps_list.size(); ++e) {
            const double eps = s.eps_list[e];
            const auto ens = simulate(problem.family.perturb(eps), problem.init_law, s.T, s.dt_mc, s.N_tightness,
                                      s.seed + e, s.workers);
            for (std::size_t k = 0; k < s.tightness_pairs; ++k) {
                const auto u = pick.uniform_pair(e, static_cast<std::uint32_t>(k), 0);
                auto a = static_cast<std::size_t>(u[0] * static_cast<double>(total + 1));
                auto b = static_cast<std::size_t>(u[1] * static_cast<double>(total + 1));
                a = std::min(a, total);
                b = std::min(b, total);
                if (a > b) {
                    std::swap(a, b);
                }
                const double ts = s.dt_mc * static_cast<double>(a);
                const double tt = s.dt_mc * static_cast<double>(b);
                rep.tightness.push_back({eps, ts, tt, increment_moment_check(ens, ts, tt)});
            }
            const double delta = s.dt_mc * std::round(0.1 * s.T / s.dt_mc);
            rep.modulus.push_back({eps, modulus_diagnostic(ens, std::max(delta, s.dt_mc))});
        }
    } catch (const DomainError& e) {
        throw context("tightness", e);
    }

    // steps 2-3: eps sweep on a common grid
    try {
        const Box box = box_for_window(problem.family, s.window, s.T, s.eps_list.front(), s.h);
        rep.grid = make_sweep_grid(problem.family, s.eps_list, box, s.h, s.T, s.boundary, s.slices);
        rep.sweep = eps_sweep(problem.family, f, s.eps_list, rep.grid, SweepWindow{s.window, s.t_max}, s.workers);
        rep.semilimit_levels = semilimits(rep.sweep, s.delta_list).levels;
    } catch (const DomainError& e) {
        throw context("sweep", e);
    }

    // step 2-bar: Feller modulus and jump detection
    std::optional<double> x_star;
    if (n == 1 && !problem.field.degenerate_points().empty()) {
        x_star = problem.field.degenerate_points().front().point[0];
    }
    for (const auto& u : rep.sweep.solutions) {
        for (double t : times) {
            rep.feller.push_back(feller_row(u, u.slice_index(t), rep.sweep.window_nodes, x_star));
        }
    }
    if (x_star) {
        const auto base = heat_baseline_jumps(f, s.h, s.T, s.eps_list.back(), times, s.slices);
        const auto& ubar = rep.sweep.selected_limit();
        for (std::size_t k = 0; k < times.size(); ++k) {
            JumpRow j;
            j.t = times[k];
            j.jump = feller_row(ubar, ubar.slice_index(times[k]), rep.sweep.window_nodes, x_star).jump;
            std::tie(j.extremal_low, j.extremal_high) = extremal_solutions(problem.field, *x_star, times[k]);
            const Vector lo{j.extremal_low}, hi{j.extremal_high};
            j.extremal_threshold = 0.5 * std::abs(f(hi) - f(lo));
            j.baseline = base[k];
            j.flagged = j.extremal_high > j.extremal_low && j.jump > j.extremal_threshold &&
                        j.jump > jump_baseline_factor * j.baseline;
            rep.jumps.push_back(j);
        }
    }

    // Monte Carlo cross-check at the selected eps
    const double eps_sel = s.eps_list.back();
    try {
        const CoefficientField fe = problem.family.perturb(eps_sel);
        const auto& ubar = rep.sweep.selected_limit();
        const double t = 0.5 * s.T;
        const std::size_t k = ubar.slice_index(t);
        std::uint64_t stream = 0;
        for (const auto& x : probe_points(s.window)) {
            CrossCheckRow r;
            r.eps = eps_sel;
            r.x = x;
            r.t = t;
            r.mc = estimate_u(fe, f, x, t, s.dt_mc, s.N, s.seed + 1000 + stream++, s.workers);
            r.fd = ubar.at(rep.grid.nearest_node(x), k);
            r.tolerance = 3.0 * r.mc.std_error + 2e-2;
            r.pass = std::abs(r.mc.value - r.fd) <= r.tolerance;
            rep.crosscheck.push_back(r);
        }
    } catch (const DomainError& e) {
        throw context("crosscheck", e);
    }

    // fdd table, k = 3
    try {
        std::vector<Payoff> fs;
        for (const auto& tag : s.fdd_payoffs) {
            fs.push_back(make_payoff(tag));
        }
        for (double eps : s.eps_list) {
            rep.fdd.push_back({eps, times,
                               estimate_fdd(problem.family.perturb(eps), fs, times, problem.init_law, s.dt_mc, s.N,
                                            s.seed + 2000, s.workers)});
        }
    } catch (const DomainError& e) {
        throw context("fdd", e);
    }

    // selected limit at probes
    const auto& ubar = rep.sweep.selected_limit();
    const double err = rep.sweep.error_bar();
    rep.probe_source = s.probes_from_mc ? "mc" : "fd";
    for (double t : times) {
        const std::size_t k = ubar.slice_index(t);
        std::uint64_t stream = 0;
        for (const auto& x : probe_points(s.window)) {
            const std::size_t node = rep.grid.nearest_node(x);
            ProbeValue pv{x, t, ubar.at(node, k), err, rep.sweep.extrapolated(node, k)};
            if (s.probes_from_mc) {
                const auto m = estimate_u(problem.family.perturb(eps_sel), f, x, t, s.dt_mc, s.N,
                                          s.seed + 3000 + stream, s.workers);
                pv.value = m.value;
                pv.uncertainty = m.std_error;
            }
            ++stream;
            rep.probes.push_back(pv);
        }
    }

    // flags
    bool tight = true;
    for (const auto& r : rep.tightness) {
        tight = tight && r.check.pass;
    }
    bool cross = true;
    for (const auto& r : rep.crosscheck) {
        cross = cross && r.pass;
    }
    bool fdd_ok = true;
    for (std::size_t i = 1; i < rep.fdd.size(); ++i) {
        const auto& a = rep.fdd[i - 1].estimate;
        const auto& b = rep.fdd[i].estimate;
        if (i + 1 == rep.fdd.size()) {
            fdd_ok = std::abs(a.value - b.value) <= 3.0 * std::hypot(a.std_error, b.std_error);
        }
    }
    bool feller_violation = false;
    for (const auto& j : rep.jumps) {
        feller_violation = feller_violation || j.flagged;
    }
    double gmin = std::numeric_limits<double>::infinity(), gmax = 0.0;
    for (const auto& r : rep.feller) {
        gmin = std::min(gmin, r.global_modulus);
        gmax = std::max(gmax, r.global_modulus);
    }
    rep.flags["tightness_moment_bound"] = tight;
    rep.flags["cauchy_converging"] = rep.sweep.converging();
    rep.flags["cauchy_increments_decreasing"] = rep.sweep.increments_strictly_decreasing();
    rep.flags["cauchy_columns_decreasing"] = rep.sweep.columns_strictly_decreasing();
    rep.flags["feller_modulus_bounded"] = gmax <= 2.0 * gmin + s.h;
    rep.flags["feller_violation"] = feller_violation;
    rep.flags["mc_fd_crosscheck"] = cross;
    rep.flags["fdd_converging"] = fdd_ok;
    rep.notes.push_back("extrapolated probe values assume first-order behaviour in eps (heuristic)");
    if (!x_star) {
        rep.notes.push_back("no declared one-dimensional degenerate point: jump detection skipped");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Splitting probability

struct SplittingRow {
    double eps = 0.0;
    MCEstimate p;  ///< P(X_T > 0 | X_0 = 0)
};

struct SplittingTable {
    std::vector<SplittingRow> rows;
    bool odd_symmetric = false;
    bool symmetric_within_3se = true;  ///< every row within 3 std errors of 1/2
};

inline bool odd_symmetric_drift(const CoefficientField& field, std::size_t samples = 257)
{
    if (field.dim_state() != 1) {
        return false;
    }
    for (double x : linspace(0.0, 4.0, samples)) {
        const double a = field.drift(Vector{x})[0];
        const double b = field.drift(Vector{-x})[0];
        const double sa = field.diffusion(Vector{x}).frobenius_norm();
        const double sb = field.diffusion(Vector{-x}).frobenius_norm();
        if (a != -b || sa != sb) {
            return false;
        }
    }
    return true;
}

inline SplittingTable splitting_probability(const Problem& problem, const std::vector<double>& eps_list, double T,
                                            double dt, std::size_t N, std::uint64_t seed,
                                            unsigned workers = default_workers())
{
    require(problem.field.dim_state() == 1, "splitting_probability: one-dimensional problems only");
    const Payoff ind = make_payoff("indicator_pos");
    SplittingTable tab;
    tab.odd_symmetric = odd_symmetric_drift(problem.field);
    for (double eps : eps_list) {
        SplittingRow r{eps, estimate_u(problem.family.perturb(eps), ind, Vector{0.0}, T, dt, N, seed, workers)};
        tab.symmetric_within_3se = tab.symmetric_within_3se && std::abs(r.p.value - 0.5) <= 3.0 * r.p.std_error;
        tab.rows.push_back(r);
    }
    return tab;
}

// ---------------------------------------------------------------------------
// fdd convergence

struct FddConvergence {
    std::vector<FddRow> rows;
    std::vector<double> differences;  ///< |E_i - E_{i-1}|
    std::vector<double> bands;        ///< 3 sqrt(se_i^2 + se_{i-1}^2)
    bool converged = false;           ///< last difference inside its band
};

inline FddConvergence fdd_convergence(const Problem& problem, const std::vector<Payoff>& payoffs,
                                      const std::vector<double>& times, const std::vector<double>& eps_list, double dt,
                                      std::size_t N, std::uint64_t seed, unsigned workers = default_workers())
{
    require(payoffs.size() == 3 && times.size() == 3, "fdd_convergence: needs exactly three payoffs and times");
    require(eps_list.size() >= 2, "fdd_convergence: needs at least two eps values");
    FddConvergence out;
    for (double eps : eps_list) {
        out.rows.push_back(
            {eps, times, estimate_fdd(problem.family.perturb(eps), payoffs, times, problem.init_law, dt, N, seed, workers)});
    }
    for (std::size_t i = 1; i < out.rows.size(); ++i) {
        const auto& a = out.rows[i - 1].estimate;
        const auto& b = out.rows[i].estimate;
        out.differences.push_back(std::abs(a.value - b.value));
        out.bands.push_back(3.0 * std::hypot(a.std_error, b.std_error));
    }
    out.converged = out.differences.back() <= out.bands.back();
    return out;
}

// ---------------------------------------------------------------------------
// Density extension

struct DensityExtension {
    std::vector<double> data_gap;        ///< sup over the window of |f_n - f|
    std::vector<double> increments;      ///< sup over window x [0,T] of |P f_n - P f_{n-1}|
    double limit_gap = 0.0;              ///< sup over window x [0,T] of |P f_N - P f|
    double slack = 0.0;                  ///< sup over the whole grid of |f_N - f|
    bool pass = false;
};

/// Solves with each f_n and with f itself. Refuses unless f_n -> f on the
/// window is measured: the data gap must be nonincreasing and its last value
/// at most max(1e-12, half the first). Passes when P f_n is Cauchy on the
/// window (nonincreasing increments) and the last P f_n is within the maximum
/// principle bound of P f.
inline DensityExtension density_extension_check(const Problem& problem, const Payoff& f,
                                                const std::vector<Payoff>& approx, double eps, const GridSpec& grid,
                                                const Box& window)
{
    require(approx.size() >= 2, "density_extension_check: need at least two approximants");
    const auto nodes = detail::nodes_in(grid, window);
    require(!nodes.empty(), "density_extension_check: window contains no nodes");
    const Vector f0 = sample_payoff(f, grid);
    DensityExtension out;
    std::vector<Vector> samples;
    for (const auto& fn : approx) {
        samples.push_back(sample_payoff(fn, grid));
        double gap = 0.0;
        for (std::size_t i : nodes) {
            gap = std::max(gap, std::abs(samples.back()[i] - f0[i]));
        }
        out.data_gap.push_back(gap);
    }
    for (std::size_t k = 1; k < out.data_gap.size(); ++k) {
        require(out.data_gap[k] <= out.data_gap[k - 1] + 1e-15, "density_extension_check: approximants do not converge on the window");
    }
    require(out.data_gap.back() <= std::max(1e-12, 0.5 * out.data_gap.front()),
            "density_extension_check: approximants do not converge on the window");

    const CoefficientField fe = problem.family.perturb(eps);
    const auto uf = solve(fe, f, grid, eps);
    std::vector<LatticeFunction> us;
    for (const auto& fn : approx) {
        us.push_back(solve(fe, fn, grid, eps));
    }
    std::vector<std::size_t> all_slices(uf.slice_count());
    std::iota(all_slices.begin(), all_slices.end(), std::size_t{0});
    for (std::size_t k = 1; k < us.size(); ++k) {
        out.increments.push_back(detail::sup_diff(us[k], us[k - 1], nodes, all_slices));
    }
    out.limit_gap = detail::sup_diff(us.back(), uf, nodes, all_slices);
    for (std::size_t i = 0; i < f0.size(); ++i) {
        out.slack = std::max(out.slack, std::abs(samples.back()[i] - f0[i]));
    }
    bool cauchy = true;
    for (std::size_t k = 1; k < out.increments.size(); ++k) {
        cauchy = cauchy && out.increments[k] <= out.increments[k - 1] + 1e-14;
    }
    out.pass = cauchy && out.limit_gap <= out.slack + 1e-12;
    return out;
}

} // namespace zeronoise
