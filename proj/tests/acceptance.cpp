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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <zeronoise/report.hpp>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sys/wait.h>
#include <unistd.h>

using namespace zeronoise;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::pair<std::vector<double>, std::vector<double>> gauss_hermite_normal(int count)
{
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(count, count);
    for (int k = 1; k < count; ++k) {
        J(k, k - 1) = J(k - 1, k) = std::sqrt(k / 2.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    std::vector<double> z(count), w(count);
    for (int i = 0; i < count; ++i) {
        z[i] = std::sqrt(2.0) * es.eigenvalues()(i);
        w[i] = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    }
    return {z, w};
}

Outcome heat_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto field = builtin::constant_heat();
    const auto g = make_grid(Box::interval(-8.0, 8.0), 0.04, 1.0, {field}, BoundaryCondition::frozen_dirichlet, 4);
    const auto u = solve(field, make_payoff("gauss"), g);
    double worst = 0.0;
    for (double t : {0.25, 0.5, 1.0}) {
        const std::size_t k = u.slice_index(t);
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            const double x = g.node(i)[0];
            if (std::abs(x) <= 3.0 + 1e-9) {
                const double exact = std::exp(-x * x / (1.0 + 4.0 * t)) / std::sqrt(1.0 + 4.0 * t);
                worst = std::max(worst, std::abs(u.at(i, k) - exact));
            }
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 2e-3 && secs < 30.0, "sup error " + fmt(worst) + " (tol 2e-3), " + fmt(secs, 3) + " s (limit 30)"};
}

Outcome mc_fd_crosscheck()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = make_problem("peano_alpha", 0.5);
    const double eps = 0.1, t = 0.5, h = 0.01;
    const auto fe = p.family.perturb(eps);
    const Box window = Box::interval(-1.0, 1.0);
    const auto g = make_grid(box_for_window(p.family, window, t, eps, h), h, t, {fe}, BoundaryCondition::frozen_dirichlet, 10);
    const Payoff f = make_payoff("tanh");
    const auto u = solve(fe, f, g, eps);
    bool ok = true;
    double worst = 0.0;
    std::uint64_t seed = 7;
    for (const auto& x : probe_points(window)) {
        const auto m = estimate_u(fe, f, x, t, 1e-3, 100000, seed++);
        const double fd = u.at(g.nearest_node(x), u.slice_index(t));
        const double d = std::abs(m.value - fd);
        const double tol = 3.0 * m.std_error + 2e-2;
        ok = ok && d <= tol;
        worst = std::max(worst, d / tol);
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 60.0, "worst |MC-FD| / (3 se + 0.02) = " + fmt(worst) + ", " + fmt(secs, 3) + " s (limit 60)"};
}

Outcome tightness()
{
    std::mt19937_64 rng(2026);
    const double T = 1.0, dt = 0.01;
    const std::size_t steps = 100;
    std::size_t checks = 0, violations = 0;
    double worst = 0.0;
    for (const auto& p : full_catalog()) {
        for (double eps : {0.2, 0.1, 0.05}) {
            const auto ens = simulate(p.family.perturb(eps), p.init_law, T, dt, 10000, 100 + checks);
            for (int pair = 0; pair < 20; ++pair) {
                std::size_t a = rng() % (steps + 1), b = rng() % (steps + 1);
                while (a == b) {
                    b = rng() % (steps + 1);
                }
                if (a > b) {
                    std::swap(a, b);
                }
                const auto c = increment_moment_check(ens, dt * static_cast<double>(a), dt * static_cast<double>(b));
                ++checks;
                violations += c.pass ? 0 : 1;
                worst = std::max(worst, c.lhs / c.bound);
            }
        }
    }
    return {violations == 0, std::to_string(checks) + " pairs, " + std::to_string(violations) +
                                 " violations, worst E|dX|^4 / bound = " + fmt(worst)};
}

Outcome cauchy_selection()
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    const double h = 0.005, T = 0.75;
    const Box window = Box::interval(-1.0, 1.0);
    bool ok = true;
    std::string detail;
    for (const auto& p : {make_problem("peano_alpha", 0.5), make_problem("cubic")}) {
        const auto box = box_for_window(p.family, window, T, eps.front(), h);
        const auto g = make_sweep_grid(p.family, eps, box, h, T, BoundaryCondition::frozen_dirichlet, 20);
        const auto s = eps_sweep(p.family, make_payoff("tanh"), eps, g, SweepWindow{window, 0.75});
        const auto inc = s.increments();
        ok = ok && s.columns_strictly_decreasing() && inc.back() < 0.05;
        detail += p.tag + ": columns " + (s.columns_strictly_decreasing() ? "decreasing" : "NOT decreasing") +
                  ", final increment " + fmt(inc.back()) + "; ";
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 300.0, detail + fmt(secs, 3) + " s (limit 300)"};
}

template <class Visit>
void for_catalog_grids(Visit visit)
{
    const Box window = Box::interval(-1.0, 1.0);
    for (const auto& p : full_catalog()) {
        for (double eps : {0.1, 0.025}) {
            const auto fe = p.family.perturb(eps);
            const auto g = make_grid(box_for_window(p.family, window, 0.5, eps, 0.02), 0.02, 0.5, {fe},
                                     BoundaryCondition::frozen_dirichlet, 10);
            visit(p, fe, g, eps);
        }
    }
}

Outcome max_principle_comparison()
{
    std::size_t max_violations = 0, cmp_violations = 0, cases = 0;
    for_catalog_grids([&](const Problem&, const CoefficientField& fe, const GridSpec& g, double eps) {
        for (const auto& [f1, f2] : ordered_payoff_pairs()) {
            const auto u1 = solve(fe, f1, g, eps);
            const auto u2 = solve(fe, f2, g, eps);
            ++cases;
            for (const auto* u : {&u1, &u2}) {
                double lo = u->at(0, 0), hi = lo;
                for (std::size_t i = 0; i < g.node_count(); ++i) {
                    lo = std::min(lo, u->at(i, 0));
                    hi = std::max(hi, u->at(i, 0));
                }
                for (std::size_t k = 0; k < u->slice_count(); ++k) {
                    for (std::size_t i = 0; i < g.node_count(); ++i) {
                        max_violations += (u->at(i, k) < lo || u->at(i, k) > hi) ? 1 : 0;
                    }
                }
            }
            for (std::size_t k = 0; k < u1.slice_count(); ++k) {
                for (std::size_t i = 0; i < g.node_count(); ++i) {
                    cmp_violations += u1.at(i, k) > u2.at(i, k) ? 1 : 0;
                }
            }
        }
    });
    return {max_violations == 0 && cmp_violations == 0,
            std::to_string(cases) + " grid x pair cases, " + std::to_string(max_violations) + " max-principle and " +
                std::to_string(cmp_violations) + " comparison violations"};
}

Outcome linearity()
{
    double worst = 0.0;
    for_catalog_grids([&](const Problem&, const CoefficientField& fe, const GridSpec& g, double eps) {
        for (const auto& [f1, f2] : ordered_payoff_pairs()) {
            const Payoff sum{f1.tag + "+" + f2.tag, [a = f1, b = f2](std::span<const double> x) { return a(x) + b(x); },
                             f1.sup_bound + f2.sup_bound};
            const auto u = solve(fe, sum, g, eps);
            const auto u1 = solve(fe, f1, g, eps);
            const auto u2 = solve(fe, f2, g, eps);
            double s1 = 0.0, s2 = 0.0, d = 0.0;
            for (std::size_t i = 0; i < g.node_count(); ++i) {
                s1 = std::max(s1, std::abs(u1.at(i, 0)));
                s2 = std::max(s2, std::abs(u2.at(i, 0)));
            }
            for (std::size_t k = 0; k < u.slice_count(); ++k) {
                for (std::size_t i = 0; i < g.node_count(); ++i) {
                    d = std::max(d, std::abs(u.at(i, k) - u1.at(i, k) - u2.at(i, k)));
                }
            }
            if (s1 + s2 > 0.0) {
                worst = std::max(worst, d / (s1 + s2));
            }
        }
    });
    return {worst <= 1e-10, "worst ||u(f1+f2) - u(f1) - u(f2)|| / (||f1|| + ||f2||) = " + fmt(worst) + " (tol 1e-10)"};
}

Outcome supersolution()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto field = builtin::power_pair(0.5, 0.75);
    const auto c = supersolution_neighborhood(field, Vector{0.0}, 1.0, 0.81, {1e-2, 1e-3, 1e-4}, 1e-3, 10000);
    const double secs = seconds_since(t0);
    bool refused = false;
    try {
        (void)supersolution_neighborhood(field, Vector{0.0}, 1.0, 0.4, {1e-2, 1e-3, 1e-4}, 1e-3, 10000);
    } catch (const DomainError&) {
        refused = true;
    }
    return {c.r_certified >= 0.05 && secs < 10.0 && refused,
            "r_certified " + fmt(c.r_certified) + " (need >= 0.05), min residual beyond it " + fmt(c.min_residual_all) +
                ", " + fmt(secs, 3) + " s (limit 10), gamma=0.4 " + (refused ? "refused" : "NOT refused")};
}

Outcome counterexample_detection()
{
    SelectionSettings s;
    s.experiment_id = "acceptance";
    s.eps_list = {0.1, 0.05, 0.025};
    s.T = 1.0;
    s.t_max = 0.75;
    s.h = 0.01;
    s.slices = 20;
    s.N = 2000;
    s.N_tightness = 500;
    s.tightness_pairs = 5;
    s.dt_mc = 0.01;
    s.seed = 8;
    bool ok = true;
    std::string detail;
    for (const auto& p : full_catalog()) {
        const auto rep = run_selection(p, s);
        const bool flagged = rep.flags.at("feller_violation");
        const bool expected = p.tag == "signed_sqrt";
        ok = ok && flagged == expected;
        if (flagged != expected) {
            detail += p.tag + (flagged ? " wrongly flagged; " : " NOT flagged; ");
        }
        if (expected) {
            const auto it = std::find_if(rep.jumps.begin(), rep.jumps.end(), [](const JumpRow& j) { return j.t == 0.5; });
            if (it == rep.jumps.end()) {
                return {false, "no jump row at t = 0.5"};
            }
            const double x = 0.25 * 0.25;
            const double threshold = 0.5 * std::abs(std::tanh(x) - std::tanh(-x));
            ok = ok && it->jump > threshold && it->baseline < 0.02;
            detail += "signed_sqrt jump at t=0.5 " + fmt(it->jump) + " vs threshold " + fmt(threshold) +
                      ", heat baseline " + fmt(it->baseline) + " (need < 0.02); ";
        }
    }
    return {ok, detail + "flag raised for signed_sqrt only: " + (ok ? "yes" : "no")};
}

Outcome fdd()
{
    const auto [z, w] = gauss_hermite_normal(40);
    const Payoff f = make_payoff("tanh");
    const std::vector<double> times{0.25, 0.5, 0.75};
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    const auto heat = fdd_convergence(make_problem("constant_heat"), {f, f, f}, times, eps, 0.25, 100000, 41);
    double worst = 0.0;
    for (const auto& row : heat.rows) {
        const double s = std::sqrt((2.0 + row.eps) * 0.25);
        double oracle = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            for (std::size_t j = 0; j < z.size(); ++j) {
                for (std::size_t k = 0; k < z.size(); ++k) {
                    const double a = s * z[i], b = a + s * z[j], c = b + s * z[k];
                    oracle += w[i] * w[j] * w[k] * std::tanh(a) * std::tanh(b) * std::tanh(c);
                }
            }
        }
        worst = std::max(worst, std::abs(row.estimate.value - oracle) / row.estimate.std_error);
    }
    const auto peano = fdd_convergence(make_problem("peano_alpha", 0.5), {f, f, f}, times, eps, 1e-3, 100000, 43);
    std::string diffs;
    for (std::size_t i = 0; i < peano.differences.size(); ++i) {
        diffs += (i ? ", " : "") + fmt(peano.differences[i], 3) + "/" + fmt(peano.bands[i], 3);
    }
    return {worst <= 3.0 && peano.converged,
            "heat worst |E - quadrature| / se = " + fmt(worst, 3) + " (tol 3); peano difference/band " + diffs +
                (peano.converged ? " (inside band at 0.025)" : " (outside band at 0.025)")};
}

Outcome symmetry()
{
    const auto tab = splitting_probability(make_problem("signed_sqrt"), {0.1, 0.05, 0.025}, 1.0, 1e-3, 100000, 11);
    std::string detail;
    for (const auto& r : tab.rows) {
        detail += "eps " + fmt(r.eps) + ": " + fmt(r.p.value, 5) + " +- " + fmt(r.p.std_error, 2) + "; ";
    }
    return {tab.symmetric_within_3se, detail};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    const auto base = fs::temp_directory_path() / ("zeronoise_acceptance_" + std::to_string(::getpid()));
    const std::string config = (fs::path(ZERONOISE_CONFIGS) / "heat.cfg").string();
    std::vector<fs::path> roots;
    for (const char* workers : {"1", "4", "1"}) {
        const auto root = base / ("run" + std::to_string(roots.size()));
        fs::remove_all(root);
        const std::string cmd = "ZERONOISE_OUTPUT_ROOT='" + root.string() + "' '" + ZERONOISE_CLI + "' run '" + config +
                                "' --workers " + workers + " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            return {false, "cli run failed with workers=" + std::string(workers)};
        }
        roots.push_back(root / "heat");
    }
    std::size_t files = 0, mismatches = 0;
    for (const auto& e : fs::directory_iterator(roots[0])) {
        if (e.path().extension() != ".csv") {
            continue;
        }
        ++files;
        const auto ref = slurp(e.path());
        for (std::size_t r = 1; r < roots.size(); ++r) {
            mismatches += slurp(roots[r] / e.path().filename()) == ref ? 0 : 1;
        }
    }
    fs::remove_all(base);
    return {files > 0 && mismatches == 0, std::to_string(files) + " CSV files across workers 1, 4, 1: " +
                                              std::to_string(mismatches) + " mismatches"};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, Outcome (*)()>> criteria{
        {"heat equation oracle", heat_oracle},
        {"MC-FD cross-validation", mc_fd_crosscheck},
        {"tightness moment bound", tightness},
        {"eps-Cauchy selection", cauchy_selection},
        {"maximum principle and comparison", max_principle_comparison},
        {"linearity", linearity},
        {"supersolution certificate", supersolution},
        {"counterexample detection", counterexample_detection},
        {"fdd convergence", fdd},
        {"splitting symmetry", symmetry},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): " << o.detail
                  << std::endl;
    }
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << "\n";
    return failures ? 1 : 0;
}
