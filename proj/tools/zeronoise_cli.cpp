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

// zeronoise command-line front end.
//
// Exit codes: 0 ok, 1 check or run failure, 2 parse error / unknown tag /
// mismatched reports, 3 memory budget exceeded.

#include <zeronoise/report.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace zn = zeronoise;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_fail = 1;
constexpr int exit_usage = 2;
constexpr int exit_budget = 3;

struct Loaded {
    zn::ExperimentConfig config;
    zn::Problem problem;
};

/// Loads and resolves a config. Returns an exit code on failure.
std::variant<Loaded, int> load(const std::string& path, std::optional<unsigned> workers)
{
    try {
        Loaded l;
        l.config = zn::load_config(path);
        if (workers) {
            l.config.workers = *workers;
        }
        zn::resolve_tags(l.config);
        l.problem = zn::problem_from_config(l.config);
        return l;
    } catch (const zn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const zn::DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
    }
    return exit_usage;
}

bool within_budget(const Loaded& l, const zn::SelectionSettings& s)
{
    const double bytes = zn::selection_memory_bytes(l.problem, s);
    const double budget = l.config.memory_budget_gib * 1024.0 * 1024.0 * 1024.0;
    if (bytes > budget) {
        std::cerr << "memory budget exceeded: need about " << bytes / (1024.0 * 1024.0 * 1024.0) << " GiB, budget "
                  << l.config.memory_budget_gib << " GiB\n";
        return false;
    }
    return true;
}

int report_check(const Loaded& l, const zn::ProblemCheck& c, bool quiet)
{
    if (!quiet) {
        std::cout << "problem " << l.problem.tag << ": " << (c.pass ? "pass" : "FAIL") << "\n";
        for (const auto& r : c.reports) {
            std::cout << "  " << r.check << ": " << (r.pass ? "pass" : "fail") << "\n";
        }
        std::cout << "  exponents: slack_1=" << c.exponents.slack_1 << " slack_2=" << c.exponents.slack_2
                  << (c.exponents.boundary_case ? " (boundary case)" : "") << "\n";
        for (const auto& w : c.waived) {
            std::cout << "  waived: " << w << "\n";
        }
        for (const auto& f : c.failures) {
            std::cout << "  failed: " << f << "\n";
        }
        for (const auto& n : c.notes) {
            std::cout << "  note: " << n << "\n";
        }
    }
    return c.pass ? exit_ok : exit_fail;
}

int cmd_check(const std::string& path, std::optional<unsigned> workers)
{
    auto res = load(path, workers);
    if (auto* code = std::get_if<int>(&res)) {
        return *code;
    }
    auto& l = std::get<Loaded>(res);
    try {
        const auto c = zn::check_problem(l.problem, l.config.eps, l.config.seed);
        const auto dir = zn::output_directory(l.config);
        zn::write_atomic(dir / "check.json", zn::check_json(l.problem, c).dump(2) + "\n");
        return report_check(l, c, false);
    } catch (const zn::DomainError& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return exit_fail;
    }
}

int cmd_run(const std::string& path, std::optional<unsigned> workers)
{
    auto res = load(path, workers);
    if (auto* code = std::get_if<int>(&res)) {
        return *code;
    }
    auto& l = std::get<Loaded>(res);
    try {
        const auto settings = zn::settings_from_config(l.config);
        if (!within_budget(l, settings)) {
            return exit_budget;
        }
        const auto c = zn::check_problem(l.problem, l.config.eps, l.config.seed);
        if (!c.pass) {
            report_check(l, c, false);
            std::cerr << "run refused: assumption checks failed without waiver\n";
            return exit_fail;
        }
        const auto rep = zn::run_selection(l.problem, settings);
        const auto dir = zn::output_directory(l.config);
        zn::write_selection(rep, dir, l.config.formats);
        std::cout << "report written to " << dir.string() << "\n";
        for (const auto& [k, v] : rep.flags) {
            std::cout << "  " << k << ": " << (v ? "yes" : "no") << "\n";
        }
        return exit_ok;
    } catch (const zn::DomainError& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return exit_fail;
    }
}

int cmd_sweep(const std::string& path, std::optional<unsigned> workers, bool export_lattice)
{
    auto res = load(path, workers);
    if (auto* code = std::get_if<int>(&res)) {
        return *code;
    }
    auto& l = std::get<Loaded>(res);
    try {
        const auto s = zn::settings_from_config(l.config);
        if (!within_budget(l, s)) {
            return exit_budget;
        }
        const zn::Box box = zn::box_for_window(l.problem.family, s.window, s.T, s.eps_list.front(), s.h);
        const auto grid = zn::make_sweep_grid(l.problem.family, s.eps_list, box, s.h, s.T, s.boundary, s.slices);
        const auto sweep = zn::eps_sweep(l.problem.family, zn::make_payoff(s.payoff), s.eps_list, grid,
                                         zn::SweepWindow{s.window, s.t_max}, s.workers);
        const auto semi = zn::semilimits(sweep, s.delta_list);
        auto j = zn::sweep_json(sweep);
        j["problem_tag"] = l.problem.tag;
        j["payoff"] = s.payoff;
        zn::ordered_json gaps = zn::ordered_json::array();
        for (const auto& lv : semi.levels) {
            gaps.push_back({{"delta", lv.delta}, {"gap", lv.gap}, {"eps_used", lv.eps_used}});
        }
        j["semilimits"] = gaps;
        const auto dir = zn::output_directory(l.config);
        zn::write_atomic(dir / "sweep.json", j.dump(2) + "\n");
        zn::write_atomic(dir / "probe_lines.csv", zn::probe_lines_csv(sweep, zn::probe_times(s.T)));
        zn::write_atomic(dir / "csv_schema.json", zn::csv_schema().dump(2) + "\n");
        if (export_lattice) {
            for (const auto& u : sweep.solutions) {
                zn::write_lattice(u, dir / ("lattice_eps_" + zn::format_double(u.eps())));
            }
            zn::write_lattice(semi.u_star, dir / "lattice_upper_semilimit");
            zn::write_lattice(semi.u_lower, dir / "lattice_lower_semilimit");
        }
        std::cout << "sweep written to " << dir.string() << "; error bar " << sweep.error_bar()
                  << (sweep.converging() ? "" : " (NOT converging)") << "\n";
        return exit_ok;
    } catch (const zn::DomainError& e) {
        std::cerr << "sweep failed: " << e.what() << "\n";
        return exit_fail;
    }
}

int cmd_fdd(const std::string& path, std::optional<unsigned> workers)
{
    auto res = load(path, workers);
    if (auto* code = std::get_if<int>(&res)) {
        return *code;
    }
    auto& l = std::get<Loaded>(res);
    try {
        const auto s = zn::settings_from_config(l.config);
        std::vector<zn::Payoff> fs;
        for (const auto& t : s.fdd_payoffs) {
            fs.push_back(zn::make_payoff(t));
        }
        const auto times = zn::probe_times(s.T);
        const auto conv = zn::fdd_convergence(l.problem, fs, times, s.eps_list, s.dt_mc, s.N, s.seed, s.workers);
        const auto schema = zn::csv_schema();
        std::string csv = zn::detail::header_of(schema, "fdd.csv");
        zn::ordered_json j;
        j["problem_tag"] = l.problem.tag;
        zn::ordered_json rows = zn::ordered_json::array();
        for (const auto& r : conv.rows) {
            csv += zn::detail::csv_line({s.experiment_id, zn::format_double(r.eps), zn::format_vector(r.times),
                                         zn::format_double(r.estimate.value), zn::format_double(r.estimate.std_error),
                                         std::to_string(r.estimate.num_samples), zn::format_double(s.dt_mc),
                                         std::to_string(r.estimate.seed)});
            rows.push_back({{"eps", r.eps}, {"value", r.estimate.value}, {"std_error", r.estimate.std_error}});
        }
        j["rows"] = rows;
        j["differences"] = conv.differences;
        j["bands"] = conv.bands;
        j["converged"] = conv.converged;
        const auto dir = zn::output_directory(l.config);
        zn::write_atomic(dir / "fdd.csv", csv);
        zn::write_atomic(dir / "fdd.json", j.dump(2) + "\n");
        zn::write_atomic(dir / "csv_schema.json", schema.dump(2) + "\n");
        std::cout << "fdd table written to " << dir.string() << "; converged: " << (conv.converged ? "yes" : "no") << "\n";
        return exit_ok;
    } catch (const zn::DomainError& e) {
        std::cerr << "fdd failed: " << e.what() << "\n";
        return exit_fail;
    }
}

std::optional<zn::ordered_json> read_report(std::filesystem::path p)
{
    if (std::filesystem::is_directory(p)) {
        p /= "report.json";
    }
    std::ifstream in(p);
    if (!in) {
        std::cerr << "cannot read report " << p.string() << "\n";
        return std::nullopt;
    }
    try {
        return zn::ordered_json::parse(in);
    } catch (const std::exception& e) {
        std::cerr << "malformed report " << p.string() << ": " << e.what() << "\n";
        return std::nullopt;
    }
}

int cmd_compare(const std::string& a_path, const std::string& b_path, double k_sigma, double abs_tol)
{
    const auto a = read_report(a_path);
    const auto b = read_report(b_path);
    if (!a || !b) {
        return exit_usage;
    }
    try {
        if (a->at("problem_tag") != b->at("problem_tag")) {
            std::cerr << "reports describe different problems: " << a->at("problem_tag") << " vs " << b->at("problem_tag")
                      << "\n";
            return exit_usage;
        }
        const auto& pa = a->at("probes");
        const auto& pb = b->at("probes");
        if (pa.size() != pb.size()) {
            std::cerr << "probe sets differ in size\n";
            return exit_usage;
        }
        int worst = exit_ok;
        for (std::size_t i = 0; i < pa.size(); ++i) {
            if (pa[i].at("x") != pb[i].at("x") || pa[i].at("t") != pb[i].at("t")) {
                std::cerr << "probe " << i << " differs in location\n";
                return exit_usage;
            }
            const double va = pa[i].at("value"), vb = pb[i].at("value");
            const double ua = pa[i].at("uncertainty"), ub = pb[i].at("uncertainty");
            const double tol = abs_tol + k_sigma * std::hypot(ua, ub);
            const double d = std::abs(va - vb);
            const bool ok = d <= tol;
            std::cout << "probe x=" << pa[i].at("x").dump() << " t=" << pa[i].at("t").dump() << " |diff|=" << d
                      << " tol=" << tol << (ok ? "" : "  MISMATCH") << "\n";
            if (!ok) {
                worst = exit_fail;
            }
        }
        return worst;
    } catch (const std::exception& e) {
        std::cerr << "malformed report: " << e.what() << "\n";
        return exit_usage;
    }
}

int cmd_catalog()
{
    std::cout << "problems:\n";
    for (const auto& p : zn::full_catalog()) {
        std::cout << "  " << p.tag << ": " << p.notes << (p.waiver.empty() ? "" : " [waivable: degenerate_point]")
                  << (p.waived ? " [waived by default]" : "") << "\n";
    }
    std::cout << "payoffs:\n";
    for (const auto& t : zn::payoff_tags()) {
        std::cout << "  " << t << "\n";
    }
    std::cout << "boundary conditions:\n  frozen_dirichlet\n  one_sided_extrapolation\n";
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"zeronoise: small-noise selection laboratory for degenerate SDEs"};
    app.require_subcommand(1);
    std::optional<unsigned> workers;
    std::string config;

    auto* check = app.add_subcommand("check", "run the assumption checkers for a config");
    check->add_option("config", config, "experiment config file")->required();
    check->add_option("--workers", workers, "worker threads (0 = hardware)");

    auto* run = app.add_subcommand("run", "full selection run with JSON, CSV and Markdown output");
    run->add_option("config", config, "experiment config file")->required();
    run->add_option("--workers", workers, "worker threads (0 = hardware)");

    bool export_lattice = false;
    auto* sweep = app.add_subcommand("sweep", "eps sweep, Cauchy table and semilimits only");
    sweep->add_option("config", config, "experiment config file")->required();
    sweep->add_option("--workers", workers, "worker threads (0 = hardware)");
    sweep->add_flag("--export-lattice", export_lattice, "also write every solution as binary + JSON header");

    auto* fdd = app.add_subcommand("fdd", "three-time fdd convergence table across eps");
    fdd->add_option("config", config, "experiment config file")->required();
    fdd->add_option("--workers", workers, "worker threads (0 = hardware)");

    std::string report_a, report_b;
    double k_sigma = 3.0;
    double abs_tol = 0.0;
    auto* compare = app.add_subcommand("compare", "compare probe values of two run reports");
    compare->add_option("report_a", report_a, "report.json or run directory")->required();
    compare->add_option("report_b", report_b, "report.json or run directory")->required();
    compare->add_option("--k-sigma", k_sigma, "allowed multiple of the combined uncertainty")->capture_default_str();
    compare->add_option("--abs-tol", abs_tol, "absolute tolerance added to the band")->capture_default_str();

    app.add_subcommand("catalog", "list built-in problems and payoffs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    if (*check) {
        return cmd_check(config, workers);
    }
    if (*run) {
        return cmd_run(config, workers);
    }
    if (*sweep) {
        return cmd_sweep(config, workers, export_lattice);
    }
    if (*fdd) {
        return cmd_fdd(config, workers);
    }
    if (*compare) {
        return cmd_compare(report_a, report_b, k_sigma, abs_tol);
    }
    return cmd_catalog();
}
