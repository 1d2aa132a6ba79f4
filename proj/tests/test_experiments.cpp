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

#include <zeronoise/experiments.hpp>

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace zeronoise;

namespace {

SelectionSettings quick_settings()
{
    SelectionSettings s;
    s.experiment_id = "unit";
    s.eps_list = {0.1, 0.05, 0.025};
    s.T = 1.0;
    s.t_max = 0.75;
    s.h = 0.01;
    s.slices = 20;
    s.N = 2000;
    s.N_tightness = 500;
    s.tightness_pairs = 5;
    s.dt_mc = 0.01;
    s.seed = 5;
    s.workers = 2;
    return s;
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

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace

TEST(Catalog, ProblemsAndWaivers)
{
    const std::vector<double> eps{0.2, 0.1, 0.05};
    EXPECT_TRUE(check_problem(make_problem("constant_heat"), eps, 1).pass);

    for (double alpha : {0.3, 0.5, 0.7}) {
        const auto p = make_problem("peano_alpha", alpha);
        const auto c = check_problem(p, eps, 1);
        EXPECT_TRUE(c.pass) << p.tag;
        EXPECT_EQ(c.waived, std::vector<std::string>{"degenerate_point"});
        EXPECT_EQ(p.field.holder().beta, 0.5 + alpha / 4.0);
    }

    const auto cubic = check_problem(make_problem("cubic"), eps, 1);
    EXPECT_TRUE(cubic.pass);
    EXPECT_TRUE(cubic.exponents.boundary_case);
    EXPECT_FALSE(cubic.notes.empty());

    auto counter = make_problem("counterexample");
    EXPECT_EQ(counter.tag, "signed_sqrt");
    const auto strict = check_problem(counter, eps, 1);
    EXPECT_FALSE(strict.pass);
    EXPECT_EQ(strict.failures, std::vector<std::string>{"degenerate_point"});
    counter.waived = true;
    EXPECT_TRUE(check_problem(counter, eps, 1).pass);

    EXPECT_THROW(make_problem("lorenz"), DomainError);
    EXPECT_EQ(full_catalog().size(), 6u);
}

TEST(Catalog, CounterexampleSaturatesAtOne)
{
    const auto f = make_problem("signed_sqrt").field;
    EXPECT_EQ(f.drift(Vector{4.0})[0], 1.0);
    EXPECT_EQ(f.drift(Vector{-9.0})[0], -1.0);
    EXPECT_DOUBLE_EQ(f.drift(Vector{0.25})[0], 0.5);
    EXPECT_DOUBLE_EQ(f.drift(Vector{-0.25})[0], -0.5);
}

TEST(Payoffs, OrderedPairsAreOrdered)
{
    const auto pairs = ordered_payoff_pairs();
    EXPECT_EQ(pairs.size(), 5u);
    for (const auto& [a, b] : pairs) {
        for (double x : linspace(-20.0, 20.0, 4001)) {
            ASSERT_LE(a(Vector{x}), b(Vector{x})) << a.tag << " vs " << b.tag << " at " << x;
            ASSERT_LE(std::abs(a(Vector{x})), a.sup_bound);
            ASSERT_LE(std::abs(b(Vector{x})), b.sup_bound);
        }
    }
    for (const auto& tag : payoff_tags()) {
        EXPECT_EQ(make_payoff(tag).tag, tag);
    }
    EXPECT_THROW(make_payoff("sawtooth"), DomainError);
}

TEST(Extremal, ClosedForms)
{
    for (double t : {0.25, 0.5, 1.0}) {
        const auto [lo, hi] = extremal_solutions(builtin::signed_sqrt(), 0.0, t);
        const double x = (t / 2.0) * (t / 2.0);
        EXPECT_NEAR(hi, x, 1e-4 * x);
        EXPECT_NEAR(lo, -x, 1e-4 * x);

        const double alpha = 0.5;
        const auto [plo, phi] = extremal_solutions(builtin::peano_alpha(alpha), 0.0, t);
        EXPECT_EQ(plo, 0.0);
        EXPECT_NEAR(phi, std::pow((1.0 - alpha) * t, 1.0 / (1.0 - alpha)), 1e-5);

        const auto [hlo, hhi] = extremal_solutions(builtin::constant_heat(), 0.0, t);
        EXPECT_EQ(hlo, 0.0);
        EXPECT_EQ(hhi, 0.0);
    }
}

TEST(Selection, HeatFellerModulusMatchesGaussianSmoothing)
{
    auto s = quick_settings();
    s.payoff = "gauss";
    const auto rep = run_selection(make_problem("constant_heat"), s);
    EXPECT_LT(rep.sweep.error_bar(), 0.01);
    EXPECT_TRUE(rep.flags.at("cauchy_converging"));
    EXPECT_FALSE(rep.flags.at("feller_violation"));
    EXPECT_TRUE(rep.flags.at("feller_modulus_bounded"));
    const auto& g = rep.grid;
    for (const auto& row : rep.feller) {
        // closed form exp(-x^2 / q) / sqrt(q), q = 1 + 2 (2 + eps) t
        const double q = 1.0 + 2.0 * (2.0 + row.eps) * row.t;
        double oracle = 0.0;
        for (std::size_t i : rep.sweep.window_nodes) {
            if (i + 1 > rep.sweep.window_nodes.back()) {
                continue;
            }
            const double x0 = g.node(i)[0], x1 = g.node(i + 1)[0];
            oracle = std::max(oracle, std::abs(std::exp(-x1 * x1 / q) - std::exp(-x0 * x0 / q)) / std::sqrt(q));
        }
        EXPECT_NEAR(row.global_modulus, oracle, 1e-4) << row.eps << " " << row.t;
    }
    EXPECT_EQ(rep.probes.size(), 15u);
    EXPECT_EQ(rep.probe_source, "fd");
}

TEST(Selection, PeanoConvergesWithBoundedModulus)
{
    auto s = quick_settings();
    s.eps_list = {0.2, 0.1, 0.05, 0.025};
    s.T = 0.75;
    s.h = 0.005;
    s.dt_mc = 0.0125;
    const auto rep = run_selection(make_problem("peano_alpha", 0.5), s);
    EXPECT_TRUE(rep.flags.at("cauchy_increments_decreasing"));
    EXPECT_TRUE(rep.flags.at("cauchy_columns_decreasing"));
    EXPECT_TRUE(rep.flags.at("tightness_moment_bound"));
    EXPECT_FALSE(rep.flags.at("feller_violation"));
    for (const auto& row : rep.feller) {
        EXPECT_TRUE(std::isfinite(row.global_modulus));
        EXPECT_LT(row.global_modulus, 0.05);
    }
}

TEST(Selection, CounterexampleJumpIsFlagged)
{
    auto s = quick_settings();
    const auto rep = run_selection(make_problem("signed_sqrt"), s);
    EXPECT_TRUE(rep.flags.at("feller_violation"));
    const auto it = std::find_if(rep.jumps.begin(), rep.jumps.end(), [](const JumpRow& j) { return j.t == 0.5; });
    ASSERT_NE(it, rep.jumps.end());
    const double x = 0.25 * 0.25;
    EXPECT_NEAR(it->extremal_threshold, 0.5 * (std::tanh(x) - std::tanh(-x)), 1e-6);
    EXPECT_GT(it->jump, it->extremal_threshold);
    EXPECT_LT(it->baseline, 0.02);
    EXPECT_TRUE(it->flagged);
}

TEST(Selection, ErrorsCarryContext)
{
    auto s = quick_settings();
    s.delta_list = {0.001};
    try {
        run_selection(make_problem("constant_heat"), s);
        FAIL() << "expected a domain error";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("sweep"), std::string::npos) << e.what();
    }
}

TEST(Selection, MemoryEstimateScalesWithGrid)
{
    auto s = quick_settings();
    const auto p = make_problem("cubic");
    const double a = selection_memory_bytes(p, s);
    s.h /= 2.0;
    const double b = selection_memory_bytes(p, s);
    EXPECT_GT(a, 0.0);
    EXPECT_GT(b, 1.8 * a - static_cast<double>(s.N_tightness) * 101 * 8.0 - s.N * 8.0);
}

TEST(Splitting, OddFieldIsSymmetric)
{
    const auto tab = splitting_probability(make_problem("signed_sqrt"), {0.1, 0.05, 0.025}, 1.0, 0.01, 20000, 3);
    EXPECT_TRUE(tab.odd_symmetric);
    EXPECT_TRUE(tab.symmetric_within_3se);
    for (const auto& r : tab.rows) {
        EXPECT_NEAR(r.p.value, 0.5, 3.0 * r.p.std_error);
    }
}

TEST(Splitting, PeanoFavoursThePositiveBranch)
{
    const auto tab = splitting_probability(make_problem("peano_alpha", 0.5), {0.2, 0.1, 0.05}, 1.0, 0.01, 20000, 3);
    EXPECT_FALSE(tab.odd_symmetric);
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
        EXPECT_GT(tab.rows[i].p.value, 0.5);
        if (i > 0) {
            const auto& a = tab.rows[i - 1].p;
            const auto& b = tab.rows[i].p;
            EXPECT_GE(b.value, a.value - 3.0 * std::hypot(a.std_error, b.std_error));
        }
    }
}

TEST(Splitting, ConstantDriftMatchesGaussianTail)
{
    const auto p = detail::make_problem("drift_one", builtin::constant_drift(1.0), "b = 1, sigma = 0");
    const double T = 0.5;
    const auto tab = splitting_probability(p, {0.5, 0.2}, T, T, 100000, 9);
    for (const auto& r : tab.rows) {
        // X_T = T + sqrt(eps) W_T
        const double exact = normal_cdf(T / std::sqrt(r.eps * T));
        EXPECT_NEAR(r.p.value, exact, 3.0 * r.p.std_error + 1e-12);
    }
}

TEST(Splitting, RejectsMultidimensionalProblems)
{
    const CoefficientField f2(
        "plane", 2, 2, [](std::span<const double>, std::span<double> out) { out[0] = out[1] = 0.0; },
        [](std::span<const double>, std::span<double> out) { out[0] = out[3] = 1.0, out[1] = out[2] = 0.0; }, 0.0,
        std::sqrt(2.0), HolderData{});
    const auto p = detail::make_problem("plane", f2, "2-d heat");
    EXPECT_THROW(splitting_probability(p, {0.1}, 1.0, 0.1, 10, 1), DomainError);
}

TEST(Fdd, ConstantPayoffsAreTriviallyConvergent)
{
    const Payoff one = make_payoff("one");
    const auto r = fdd_convergence(make_problem("cubic"), {one, one, one}, {0.25, 0.5, 0.75}, {0.2, 0.1}, 0.05, 200, 1);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.estimate.value, 1.0);
    }
    EXPECT_TRUE(r.converged);
}

TEST(Fdd, HeatMatchesQuadratureAtEveryEps)
{
    const auto [z, w] = gauss_hermite_normal(40);
    const Payoff f = make_payoff("tanh");
    const std::vector<double> eps{0.2, 0.1, 0.05};
    const auto r = fdd_convergence(make_problem("constant_heat"), {f, f, f}, {0.25, 0.5, 0.75}, eps, 0.25, 50000, 17);
    for (const auto& row : r.rows) {
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
        EXPECT_NEAR(row.estimate.value, oracle, 3.0 * row.estimate.std_error) << row.eps;
    }
}

TEST(Fdd, PeanoDifferencesDecrease)
{
    const Payoff f = make_payoff("tanh");
    const auto r = fdd_convergence(make_problem("peano_alpha", 0.5), {f, f, f}, {0.25, 0.5, 0.75},
                                   {0.1, 0.05, 0.025}, 0.01, 10000, 23);
    ASSERT_EQ(r.differences.size(), 2u);
    EXPECT_LT(r.differences[1], r.differences[0]);
    EXPECT_EQ(r.converged, r.differences.back() <= r.bands.back());
    EXPECT_THROW(fdd_convergence(make_problem("cubic"), {f, f}, {0.25, 0.5}, {0.1, 0.05}, 0.01, 10, 1), DomainError);
}

TEST(Density, ExtensionChecks)
{
    const auto p = make_problem("peano_alpha", 0.5);
    const double eps = 0.1;
    const Box window = Box::interval(-0.8, 0.8);
    const auto box = box_for_window(p.family, window, 0.25, eps, 0.01);
    const auto g = make_sweep_grid(p.family, {eps}, box, 0.01, 0.25, BoundaryCondition::frozen_dirichlet, 5);

    const Payoff tanh = make_payoff("tanh");
    EXPECT_TRUE(density_extension_check(p, tanh, {tanh, tanh, tanh}, eps, g, window).pass);

    const Payoff trunc{"sin(x^2) on [-1,1]",
                       [](std::span<const double> x) { return std::abs(x[0]) <= 1.0 ? std::sin(x[0] * x[0]) : 0.0; }, 1.0};
    std::vector<Payoff> mollified;
    for (double n : {5.0, 10.0, 20.0, 40.0}) {
        mollified.push_back(Payoff{"mollified", [n](std::span<const double> x) {
                                       const double cut = 0.5 * (std::tanh(n * (x[0] + 1.0)) - std::tanh(n * (x[0] - 1.0)));
                                       return std::sin(x[0] * x[0]) * cut;
                                   },
                                   1.0});
    }
    const auto d = density_extension_check(p, trunc, mollified, eps, g, window);
    EXPECT_TRUE(d.pass);
    EXPECT_LT(d.data_gap.back(), 1e-6);

    std::vector<Payoff> alternating{constant_payoff(1.0), constant_payoff(-1.0), constant_payoff(1.0)};
    EXPECT_THROW(density_extension_check(p, constant_payoff(0.0), alternating, eps, g, window), DomainError);
}

TEST(Comparison, CatalogTimesOrderedPairs)
{
    for (const auto& p : full_catalog()) {
        for (double eps : {0.1, 0.025}) {
            const auto fe = p.family.perturb(eps);
            const Box window = Box::interval(-1.0, 1.0);
            const auto box = box_for_window(p.family, window, 0.5, eps, 0.02);
            const auto g = make_grid(box, 0.02, 0.5, {fe}, BoundaryCondition::frozen_dirichlet, 10);
            for (const auto& [f1, f2] : ordered_payoff_pairs()) {
                const auto u1 = solve(fe, f1, g, eps);
                const auto u2 = solve(fe, f2, g, eps);
                const auto r = comparison_diagnostic(u1, u2, window);
                EXPECT_TRUE(r.pass) << p.tag << " " << f1.tag << " " << f2.tag;
                EXPECT_LE(r.lhs, 0.0);
            }
        }
    }
}
