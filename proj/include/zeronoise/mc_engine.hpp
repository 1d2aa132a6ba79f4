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
#include <zeronoise/philox.hpp>

#include <json.hpp>

#include <deque>
#include <filesystem>
#include <fstream>
#include <variant>

namespace zeronoise {

/// Bounded test function f : R^n -> R with a declared sup bound.
struct Payoff {
    std::string tag;
    std::function<double(std::span<const double>)> fn;
    double sup_bound = 1.0;

    double operator()(std::span<const double> x) const { return fn(x); }
};

struct Dirac {
    Vector point;
};

/// Path i starts at points[i % points.size()].
struct GridOfStarts {
    std::vector<Vector> points;
};

using InitialLaw = std::variant<Dirac, GridOfStarts>;

inline const Vector& start_point(const InitialLaw& law, std::size_t path)
{
    if (const auto* d = std::get_if<Dirac>(&law)) {
        return d->point;
    }
    const auto& g = std::get<GridOfStarts>(law);
    return g.points[path % g.points.size()];
}

inline void validate_law(const InitialLaw& law, std::size_t n)
{
    if (const auto* d = std::get_if<Dirac>(&law)) {
        require(d->point.size() == n, "initial law: dimension mismatch");
        return;
    }
    const auto& g = std::get<GridOfStarts>(law);
    require(!g.points.empty(), "initial law: empty grid of starts");
    for (const auto& p : g.points) {
        require(p.size() == n, "initial law: dimension mismatch");
    }
}

struct MCEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t num_samples = 0;
    std::uint64_t seed = 0;
};

/// Number of whole steps of size dt in [0, t]; throws unless t is on the grid.
inline std::size_t grid_steps(double t, double dt, const std::string& what)
{
    require(dt > 0.0 && std::isfinite(dt), what + ": dt must be positive");
    require(t >= 0.0, what + ": time must be nonnegative");
    const double q = t / dt;
    const double k = std::round(q);
    require(std::abs(q - k) <= 1e-9 * std::max(1.0, q), what + ": time " + format_double(t) + " is not on the dt grid");
    return static_cast<std::size_t>(k);
}

namespace detail {

/// Euler-Maruyama walker for one path. `visit(step, state)` is called for the
/// initial state (step 0) and after every step.
template <class Visit>
void walk_path(const CoefficientField& field, std::span<const double> x0, double dt, std::size_t steps,
               const CounterRng& rng, std::uint64_t path, Visit&& visit)
{
    const std::size_t n = field.dim_state();
    const std::size_t m = field.dim_noise();
    thread_local std::vector<double> x, drift, sigma, z;
    x.assign(x0.begin(), x0.end());
    drift.resize(n);
    sigma.resize(n * m);
    z.resize(m);
    const double sqdt = std::sqrt(dt);
    visit(std::size_t{0}, std::span<const double>(x));
    for (std::size_t k = 0; k < steps; ++k) {
        field.drift_into(x, drift);
        field.diffusion_into(x, sigma);
        rng.normals(path, static_cast<std::uint32_t>(k), std::span<double>(z));
        for (std::size_t i = 0; i < n; ++i) {
            double noise = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                noise += sigma[i * m + j] * z[j];
            }
            x[i] += drift[i] * dt + noise * sqdt;
        }
        visit(k + 1, std::span<const double>(x));
    }
}

} // namespace detail

/// N simulated Euler-Maruyama trajectories on a fixed time grid.
class PathEnsemble {
public:
    PathEnsemble(CoefficientField field, InitialLaw law, double T, double dt, std::size_t steps, std::size_t num_paths,
                 std::uint64_t seed, std::vector<double> paths)
        : field_(std::move(field))
        , law_(std::move(law))
        , T_(T)
        , dt_(dt)
        , steps_(steps)
        , num_paths_(num_paths)
        , seed_(seed)
        , paths_(std::move(paths))
    {
    }

    const CoefficientField& field() const { return field_; }
    const InitialLaw& initial_law() const { return law_; }
    double horizon() const { return T_; }
    double dt() const { return dt_; }
    std::size_t steps() const { return steps_; }
    std::size_t num_paths() const { return num_paths_; }
    std::size_t dim() const { return field_.dim_state(); }
    std::uint64_t seed() const { return seed_; }
    std::span<const double> raw() const { return paths_; }

    std::span<const double> state(std::size_t path, std::size_t step) const
    {
        const std::size_t n = dim();
        return std::span<const double>(paths_).subspan((path * (steps_ + 1) + step) * n, n);
    }

    std::span<const double> path(std::size_t p) const
    {
        const std::size_t n = dim();
        return std::span<const double>(paths_).subspan(p * (steps_ + 1) * n, (steps_ + 1) * n);
    }

    std::size_t step_index(double t, const std::string& what) const
    {
        const std::size_t k = grid_steps(t, dt_, what);
        require(k <= steps_, what + ": time beyond horizon");
        return k;
    }

private:
    CoefficientField field_;
    InitialLaw law_;
    double T_;
    double dt_;
    std::size_t steps_;
    std::size_t num_paths_;
    std::uint64_t seed_;
    std::vector<double> paths_;
};

/// Simulates N paths of dX = b dt + sigma dW by Euler-Maruyama. Path i uses
/// the counter-based stream (seed, i), so any worker count gives identical output.
inline PathEnsemble simulate(const CoefficientField& field, const InitialLaw& law, double T, double dt, std::size_t N,
                             std::uint64_t seed, unsigned workers = default_workers())
{
    require(dt > 0.0 && std::isfinite(dt), "simulate: dt must be positive");
    require(N > 0, "simulate: N must be positive");
    require(T > 0.0 && dt < T, "simulate: need 0 < dt < T");
    validate_law(law, field.dim_state());
    const std::size_t steps = grid_steps(T, dt, "simulate");
    const std::size_t n = field.dim_state();
    const std::size_t stride = (steps + 1) * n;
    std::vector<double> paths(N * stride);
    const CounterRng rng(seed);
    parallel_for(N, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            double* out = paths.data() + p * stride;
            detail::walk_path(field, start_point(law, p), dt, steps, rng, p,
                              [&](std::size_t k, std::span<const double> x) { std::copy(x.begin(), x.end(), out + k * n); });
        }
    });
    return PathEnsemble(field, law, T, dt, steps, N, seed, std::move(paths));
}

inline PathEnsemble simulate(const CoefficientField& field, const Vector& x0, double T, double dt, std::size_t N,
                             std::uint64_t seed, unsigned workers = default_workers())
{
    return simulate(field, InitialLaw{Dirac{x0}}, T, dt, N, seed, workers);
}

/// Monte Carlo estimate of u(x,t) = E[f(X_t) | X_0 = x]. When t is not a
/// multiple of dt the step is shortened to t / ceil(t / dt).
inline MCEstimate estimate_u(const CoefficientField& field, const Payoff& f, const Vector& x, double t, double dt,
                             std::size_t N, std::uint64_t seed, unsigned workers = default_workers())
{
    require(t >= 0.0 && std::isfinite(t), "estimate_u: t must be nonnegative");
    require(dt > 0.0 && std::isfinite(dt), "estimate_u: dt must be positive");
    require(N > 0, "estimate_u: N must be positive");
    require(x.size() == field.dim_state(), "estimate_u: dimension mismatch");
    std::size_t steps = 0;
    double step = dt;
    if (t > 0.0) {
        const double q = t / dt;
        steps = static_cast<std::size_t>(std::ceil(q - 1e-9 * std::max(1.0, q)));
        steps = std::max<std::size_t>(steps, 1);
        step = t / static_cast<double>(steps);
    }
    std::vector<double> values(N);
    const CounterRng rng(seed);
    parallel_for(N, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            detail::walk_path(field, x, step, steps, rng, p, [&](std::size_t k, std::span<const double> xs) {
                if (k == steps) {
                    values[p] = f(xs);
                }
            });
        }
    });
    const auto m = sample_moments(values);
    return MCEstimate{m.mean, m.std_error, N, seed};
}

/// Estimates E[prod_i f_i(X_{t_i})] along single trajectories. Payoffs must be
/// declared with sup bound <= 1; times must be strictly increasing grid times.
inline MCEstimate estimate_fdd(const CoefficientField& field, const std::vector<Payoff>& payoffs,
                               const std::vector<double>& times, const InitialLaw& law, double dt, std::size_t N,
                               std::uint64_t seed, unsigned workers = default_workers())
{
    require(!payoffs.empty() && payoffs.size() == times.size(), "estimate_fdd: need one time per payoff");
    require(N > 0, "estimate_fdd: N must be positive");
    for (const auto& f : payoffs) {
        require(f.sup_bound <= 1.0, "estimate_fdd: payoff '" + f.tag + "' declares sup bound above 1");
    }
    validate_law(law, field.dim_state());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < times.size(); ++i) {
        require(i == 0 || times[i] > times[i - 1], "estimate_fdd: times must be strictly increasing");
        idx.push_back(grid_steps(times[i], dt, "estimate_fdd"));
    }
    const std::size_t steps = idx.back();
    std::vector<double> values(N);
    const CounterRng rng(seed);
    parallel_for(N, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            double prod = 1.0;
            std::size_t next = 0;
            detail::walk_path(field, start_point(law, p), dt, steps, rng, p, [&](std::size_t k, std::span<const double> xs) {
                while (next < idx.size() && idx[next] == k) {
                    prod *= payoffs[next](xs);
                    ++next;
                }
            });
            values[p] = prod;
        }
    });
    const auto m = sample_moments(values);
    return MCEstimate{m.mean, m.std_error, N, seed};
}

struct MomentCheck {
    double lhs = 0.0;
    double lhs_std_error = 0.0;
    double bound = 0.0;
    bool pass = false;
};

/// Fourth-moment increment bound E|X_t - X_s|^4 <= 8 K^4 |t-s|^4 + 24 K^4 |t-s|^2
/// with K = max(sup b, sup sigma). Passes when the sample mean stays below the
/// bound inflated by five relative standard errors.
inline double increment_moment_bound(double K, double gap)
{
    const double k4 = K * K * K * K;
    return 8.0 * k4 * std::pow(gap, 4) + 24.0 * k4 * gap * gap;
}

inline MomentCheck increment_moment_check(const PathEnsemble& ensemble, double s, double t)
{
    require(s >= 0.0 && s <= t, "increment_moment_check: need 0 <= s <= t");
    const std::size_t ks = ensemble.step_index(s, "increment_moment_check");
    const std::size_t kt = ensemble.step_index(t, "increment_moment_check");
    std::vector<double> v(ensemble.num_paths());
    for (std::size_t p = 0; p < v.size(); ++p) {
        const double d = distance(ensemble.state(p, kt), ensemble.state(p, ks));
        v[p] = d * d * d * d;
    }
    const auto m = sample_moments(v);
    MomentCheck c;
    c.lhs = m.mean;
    c.lhs_std_error = m.std_error;
    c.bound = increment_moment_bound(ensemble.field().moment_constant(), t - s);
    const double rel = c.lhs > 0.0 ? m.std_error / c.lhs : 0.0;
    c.pass = c.lhs <= c.bound * (1.0 + 5.0 * rel);
    return c;
}

struct ModulusQuantiles {
    double delta = 0.0;
    double q50 = 0.0;
    double q90 = 0.0;
    double q99 = 0.0;
};

/// Linear-interpolation quantile of an unsorted sample.
inline double quantile(std::vector<double> v, double q)
{
    require(!v.empty(), "quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return v[lo] + w * (v[hi] - v[lo]);
}

/// Quantiles over paths of sup_{|t-s| <= delta} |X_t - X_s|.
inline ModulusQuantiles modulus_diagnostic(const PathEnsemble& ensemble, double delta)
{
    require(delta >= ensemble.dt() * (1.0 - 1e-9), "modulus_diagnostic: delta must be at least dt");
    const auto w = static_cast<std::size_t>(std::floor(delta / ensemble.dt() + 1e-9));
    const std::size_t steps = ensemble.steps();
    const std::size_t n = ensemble.dim();
    std::vector<double> mod(ensemble.num_paths());
    for (std::size_t p = 0; p < mod.size(); ++p) {
        double best = 0.0;
        if (n == 1) {
            // sliding-window extrema: max over i in [j-w, j] of |X_j - X_i|
            const auto path = ensemble.path(p);
            std::deque<std::size_t> mx, mn;
            for (std::size_t j = 0; j <= steps; ++j) {
                while (!mx.empty() && path[mx.back()] <= path[j]) {
                    mx.pop_back();
                }
                mx.push_back(j);
                while (!mn.empty() && path[mn.back()] >= path[j]) {
                    mn.pop_back();
                }
                mn.push_back(j);
                while (mx.front() + w < j) {
                    mx.pop_front();
                }
                while (mn.front() + w < j) {
                    mn.pop_front();
                }
                best = std::max({best, path[mx.front()] - path[j], path[j] - path[mn.front()]});
            }
        } else {
            for (std::size_t j = 0; j <= steps; ++j) {
                for (std::size_t i = (j > w ? j - w : 0); i < j; ++i) {
                    best = std::max(best, distance(ensemble.state(p, j), ensemble.state(p, i)));
                }
            }
        }
        mod[p] = best;
    }
    return ModulusQuantiles{delta, quantile(mod, 0.5), quantile(mod, 0.9), quantile(mod, 0.99)};
}

// ---------------------------------------------------------------------------
// Export

/// Writes `<prefix>.bin` (little-endian float64, path-major [N][steps+1][n])
/// and `<prefix>.json` (field tag, dt, T, N, seed, layout).
inline void write_ensemble(const PathEnsemble& e, const std::filesystem::path& prefix)
{
    auto bin = prefix;
    bin += ".bin";
    auto meta = prefix;
    meta += ".json";
    {
        std::ofstream out(bin, std::ios::binary);
        require(static_cast<bool>(out), "write_ensemble: cannot open " + bin.string());
        const auto raw = e.raw();
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(double)));
    }
    nlohmann::ordered_json j;
    j["field_tag"] = e.field().tag();
    j["dt"] = e.dt();
    j["T"] = e.horizon();
    j["N"] = e.num_paths();
    j["seed"] = e.seed();
    j["steps"] = e.steps();
    j["dim"] = e.dim();
    j["dtype"] = "float64-le";
    j["layout"] = "path, step, component";
    std::ofstream(meta) << j.dump(2) << "\n";
}

/// One row of the estimates CSV.
struct EstimateRow {
    std::string experiment_id;
    double eps = 0.0;
    Vector x;
    double t = 0.0;
    MCEstimate estimate;
};

inline const char* estimate_csv_header() { return "experiment_id,eps,x,t,value,std_error,N"; }

inline std::string to_csv(const EstimateRow& r)
{
    return r.experiment_id + "," + format_double(r.eps) + "," + format_vector(r.x) + "," + format_double(r.t) + "," +
           format_double(r.estimate.value) + "," + format_double(r.estimate.std_error) + "," +
           std::to_string(r.estimate.num_samples);
}

} // namespace zeronoise
