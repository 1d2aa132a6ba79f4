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

#include <json.hpp>

namespace zeronoise {

enum class CandidateKind { supersolution_candidate, subsolution_candidate };

inline std::string to_string(CandidateKind k)
{
    return k == CandidateKind::supersolution_candidate ? "supersolution_candidate" : "subsolution_candidate";
}

/// A C^{1,2} test function w(x,t) with closed-form derivatives.
struct SmoothCandidate {
    std::function<double(std::span<const double>, double)> value;
    std::function<Vector(std::span<const double>, double)> gradient;
    std::function<Matrix(std::span<const double>, double)> hessian;
    std::function<double(std::span<const double>, double)> time_derivative;
    CandidateKind kind = CandidateKind::supersolution_candidate;
    std::string tag;
};

/// Worst relative disagreement between the declared gradient/hessian and
/// centered differences (of the value and of the gradient, respectively).
struct ConsistencyReport {
    double gradient_error = 0.0;
    double hessian_error = 0.0;
    bool pass = false;
};

inline ConsistencyReport self_consistency(const SmoothCandidate& w, const std::vector<Vector>& points, double t,
                                          double h = 1e-5, double tol = 1e-6)
{
    ConsistencyReport rep;
    for (const auto& x : points) {
        const std::size_t n = x.size();
        const Vector g = w.gradient(x, t);
        const Matrix H = w.hessian(x, t);
        const double gscale = std::max(1.0, norm(g));
        const double hscale = std::max(1.0, H.frobenius_norm());
        for (std::size_t j = 0; j < n; ++j) {
            Vector xp = x;
            Vector xm = x;
            xp[j] += h;
            xm[j] -= h;
            const double fd = (w.value(xp, t) - w.value(xm, t)) / (2.0 * h);
            rep.gradient_error = std::max(rep.gradient_error, std::abs(fd - g[j]) / gscale);
            const Vector gp = w.gradient(xp, t);
            const Vector gm = w.gradient(xm, t);
            for (std::size_t i = 0; i < n; ++i) {
                const double fdh = (gp[i] - gm[i]) / (2.0 * h);
                rep.hessian_error = std::max(rep.hessian_error, std::abs(fdh - H(i, j)) / hscale);
            }
        }
    }
    rep.pass = rep.gradient_error <= tol && rep.hessian_error <= tol;
    return rep;
}

/// a * w1 + w2, with derivatives combined termwise.
inline SmoothCandidate combine(double a, const SmoothCandidate& w1, const SmoothCandidate& w2)
{
    SmoothCandidate c;
    c.kind = w2.kind;
    c.tag = format_double(a) + "*" + w1.tag + "+" + w2.tag;
    c.value = [=](std::span<const double> x, double t) { return a * w1.value(x, t) + w2.value(x, t); };
    c.time_derivative = [=](std::span<const double> x, double t) {
        return a * w1.time_derivative(x, t) + w2.time_derivative(x, t);
    };
    c.gradient = [=](std::span<const double> x, double t) {
        Vector g1 = w1.gradient(x, t);
        const Vector g2 = w2.gradient(x, t);
        for (std::size_t i = 0; i < g1.size(); ++i) {
            g1[i] = a * g1[i] + g2[i];
        }
        return g1;
    };
    c.hessian = [=](std::span<const double> x, double t) {
        Matrix h1 = w1.hessian(x, t);
        const Matrix h2 = w2.hessian(x, t);
        auto d1 = h1.data();
        auto d2 = h2.data();
        for (std::size_t i = 0; i < d1.size(); ++i) {
            d1[i] = a * d1[i] + d2[i];
        }
        return h1;
    };
    return c;
}

/// psi_theta(x) = K (|x - x*|^2 + theta)^(gamma/2), constant in time.
/// With theta = 0 the value is still defined, but derivatives at x* throw.
inline SmoothCandidate make_psi(const Vector& x_star, double K, double gamma, double theta)
{
    require(gamma > 0.0 && gamma < 1.0, "make_psi: gamma must lie in (0,1)");
    require(K > 0.0 && std::isfinite(K), "make_psi: K must be positive");
    require(theta >= 0.0 && std::isfinite(theta), "make_psi: theta must be nonnegative");
    require(!x_star.empty(), "make_psi: empty center");
    const std::size_t n = x_star.size();
    auto shifted = [x_star, n](std::span<const double> x, Vector& d) {
        require(x.size() == n, "make_psi: dimension mismatch");
        d.resize(n);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = x[i] - x_star[i];
            s += d[i] * d[i];
        }
        return s;
    };
    auto base = [theta](double s) {
        const double v = s + theta;
        require(v > 0.0, "make_psi: not differentiable at the center when theta = 0");
        return v;
    };

    SmoothCandidate c;
    c.kind = CandidateKind::supersolution_candidate;
    c.tag = "psi(K=" + format_double(K) + ",gamma=" + format_double(gamma) + ",theta=" + format_double(theta) + ")";
    c.value = [=](std::span<const double> x, double) {
        Vector d;
        const double s = shifted(x, d) + theta;
        return K * std::pow(s, gamma / 2.0);
    };
    c.time_derivative = [](std::span<const double>, double) { return 0.0; };
    c.gradient = [=](std::span<const double> x, double) {
        Vector d;
        const double s = base(shifted(x, d));
        const double f = K * gamma * std::pow(s, gamma / 2.0 - 1.0);
        for (double& v : d) {
            v *= f;
        }
        return d;
    };
    c.hessian = [=](std::span<const double> x, double) {
        Vector d;
        const double s = base(shifted(x, d));
        const double p1 = K * gamma * std::pow(s, gamma / 2.0 - 1.0);
        const double p2 = K * gamma * (gamma - 2.0) * std::pow(s, gamma / 2.0 - 2.0);
        Matrix H(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                H(i, j) = p2 * d[i] * d[j] + (i == j ? p1 : 0.0);
            }
        }
        return H;
    };
    return c;
}

/// max{2(1 - beta), 1 - alpha}
inline double gamma_threshold(double alpha, double beta)
{
    require(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0, "gamma_threshold: exponents must lie in (0,1]");
    return std::max(2.0 * (1.0 - beta), 1.0 - alpha);
}

/// dw/dt - b . grad w - Tr(A D^2 w) with A = sigma sigma^T / 2.
/// Nonnegative: classical supersolution at (x,t); nonpositive: subsolution.
inline double residual(const SmoothCandidate& w, const CoefficientField& field, std::span<const double> x, double t)
{
    const std::size_t n = field.dim_state();
    require(x.size() == n, "residual: dimension mismatch");
    const Vector b = field.drift(x);
    const Matrix cov = field.covariance(x);
    const Vector g = w.gradient(x, t);
    const Matrix H = w.hessian(x, t);
    double drift = 0.0;
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        drift += b[i] * g[i];
        for (std::size_t j = 0; j < n; ++j) {
            diff += 0.5 * cov(i, j) * H(j, i);
        }
    }
    return w.time_derivative(x, t) - drift - diff;
}

/// Lower bound curve for the residual of psi_theta in the theta -> 0 limit,
/// in the form printed alongside the special supersolution estimate.
inline double analytic_lower_bound(const HolderData& hd, std::size_t n, double K, double gamma, double xi, double r)
{
    const double dn = static_cast<double>(n);
    const double t1 = -gamma * hd.c_b * std::pow(r, hd.alpha + gamma - 1.0);
    const double t2 = -(gamma * hd.c_sigma / dn) * std::pow(r, 2.0 * hd.beta + gamma - 1.0);
    const double t3 = (2.0 * gamma * (1.0 - gamma / 2.0) / (dn * hd.c_sigma)) * std::pow(r, 2.0 * hd.beta + gamma - 2.0);
    return K * (t1 + t2 + t3) - 3.0 * xi;
}

struct SupersolutionCertificate {
    std::string field_tag;
    Vector x_star;
    double K = 1.0;
    double gamma = 0.0;
    double gamma_threshold = 0.0;
    std::vector<double> theta_list;
    double xi = 0.0;
    double declared_radius = 0.0;
    double r_certified = 0.0;
    double min_residual = 0.0;        ///< over all sampled points with radius <= r_certified
    double min_residual_all = 0.0;    ///< over every sampled point
    bool boundary_case = false;       ///< 1 + alpha - 2 beta == 0
    std::size_t grid_points = 0;
    std::vector<double> radii;
    std::vector<double> sampled_min;  ///< min residual over theta and directions, per radius
    std::vector<double> analytic;     ///< analytic lower bound curve, per radius
};

/// Largest radius r <= declared radius such that psi_theta has residual >= -3 xi
/// on every sampled point with |x - x*| <= r, for every theta in the list.
/// Radii are log-spaced from 1e-8 R to R; directions are +-e_i plus random
/// unit vectors when n > 1.
inline SupersolutionCertificate supersolution_neighborhood(const CoefficientField& field, const Vector& x_star, double K,
                                                           double gamma, const std::vector<double>& theta_list,
                                                           double xi, std::size_t grid_points = 10000,
                                                           std::uint64_t seed = 1, unsigned workers = default_workers())
{
    const auto& hd = field.holder();
    const double thr = gamma_threshold(hd.alpha, hd.beta);
    require(gamma > thr, "supersolution_neighborhood: gamma=" + format_double(gamma) +
                             " does not exceed the threshold " + format_double(thr));
    require(gamma < 1.0, "supersolution_neighborhood: gamma must be below 1");
    require(xi > 0.0, "supersolution_neighborhood: xi must be positive");
    require(!theta_list.empty(), "supersolution_neighborhood: empty theta list");
    for (std::size_t i = 0; i < theta_list.size(); ++i) {
        require(theta_list[i] > 0.0, "supersolution_neighborhood: theta must be positive");
        require(i == 0 || theta_list[i] < theta_list[i - 1], "supersolution_neighborhood: theta list must be decreasing");
    }
    const auto ex = check_exponents(hd.alpha, hd.beta);
    require(ex.slack_1 >= 0.0, "supersolution_neighborhood: 1 + alpha - 2 beta < 0");
    const auto dp = field.find_degenerate_point(x_star);
    require(dp.has_value(), "supersolution_neighborhood: x_star is not a declared degenerate point");
    const auto deg = check_degenerate_point(field, x_star, dp->radius, 2000, seed);
    require(deg.pass, "supersolution_neighborhood: degenerate point check failed at x_star");

    const std::size_t n = field.dim_state();
    std::vector<Vector> dirs;
    for (std::size_t i = 0; i < n; ++i) {
        Vector e(n, 0.0);
        e[i] = 1.0;
        dirs.push_back(e);
        e[i] = -1.0;
        dirs.push_back(e);
    }
    if (n > 1) {
        const CounterRng rng(seed);
        for (std::uint32_t k = 0; k < 4 * n; ++k) {
            dirs.push_back(detail::random_unit(rng, 0x5u, k, n));
        }
    }
    const std::size_t per_radius = std::max<std::size_t>(1, dirs.size() * theta_list.size());
    const std::size_t num_r = std::max<std::size_t>(2, grid_points / per_radius);
    const double R = dp->radius;

    SupersolutionCertificate cert;
    cert.field_tag = field.tag();
    cert.x_star = x_star;
    cert.K = K;
    cert.gamma = gamma;
    cert.gamma_threshold = thr;
    cert.theta_list = theta_list;
    cert.xi = xi;
    cert.declared_radius = R;
    cert.boundary_case = ex.boundary_case;
    cert.grid_points = num_r * per_radius;
    cert.radii.resize(num_r);
    cert.sampled_min.resize(num_r);
    cert.analytic.resize(num_r);
    std::vector<SmoothCandidate> psis;
    for (double th : theta_list) {
        psis.push_back(make_psi(x_star, K, gamma, th));
    }
    const double lo = std::log(R * 1e-8);
    const double hi = std::log(R);
    for (std::size_t k = 0; k < num_r; ++k) {
        cert.radii[k] = std::exp(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(num_r - 1));
    }
    cert.radii.back() = R;
    parallel_for(num_r, workers, [&](std::size_t begin, std::size_t end) {
        Vector x(n);
        for (std::size_t k = begin; k < end; ++k) {
            double m = std::numeric_limits<double>::infinity();
            for (const auto& d : dirs) {
                for (std::size_t i = 0; i < n; ++i) {
                    x[i] = x_star[i] + cert.radii[k] * d[i];
                }
                for (const auto& psi : psis) {
                    m = std::min(m, residual(psi, field, x, 0.0));
                }
            }
            cert.sampled_min[k] = m;
            cert.analytic[k] = analytic_lower_bound(hd, n, K, gamma, xi, cert.radii[k]);
        }
    });
    const double floor = -3.0 * xi;
    std::size_t good = 0;
    while (good < num_r && cert.sampled_min[good] >= floor) {
        ++good;
    }
    cert.r_certified = good == 0 ? 0.0 : cert.radii[good - 1];
    cert.min_residual = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < good; ++k) {
        cert.min_residual = std::min(cert.min_residual, cert.sampled_min[k]);
    }
    if (good == 0) {
        cert.min_residual = cert.sampled_min.front();
    }
    cert.min_residual_all = *std::min_element(cert.sampled_min.begin(), cert.sampled_min.end());
    return cert;
}

inline nlohmann::ordered_json certificate_json(const SupersolutionCertificate& c, bool with_profile = false)
{
    nlohmann::ordered_json j;
    j["x_star"] = c.x_star;
    j["K"] = c.K;
    j["gamma"] = c.gamma;
    j["theta_list"] = c.theta_list;
    j["xi"] = c.xi;
    j["r_certified"] = c.r_certified;
    j["min_residual"] = c.min_residual;
    j["field_tag"] = c.field_tag;
    j["gamma_threshold"] = c.gamma_threshold;
    j["declared_radius"] = c.declared_radius;
    j["boundary_case"] = c.boundary_case;
    j["min_residual_all"] = c.min_residual_all;
    j["grid_points"] = c.grid_points;
    if (with_profile) {
        j["profile"] = {{"radius", c.radii}, {"sampled_min_residual", c.sampled_min}, {"analytic_lower_bound", c.analytic}};
    }
    return j;
}

// ---------------------------------------------------------------------------
// Comparison diagnostic

struct ComparisonResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Largest slope of the initial slice between adjacent nodes of `window`.
inline double initial_lipschitz(const LatticeFunction& u, const std::vector<std::size_t>& nodes)
{
    const GridSpec& g = u.grid();
    const std::size_t n0 = g.axis_nodes(0);
    double lip = 0.0;
    for (std::size_t idx : nodes) {
        const auto k = g.multi_index(idx);
        if (k[0] + 1 < n0) {
            lip = std::max(lip, std::abs(u.at(idx + 1, 0) - u.at(idx, 0)) / g.h);
        }
        if (g.dim() > 1 && k[1] + 1 < g.axis_nodes(1)) {
            lip = std::max(lip, std::abs(u.at(idx + n0, 0) - u.at(idx, 0)) / g.h);
        }
    }
    return lip;
}

/// lhs = sup over window x [0,T) of (u - v); rhs = max(sup over window of
/// (u - v)(., 0), 0). Passes when lhs <= rhs + tolerance; the default
/// tolerance is 2 (h + dt) times the initial Lipschitz estimate of u and v.
inline ComparisonResult comparison_diagnostic(const LatticeFunction& u, const LatticeFunction& v, const Box& window,
                                              std::optional<double> tolerance = std::nullopt)
{
    require(u.same_layout(v), "comparison_diagnostic: u and v live on different grids");
    window.validate("comparison_diagnostic window");
    const auto nodes = detail::nodes_in(u.grid(), window);
    require(!nodes.empty(), "comparison_diagnostic: window contains no grid nodes");
    ComparisonResult r;
    r.lhs = -std::numeric_limits<double>::infinity();
    r.rhs = 0.0;
    const double T = u.grid().T;
    for (std::size_t k = 0; k < u.slice_count(); ++k) {
        if (u.times()[k] >= T * (1.0 - 1e-12) && u.slice_count() > 1) {
            continue;
        }
        for (std::size_t i : nodes) {
            const double d = u.at(i, k) - v.at(i, k);
            r.lhs = std::max(r.lhs, d);
            if (k == 0) {
                r.rhs = std::max(r.rhs, d);
            }
        }
    }
    const double lip = std::max(initial_lipschitz(u, nodes), initial_lipschitz(v, nodes));
    r.tolerance = tolerance.value_or(2.0 * (u.grid().h + u.grid().dt) * lip);
    r.pass = r.lhs <= r.rhs + r.tolerance;
    return r;
}

/// Checks residual(w + v) == residual(w) + residual(v) on the samples, to
/// `rel_tol` relative to the larger term.
inline bool residual_additivity_check(const SmoothCandidate& w, const SmoothCandidate& v, const CoefficientField& field,
                                      const std::vector<std::pair<Vector, double>>& samples, double rel_tol = 1e-12,
                                      double* worst = nullptr)
{
    const SmoothCandidate sum = combine(1.0, w, v);
    double bad = 0.0;
    for (const auto& [x, t] : samples) {
        const double rw = residual(w, field, x, t);
        const double rv = residual(v, field, x, t);
        const double rs = residual(sum, field, x, t);
        const double scale = std::max({1.0, std::abs(rw), std::abs(rv)});
        bad = std::max(bad, std::abs(rs - (rw + rv)) / scale);
    }
    if (worst) {
        *worst = bad;
    }
    return bad <= rel_tol;
}

} // namespace zeronoise
