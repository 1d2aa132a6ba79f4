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

#include <zeronoise/core.hpp>
#include <zeronoise/philox.hpp>

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace zeronoise {

/// Drift callback: writes b(x) (length n) into `out`.
using DriftFn = std::function<void(std::span<const double> x, std::span<double> out)>;
/// Diffusion callback: writes sigma(x) (n x m, row-major) into `out`.
using DiffusionFn = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Hoelder metadata: |b(x)-b(y)| <= c_b |x-y|^alpha, |sigma(x)-sigma(y)| <= c_sigma |x-y|^beta.
/// c_sigma doubles as the two-sided constant of the diffusion bound at degenerate points.
struct HolderData {
    double alpha = 1.0;
    double beta = 1.0;
    double c_b = 1.0;
    double c_sigma = 1.0;
};

struct DegeneratePoint {
    Vector point;
    double radius = 1.0;
};

/// Bounded drift/diffusion pair on R^n with noise dimension m.
///
/// Norm conventions: vectors use the Euclidean norm, matrices the Frobenius
/// norm. `sup_b` and `sup_sigma` are declared global bounds; K in moment
/// bounds is max(sup_b, sup_sigma).
class CoefficientField {
public:
    CoefficientField() = default;

    CoefficientField(std::string tag, std::size_t dim_state, std::size_t dim_noise, DriftFn drift,
                     DiffusionFn diffusion, double sup_b, double sup_sigma, HolderData holder = {},
                     std::vector<DegeneratePoint> degenerate_points = {})
        : tag_(std::move(tag))
        , n_(dim_state)
        , m_(dim_noise)
        , drift_(std::move(drift))
        , diffusion_(std::move(diffusion))
        , sup_b_(sup_b)
        , sup_sigma_(sup_sigma)
        , holder_(holder)
        , degenerate_(std::move(degenerate_points))
    {
        require(n_ > 0 && m_ > 0, "CoefficientField: dimensions must be positive");
        require(drift_ && diffusion_, "CoefficientField: drift and diffusion must be callable");
        require(sup_b_ >= 0.0 && sup_sigma_ >= 0.0 && std::isfinite(sup_b_) && std::isfinite(sup_sigma_),
                "CoefficientField: sup bounds must be finite and nonnegative");
        require(holder_.alpha > 0.0 && holder_.alpha <= 1.0 && holder_.beta > 0.0 && holder_.beta <= 1.0,
                "CoefficientField: Hoelder exponents must lie in (0,1]");
        require(holder_.c_b > 0.0 && holder_.c_sigma > 0.0, "CoefficientField: Hoelder constants must be positive");
        for (const auto& d : degenerate_) {
            require(d.point.size() == n_ && d.radius > 0.0, "CoefficientField: malformed degenerate point");
        }
    }

    const std::string& tag() const { return tag_; }
    std::size_t dim_state() const { return n_; }
    std::size_t dim_noise() const { return m_; }
    double sup_b() const { return sup_b_; }
    double sup_sigma() const { return sup_sigma_; }
    double moment_constant() const { return std::max(sup_b_, sup_sigma_); }
    const HolderData& holder() const { return holder_; }
    const std::vector<DegeneratePoint>& degenerate_points() const { return degenerate_; }

    void drift_into(std::span<const double> x, std::span<double> out) const { drift_(x, out); }
    void diffusion_into(std::span<const double> x, std::span<double> out) const { diffusion_(x, out); }

    Vector drift(std::span<const double> x) const
    {
        Vector out(n_);
        drift_(x, out);
        return out;
    }

    Matrix diffusion(std::span<const double> x) const
    {
        Matrix s(n_, m_);
        diffusion_(x, s.data());
        return s;
    }

    /// sigma(x) sigma(x)^T
    Matrix covariance(std::span<const double> x) const { return diffusion(x).gram(); }

    std::optional<DegeneratePoint> find_degenerate_point(std::span<const double> x) const
    {
        for (const auto& d : degenerate_) {
            if (distance(d.point, x) <= 1e-12 * (1.0 + norm(d.point))) {
                return d;
            }
        }
        return std::nullopt;
    }

    CoefficientField with_tag(std::string tag) const
    {
        CoefficientField c = *this;
        c.tag_ = std::move(tag);
        return c;
    }

    CoefficientField with_degenerate_points(std::vector<DegeneratePoint> pts) const
    {
        CoefficientField c = *this;
        c.degenerate_ = std::move(pts);
        return c;
    }

private:
    std::string tag_;
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    DriftFn drift_;
    DiffusionFn diffusion_;
    double sup_b_ = 0.0;
    double sup_sigma_ = 0.0;
    HolderData holder_;
    std::vector<DegeneratePoint> degenerate_;
};

enum class PerturbationScheme { additive_isotropic, custom };

/// User-supplied perturbation: b^eps and sigma^eps as functions of (eps, x).
struct CustomPerturbation {
    std::size_t dim_noise = 1;
    std::function<void(double eps, std::span<const double> x, std::span<double> out)> drift;
    std::function<void(double eps, std::span<const double> x, std::span<double> out)> diffusion;
    /// (sup |b^eps|, sup |sigma^eps|) as a function of eps.
    std::function<std::pair<double, double>(double eps)> sup_bounds;
};

/// Rule producing (b^eps, sigma^eps) for each eps > 0.
///
/// The additive isotropic scheme keeps the drift and realizes
/// sigma^eps (sigma^eps)^T = sigma sigma^T + eps I through the block factor
/// sigma^eps = [sigma | sqrt(eps) I], which needs no matrix square root.
class PerturbationFamily {
public:
    static PerturbationFamily additive_isotropic(CoefficientField base)
    {
        PerturbationFamily f;
        f.base_ = std::move(base);
        f.scheme_ = PerturbationScheme::additive_isotropic;
        return f;
    }

    static PerturbationFamily custom(CoefficientField base, CustomPerturbation rule)
    {
        require(rule.drift && rule.diffusion && rule.sup_bounds && rule.dim_noise > 0,
                "PerturbationFamily: incomplete custom rule");
        PerturbationFamily f;
        f.base_ = std::move(base);
        f.scheme_ = PerturbationScheme::custom;
        f.custom_ = std::make_shared<CustomPerturbation>(std::move(rule));
        return f;
    }

    const CoefficientField& base() const { return base_; }
    PerturbationScheme scheme() const { return scheme_; }

    CoefficientField perturb(double eps) const
    {
        require(std::isfinite(eps) && eps > 0.0, "perturb: eps must be positive");
        const std::size_t n = base_.dim_state();
        const std::string tag = base_.tag() + "@eps=" + format_double(eps);
        if (scheme_ == PerturbationScheme::custom) {
            auto rule = custom_;
            const auto [sb, ss] = rule->sup_bounds(eps);
            return CoefficientField(
                tag, n, rule->dim_noise,
                [rule, eps](std::span<const double> x, std::span<double> out) { rule->drift(eps, x, out); },
                [rule, eps](std::span<const double> x, std::span<double> out) { rule->diffusion(eps, x, out); }, sb,
                ss, base_.holder());
        }
        const std::size_t m = base_.dim_noise();
        const std::size_t cols = m + n;
        const double root = std::sqrt(eps);
        auto base = std::make_shared<CoefficientField>(base_);
        DiffusionFn diffusion = [base, n, m, cols, root](std::span<const double> x, std::span<double> out) {
            // base rows land packed at the front, then move to stride `cols`, last row first
            base->diffusion_into(x, out.first(n * m));
            for (std::size_t i = n; i-- > 0;) {
                for (std::size_t j = m; j-- > 0;) {
                    out[i * cols + j] = out[i * m + j];
                }
                for (std::size_t j = 0; j < n; ++j) {
                    out[i * cols + m + j] = (i == j) ? root : 0.0;
                }
            }
        };
        DriftFn drift = [base](std::span<const double> x, std::span<double> out) { base->drift_into(x, out); };
        const double sup_sigma = std::sqrt(base_.sup_sigma() * base_.sup_sigma() + static_cast<double>(n) * eps);
        return CoefficientField(tag, n, cols, std::move(drift), std::move(diffusion), base_.sup_b(), sup_sigma,
                                base_.holder());
    }

private:
    CoefficientField base_;
    PerturbationScheme scheme_ = PerturbationScheme::additive_isotropic;
    std::shared_ptr<const CustomPerturbation> custom_;
};

/// Outcome of an assumption checker. Metrics are scalar diagnostics; series
/// hold per-eps or per-sample sequences.
struct CheckReport {
    std::string check;
    bool pass = false;
    std::map<std::string, double> metrics;
    std::map<std::string, std::vector<double>> series;
    std::vector<std::string> notes;
};

namespace detail {

inline double radical_inverse(std::uint64_t index, unsigned base)
{
    double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

inline unsigned nth_prime(std::size_t k)
{
    static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    require(k < std::size(primes), "quasi-random sequence: dimension too large");
    return primes[k];
}

/// Shifted Halton point in [0,1)^dim (Cranley-Patterson rotation keyed by seed).
inline Vector halton_point(std::uint64_t index, std::size_t dim, const Vector& shift)
{
    Vector p(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        double v = radical_inverse(index + 1, nth_prime(k)) + shift[k];
        p[k] = v - std::floor(v);
    }
    return p;
}

inline Vector random_unit(const CounterRng& rng, std::uint64_t stream, std::uint32_t step, std::size_t dim)
{
    Vector v(dim);
    double nv = 0.0;
    std::uint32_t attempt = 0;
    do {
        rng.normals(stream, step + (attempt++ << 24), std::span<double>(v));
        nv = norm(v);
    } while (nv < 1e-12);
    for (double& x : v) {
        x /= nv;
    }
    return v;
}

inline double matrix_distance(const Matrix& a, const Matrix& b) { return (a - b).frobenius_norm(); }

} // namespace detail

/// Samples pairs in `box` and reports the largest observed Hoelder ratios of b
/// and sigma against the field's declared (alpha, c_b) and (beta, c_sigma).
///
/// Pairs come from a shifted Halton sequence plus forced close pairs with
/// separations down to 1e-6, anchored at random points, at the box center, and
/// at declared degenerate points.
inline CheckReport check_holder(const CoefficientField& field, const Box& box, std::size_t num_pairs,
                                std::uint64_t seed, double tol = 1e-10)
{
    require(num_pairs >= 1, "check_holder: num_pairs must be positive");
    box.validate("check_holder");
    require(box.dim() == field.dim_state(), "check_holder: box dimension mismatch");

    const std::size_t n = field.dim_state();
    const auto& h = field.holder();
    CounterRng rng(seed);
    Vector shift(2 * n);
    for (std::size_t k = 0; k < 2 * n; k += 2) {
        const auto u = rng.uniform_pair(0, 0, static_cast<std::uint32_t>(k));
        shift[k] = u[0];
        if (k + 1 < 2 * n) {
            shift[k + 1] = u[1];
        }
    }

    auto to_box = [&](std::span<const double> unit) {
        Vector x(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = box.lo[i] + unit[i] * (box.hi[i] - box.lo[i]);
        }
        return x;
    };

    double ratio_b = 0.0;
    double ratio_s = 0.0;
    double min_dist = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    auto visit = [&](const Vector& x, Vector y) {
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = std::clamp(y[i], box.lo[i], box.hi[i]);
        }
        const double d = distance(x, y);
        if (!(d > 0.0)) {
            return;
        }
        min_dist = std::min(min_dist, d);
        const double db = distance(field.drift(x), field.drift(y));
        const double ds = detail::matrix_distance(field.diffusion(x), field.diffusion(y));
        ratio_b = std::max(ratio_b, db / std::pow(d, h.alpha));
        ratio_s = std::max(ratio_s, ds / std::pow(d, h.beta));
        ++evaluated;
    };

    const std::size_t quasi = (num_pairs + 1) / 2;
    const std::size_t forced = num_pairs - quasi;
    for (std::size_t k = 0; k < quasi; ++k) {
        const Vector p = detail::halton_point(k, 2 * n, shift);
        visit(to_box(std::span<const double>(p).first(n)), to_box(std::span<const double>(p).subspan(n)));
    }

    std::vector<Vector> anchors;
    Vector center(n);
    for (std::size_t i = 0; i < n; ++i) {
        center[i] = 0.5 * (box.lo[i] + box.hi[i]);
    }
    anchors.push_back(center);
    for (const auto& dp : field.degenerate_points()) {
        if (box.contains(dp.point)) {
            anchors.push_back(dp.point);
        }
    }
    const double diam = box.diameter();
    for (std::size_t k = 0; k < forced; ++k) {
        Vector x;
        if (k % 4 == 0) {
            x = anchors[(k / 4) % anchors.size()];
        } else {
            const Vector p = detail::halton_point(k + quasi, n, shift);
            x = to_box(p);
        }
        const double frac = static_cast<double>(k % 64) / 63.0;
        const double d = 1e-6 * std::pow(diam / 1e-6, frac);
        const Vector u = detail::random_unit(rng, 1 + k, 0, n);
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = x[i] + d * u[i];
        }
        visit(x, y);
    }

    CheckReport r;
    r.check = "holder";
    r.metrics["ratio_b"] = ratio_b;
    r.metrics["ratio_sigma"] = ratio_s;
    r.metrics["c_b"] = h.c_b;
    r.metrics["c_sigma"] = h.c_sigma;
    r.metrics["alpha"] = h.alpha;
    r.metrics["beta"] = h.beta;
    r.metrics["min_pair_distance"] = min_dist;
    r.metrics["pairs"] = static_cast<double>(evaluated);
    const bool pass_b = ratio_b <= h.c_b * (1.0 + tol);
    const bool pass_s = ratio_s <= h.c_sigma * (1.0 + tol);
    r.pass = pass_b && pass_s;
    if (!pass_b) {
        r.notes.push_back("drift ratio " + format_double(ratio_b) + " exceeds C_b=" + format_double(h.c_b));
    }
    if (!pass_s) {
        r.notes.push_back("diffusion ratio " + format_double(ratio_s) + " exceeds C_sigma=" + format_double(h.c_sigma));
    }
    return r;
}

/// Checks b(x*) = 0, sigma(x*) = 0, and the two-sided bound
/// C^-1 |x*-y|^(2 beta) |v|^2 <= v^T sigma sigma^T(y) v <= C |x*-y|^(2 beta) |v|^2
/// on sampled y in B_r(x*) and unit v. Margins are normalized by |x*-y|^(2 beta).
inline CheckReport check_degenerate_point(const CoefficientField& field, std::span<const double> x_star, double r,
                                          std::size_t num_samples, std::uint64_t seed, double tol = 1e-10)
{
    require(x_star.size() == field.dim_state(), "check_degenerate_point: dimension mismatch");
    require(field.find_degenerate_point(x_star).has_value(),
            "check_degenerate_point: x_star is not a declared degenerate point");
    require(r > 0.0 && num_samples >= 1, "check_degenerate_point: need r > 0 and num_samples >= 1");

    const std::size_t n = field.dim_state();
    const auto& h = field.holder();
    CounterRng rng(seed);

    CheckReport rep;
    rep.check = "degenerate_point";
    const double b0 = norm(field.drift(x_star));
    const double s0 = field.diffusion(x_star).frobenius_norm();
    rep.metrics["drift_at_point"] = b0;
    rep.metrics["diffusion_at_point"] = s0;
    bool ok = b0 <= tol && s0 <= tol;
    if (!ok) {
        rep.notes.push_back("coefficients do not vanish at the degenerate point");
    }

    double worst_lower = std::numeric_limits<double>::infinity();
    double worst_upper = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < num_samples; ++k) {
        const auto u = rng.uniform_pair(k, 0, 0);
        const double rho = r * std::pow(10.0, -6.0 * u[0]);
        const Vector dir = detail::random_unit(rng, k, 1, n);
        const Vector v = detail::random_unit(rng, k, 2, n);
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = x_star[i] + rho * dir[i];
        }
        const double d = distance(x_star, y);
        if (!(d > 0.0) || !(d < r)) {
            continue;
        }
        const Matrix s = field.diffusion(y);
        double q = 0.0;
        for (std::size_t j = 0; j < s.cols(); ++j) {
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                c += v[i] * s(i, j);
            }
            q += c * c;
        }
        const double scale = std::pow(d, 2.0 * h.beta);
        worst_lower = std::min(worst_lower, q / scale - 1.0 / h.c_sigma);
        worst_upper = std::min(worst_upper, h.c_sigma - q / scale);
    }
    rep.metrics["worst_lower_margin"] = worst_lower;
    rep.metrics["worst_upper_margin"] = worst_upper;
    rep.metrics["worst_margin"] = std::min(worst_lower, worst_upper);
    const double slack = tol * std::max(1.0, h.c_sigma);
    if (worst_lower < -slack) {
        ok = false;
        rep.notes.push_back("lower diffusion bound violated");
    }
    if (worst_upper < -slack) {
        ok = false;
        rep.notes.push_back("upper diffusion bound violated");
    }
    rep.pass = ok;
    return rep;
}

struct ExponentCheck {
    bool pass = false;
    double slack_1 = 0.0; ///< 1 + alpha - 2 beta
    double slack_2 = 0.0; ///< beta - 1/2
    bool boundary_case = false;
};

/// Exponent condition 1 + alpha - 2 beta > 0 and beta > 1/2. Slacks within
/// 1e-12 of zero are reported as exactly zero (boundary case).
inline ExponentCheck check_exponents(double alpha, double beta)
{
    require(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0, "check_exponents: exponents must lie in (0,1]");
    auto snap = [](double v) { return std::abs(v) <= 1e-12 ? 0.0 : v; };
    ExponentCheck e;
    e.slack_1 = snap(1.0 + alpha - 2.0 * beta);
    e.slack_2 = snap(beta - 0.5);
    e.pass = e.slack_1 > 0.0 && e.slack_2 > 0.0;
    e.boundary_case = e.slack_1 == 0.0 || e.slack_2 == 0.0;
    return e;
}

/// Tabulates, for each eps in a strictly decreasing list, the sup over a grid
/// on `box` of |b^eps - b|, |sigma^eps sigma^eps^T - sigma sigma^T| and the
/// smallest eigenvalue of sigma^eps sigma^eps^T.
inline CheckReport verify_perturbation_assumption(const PerturbationFamily& family, const std::vector<double>& eps_list,
                                                  const Box& box, double tol, std::size_t nodes_per_axis = 101)
{
    require(!eps_list.empty(), "verify_perturbation_assumption: eps_list is empty");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        require(eps_list[i] > 0.0, "verify_perturbation_assumption: eps must be positive");
        require(i == 0 || eps_list[i] < eps_list[i - 1], "verify_perturbation_assumption: eps_list must be decreasing");
    }
    require(tol > 0.0, "verify_perturbation_assumption: tol must be positive");
    box.validate("verify_perturbation_assumption");
    const auto& base = family.base();
    const std::size_t n = base.dim_state();
    require(box.dim() == n, "verify_perturbation_assumption: box dimension mismatch");
    require(nodes_per_axis >= 2, "verify_perturbation_assumption: need at least two nodes per axis");

    std::vector<Vector> nodes;
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        total *= nodes_per_axis;
    }
    nodes.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        Vector x(n);
        std::size_t rem = idx;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = rem % nodes_per_axis;
            rem /= nodes_per_axis;
            x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * static_cast<double>(k) / static_cast<double>(nodes_per_axis - 1);
        }
        nodes.push_back(std::move(x));
    }

    CheckReport r;
    r.check = "perturbation";
    std::vector<double> drift_diff;
    std::vector<double> cov_diff;
    std::vector<double> min_eig;
    for (double eps : eps_list) {
        const CoefficientField pf = family.perturb(eps);
        double sd = 0.0;
        double sc = 0.0;
        double me = std::numeric_limits<double>::infinity();
        for (const auto& x : nodes) {
            sd = std::max(sd, distance(pf.drift(x), base.drift(x)));
            const Matrix cp = pf.covariance(x);
            sc = std::max(sc, detail::matrix_distance(cp, base.covariance(x)));
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> map(
                cp.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(map, Eigen::EigenvaluesOnly);
            me = std::min(me, solver.eigenvalues().minCoeff());
        }
        drift_diff.push_back(sd);
        cov_diff.push_back(sc);
        min_eig.push_back(me);
    }
    r.series["eps"] = eps_list;
    r.series["sup_drift_diff"] = drift_diff;
    r.series["sup_covariance_diff"] = cov_diff;
    r.series["min_eigenvalue"] = min_eig;

    bool ok = true;
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        if (drift_diff[i] > drift_diff[i - 1] * (1.0 + 1e-12) + 1e-300 ||
            cov_diff[i] > cov_diff[i - 1] * (1.0 + 1e-12) + 1e-300) {
            ok = false;
            r.notes.push_back("sup difference does not decrease along eps_list");
            break;
        }
    }
    if (drift_diff.back() > tol || cov_diff.back() > tol) {
        ok = false;
        r.notes.push_back("sup difference at smallest eps exceeds tol");
    }
    for (double e : min_eig) {
        if (!(e > 0.0)) {
            ok = false;
            r.notes.push_back("perturbed covariance is not positive definite");
            break;
        }
    }
    r.pass = ok;
    return r;
}

// ---------------------------------------------------------------------------
// Built-in one-dimensional fields.

namespace builtin {

inline double capped_abs(double x, double cap) { return std::min(std::abs(x), cap); }

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

/// b = 0, sigma = s (constant, n = m = 1). Uniformly elliptic.
inline CoefficientField constant_heat(double sigma = std::sqrt(2.0))
{
    require(sigma > 0.0, "constant_heat: sigma must be positive");
    return CoefficientField(
        "constant_heat", 1, 1, [](std::span<const double>, std::span<double> out) { out[0] = 0.0; },
        [sigma](std::span<const double>, std::span<double> out) { out[0] = sigma; }, 0.0, sigma,
        HolderData{1.0, 0.75, 1.0, 1.0});
}

/// b(x) = min(|x|, cap)^alpha, sigma = 0.
inline CoefficientField peano_alpha(double alpha, double cap = 1.0)
{
    require(alpha > 0.0 && alpha < 1.0, "peano_alpha: alpha must lie in (0,1)");
    require(cap > 0.0, "peano_alpha: cap must be positive");
    const double beta = 0.5 + alpha / 4.0;
    return CoefficientField(
        "peano_alpha", 1, 1,
        [alpha, cap](std::span<const double> x, std::span<double> out) { out[0] = std::pow(capped_abs(x[0], cap), alpha); },
        [](std::span<const double>, std::span<double> out) { out[0] = 0.0; }, std::pow(cap, alpha), 0.0,
        HolderData{alpha, beta, 1.0, 1.0}, {DegeneratePoint{{0.0}, cap}});
}

/// b(x) = 3 x^(1/3), sigma(x) = 3 x^(2/3), both saturated at |x| = cap.
inline CoefficientField cubic(double cap = 1.0)
{
    require(cap > 0.0, "cubic: cap must be positive");
    return CoefficientField(
        "cubic", 1, 1,
        [cap](std::span<const double> x, std::span<double> out) { out[0] = 3.0 * sgn(x[0]) * std::cbrt(capped_abs(x[0], cap)); },
        [cap](std::span<const double> x, std::span<double> out) {
            const double c = std::cbrt(capped_abs(x[0], cap));
            out[0] = 3.0 * c * c;
        },
        3.0 * std::cbrt(cap), 3.0 * std::cbrt(cap) * std::cbrt(cap),
        HolderData{1.0 / 3.0, 2.0 / 3.0, 3.0 * std::cbrt(4.0), 9.0}, {DegeneratePoint{{0.0}, cap}});
}

/// b(x) = sgn(x) |x|^(1/2) for |x| <= cap, saturated beyond; sigma = 0.
inline CoefficientField signed_sqrt(double cap = 1.0)
{
    require(cap > 0.0, "signed_sqrt: cap must be positive");
    return CoefficientField(
        "signed_sqrt", 1, 1,
        [cap](std::span<const double> x, std::span<double> out) { out[0] = sgn(x[0]) * std::sqrt(capped_abs(x[0], cap)); },
        [](std::span<const double>, std::span<double> out) { out[0] = 0.0; }, std::sqrt(cap), 0.0,
        HolderData{0.5, 0.6, std::sqrt(2.0), 1.0}, {DegeneratePoint{{0.0}, cap}});
}

/// b(x) = min(|x|,cap)^alpha, sigma(x) = min(|x|,cap)^beta.
inline CoefficientField power_pair(double alpha, double beta, double cap = 1.0)
{
    require(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0, "power_pair: exponents must lie in (0,1]");
    require(cap > 0.0, "power_pair: cap must be positive");
    return CoefficientField(
        "power_pair", 1, 1,
        [alpha, cap](std::span<const double> x, std::span<double> out) { out[0] = std::pow(capped_abs(x[0], cap), alpha); },
        [beta, cap](std::span<const double> x, std::span<double> out) { out[0] = std::pow(capped_abs(x[0], cap), beta); },
        std::pow(cap, alpha), std::pow(cap, beta), HolderData{alpha, beta, 1.0, 1.0}, {DegeneratePoint{{0.0}, cap}});
}

/// b = c, sigma = 0. Not degenerate anywhere in the Hoelder sense.
inline CoefficientField constant_drift(double c)
{
    return CoefficientField(
        "constant_drift", 1, 1, [c](std::span<const double>, std::span<double> out) { out[0] = c; },
        [](std::span<const double>, std::span<double> out) { out[0] = 0.0; }, std::abs(c), 0.0, HolderData{1.0, 1.0, 1.0, 1.0});
}

} // namespace builtin

} // namespace zeronoise
