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
#include <zeronoise/mc_engine.hpp>

#include <json.hpp>

#include <array>
#include <filesystem>
#include <fstream>

namespace zeronoise {

enum class BoundaryCondition { frozen_dirichlet, one_sided_extrapolation };

inline std::string to_string(BoundaryCondition b)
{
    return b == BoundaryCondition::frozen_dirichlet ? "frozen_dirichlet" : "one_sided_extrapolation";
}

inline BoundaryCondition boundary_from_string(const std::string& s)
{
    if (s == "frozen_dirichlet") {
        return BoundaryCondition::frozen_dirichlet;
    }
    if (s == "one_sided_extrapolation") {
        return BoundaryCondition::one_sided_extrapolation;
    }
    throw DomainError("unknown boundary condition '" + s + "'");
}

/// Uniform space-time grid on a box in R^n (n = 1 or 2). Every `save_stride`
/// steps a time slice is kept by the solver.
struct GridSpec {
    Box box;
    double h = 0.0;
    double T = 0.0;
    double dt = 0.0;
    BoundaryCondition boundary = BoundaryCondition::frozen_dirichlet;
    std::size_t save_stride = 1;

    std::size_t dim() const { return box.dim(); }

    std::size_t axis_nodes(std::size_t axis) const
    {
        const double q = (box.hi[axis] - box.lo[axis]) / h;
        return static_cast<std::size_t>(std::llround(q)) + 1;
    }

    std::size_t node_count() const
    {
        std::size_t c = 1;
        for (std::size_t i = 0; i < dim(); ++i) {
            c *= axis_nodes(i);
        }
        return c;
    }

    std::size_t steps() const { return grid_steps(T, dt, "GridSpec"); }

    std::size_t saved_slices() const { return steps() / save_stride + 1; }

    double saved_dt() const { return dt * static_cast<double>(save_stride); }

    /// Multi-index of a flat node index; axis 0 varies fastest.
    std::array<std::size_t, 2> multi_index(std::size_t idx) const
    {
        std::array<std::size_t, 2> k{0, 0};
        const std::size_t n0 = axis_nodes(0);
        k[0] = idx % n0;
        if (dim() > 1) {
            k[1] = idx / n0;
        }
        return k;
    }

    Vector node(std::size_t idx) const
    {
        const auto k = multi_index(idx);
        Vector x(dim());
        for (std::size_t i = 0; i < dim(); ++i) {
            x[i] = box.lo[i] + h * static_cast<double>(k[i]);
        }
        return x;
    }

    /// Flat index of the node nearest to x (clamped to the grid).
    std::size_t nearest_node(std::span<const double> x) const
    {
        std::size_t idx = 0;
        std::size_t mult = 1;
        for (std::size_t i = 0; i < dim(); ++i) {
            const double q = std::round((x[i] - box.lo[i]) / h);
            const auto k = static_cast<std::size_t>(std::clamp(q, 0.0, static_cast<double>(axis_nodes(i) - 1)));
            idx += k * mult;
            mult *= axis_nodes(i);
        }
        return idx;
    }

    void validate() const
    {
        box.validate("GridSpec");
        require(dim() == 1 || dim() == 2, "GridSpec: only one- and two-dimensional grids are supported");
        require(h > 0.0 && std::isfinite(h), "GridSpec: h must be positive");
        require(T > 0.0 && dt > 0.0 && dt <= T, "GridSpec: need 0 < dt <= T");
        for (std::size_t i = 0; i < dim(); ++i) {
            const double q = (box.hi[i] - box.lo[i]) / h;
            require(std::abs(q - std::round(q)) <= 1e-6 * std::max(1.0, q), "GridSpec: box extent is not a multiple of h");
            require(std::round(q) >= 2, "GridSpec: need at least three nodes per axis");
        }
        require(save_stride >= 1 && steps() % save_stride == 0, "GridSpec: save_stride must divide the step count");
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Largest total jump rate of the explicit scheme over the nodes of `box`:
/// sum_i (sigma sigma^T)_ii / h^2 - 2 sum_{i<j} |a_ij| / h^2 + sum_i |b_i| / h, a = sigma sigma^T / 2.
/// The explicit step is monotone iff dt * rate <= 1 at every node.
inline double node_rate(const CoefficientField& field, std::span<const double> x, double h)
{
    const std::size_t n = field.dim_state();
    const Matrix cov = field.covariance(x);
    const Vector b = field.drift(x);
    double rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        rate += cov(i, i) / (h * h) + std::abs(b[i]) / h;
        for (std::size_t j = i + 1; j < n; ++j) {
            rate -= std::abs(cov(i, j)) / (h * h);
        }
    }
    return rate;
}

inline double max_rate(const CoefficientField& field, const Box& box, double h)
{
    GridSpec probe{box, h, 1.0, 1.0};
    double r = 0.0;
    const std::size_t count = probe.node_count();
    for (std::size_t idx = 0; idx < count; ++idx) {
        r = std::max(r, node_rate(field, probe.node(idx), h));
    }
    return r;
}

/// Grid whose dt satisfies the monotonicity condition for every field given,
/// with T/dt integral. `slices` > 0 keeps that many time slices after t = 0.
inline GridSpec make_grid(const Box& box, double h, double T, const std::vector<CoefficientField>& fields,
                          BoundaryCondition boundary = BoundaryCondition::frozen_dirichlet, std::size_t slices = 0,
                          double safety = 0.95)
{
    require(!fields.empty(), "make_grid: no fields");
    require(safety > 0.0 && safety <= 1.0, "make_grid: safety must lie in (0,1]");
    GridSpec g{box, h, T, T, boundary, 1};
    g.validate();
    double rate = 0.0;
    for (const auto& f : fields) {
        require(f.dim_state() == box.dim(), "make_grid: field dimension mismatch");
        rate = std::max(rate, max_rate(f, box, h));
    }
    auto steps = static_cast<std::size_t>(std::ceil(T * rate / safety));
    steps = std::max<std::size_t>(steps, 1);
    if (slices > 0) {
        steps = (steps + slices - 1) / slices * slices;
        g.save_stride = steps / slices;
    }
    g.dt = T / static_cast<double>(steps);
    return g;
}

/// Grid-sampled u(x,t): saved time slices of a space-time solution.
class LatticeFunction {
public:
    LatticeFunction() = default;
    LatticeFunction(GridSpec grid, std::vector<double> times, std::vector<double> values, std::string payoff_tag,
                    std::string field_tag, double eps)
        : grid_(std::move(grid))
        , times_(std::move(times))
        , values_(std::move(values))
        , payoff_tag_(std::move(payoff_tag))
        , field_tag_(std::move(field_tag))
        , eps_(eps)
    {
        require(values_.size() == times_.size() * grid_.node_count(), "LatticeFunction: size mismatch");
    }

    const GridSpec& grid() const { return grid_; }
    const std::vector<double>& times() const { return times_; }
    const std::string& payoff_tag() const { return payoff_tag_; }
    const std::string& field_tag() const { return field_tag_; }
    double eps() const { return eps_; }
    std::size_t slice_count() const { return times_.size(); }
    std::size_t node_count() const { return grid_.node_count(); }
    std::span<const double> values() const { return values_; }

    std::span<const double> slice(std::size_t k) const
    {
        return std::span<const double>(values_).subspan(k * node_count(), node_count());
    }

    double at(std::size_t node, std::size_t slice_index) const { return values_[slice_index * node_count() + node]; }

    std::size_t slice_index(double t) const
    {
        for (std::size_t k = 0; k < times_.size(); ++k) {
            if (std::abs(times_[k] - t) <= 1e-9 * std::max(1.0, grid_.T)) {
                return k;
            }
        }
        throw DomainError("LatticeFunction: no saved slice at t=" + format_double(t));
    }

    bool same_layout(const LatticeFunction& o) const { return grid_ == o.grid_ && times_ == o.times_; }

private:
    GridSpec grid_;
    std::vector<double> times_;
    std::vector<double> values_;
    std::string payoff_tag_;
    std::string field_tag_;
    double eps_ = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// Precomputed explicit-step weights. Each interior node has `width`
/// (offset, weight) pairs; the center weight is 1 - sum of the others.
struct Stencil {
    std::size_t width = 0;
    std::vector<std::ptrdiff_t> offsets;
    std::vector<double> weights;  // node-major, `width` per node
    std::vector<std::uint8_t> interior;
    std::vector<std::size_t> boundary_source;  // nearest interior node (one-sided extrapolation)
};

inline std::string node_report(const GridSpec& g, std::size_t idx)
{
    return "node " + std::to_string(idx) + " at x=(" + format_vector(g.node(idx), ',') + ")";
}

/// Kushner-Dupuis weights: upwind drift, central diagonal second differences
/// and the wide-stencil splitting of cross derivatives. Throws when the
/// diffusion is not diagonally dominant or the CFL condition fails.
inline Stencil build_stencil(const CoefficientField& field, const GridSpec& g)
{
    g.validate();
    require(field.dim_state() == g.dim(), "finite differences: field and grid dimensions differ");
    const std::size_t n = g.dim();
    const std::size_t count = g.node_count();
    const double h = g.h;
    const double h2 = h * h;
    const auto n0 = static_cast<std::ptrdiff_t>(g.axis_nodes(0));

    Stencil s;
    if (n == 1) {
        s.width = 3;
        s.offsets = {0, 1, -1};
    } else {
        // center, +x, -x, +y, -y, (+x+y), (-x-y), (+x-y), (-x+y)
        s.width = 9;
        s.offsets = {0, 1, -1, n0, -n0, 1 + n0, -1 - n0, 1 - n0, -1 + n0};
    }
    s.weights.assign(count * s.width, 0.0);
    s.interior.assign(count, 0);
    s.boundary_source.assign(count, 0);

    for (std::size_t idx = 0; idx < count; ++idx) {
        const auto k = g.multi_index(idx);
        bool inner = true;
        std::array<std::size_t, 2> src = k;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t last = g.axis_nodes(i) - 1;
            if (k[i] == 0 || k[i] == last) {
                inner = false;
            }
            src[i] = std::clamp<std::size_t>(k[i], 1, last - 1);
        }
        s.boundary_source[idx] = src[0] + (n > 1 ? src[1] * g.axis_nodes(0) : 0);
        if (!inner) {
            continue;
        }
        s.interior[idx] = 1;
        const Vector x = g.node(idx);
        const Vector b = field.drift(x);
        Matrix a = field.covariance(x);
        for (double& v : a.data()) {
            v *= 0.5;
        }
        double* w = &s.weights[idx * s.width];
        if (n == 1) {
            w[1] = g.dt * (a(0, 0) / h2 + std::max(b[0], 0.0) / h);
            w[2] = g.dt * (a(0, 0) / h2 + std::max(-b[0], 0.0) / h);
        } else {
            const double a01 = 0.5 * (a(0, 1) + a(1, 0));
            for (std::size_t i = 0; i < 2; ++i) {
                const double off = a(i, i) - std::abs(a01);
                if (off < -1e-14 * std::max(1.0, a(i, i))) {
                    throw DomainError("finite differences: diffusion not diagonally dominant at " + node_report(g, idx) +
                                      " (monotonicity would be lost)");
                }
                w[1 + 2 * i] = g.dt * (std::max(off, 0.0) / h2 + std::max(b[i], 0.0) / h);
                w[2 + 2 * i] = g.dt * (std::max(off, 0.0) / h2 + std::max(-b[i], 0.0) / h);
            }
            const double c = g.dt * std::abs(a01) / h2;
            if (a01 >= 0.0) {
                w[5] = c;
                w[6] = c;
            } else {
                w[7] = c;
                w[8] = c;
            }
        }
        double total = 0.0;
        for (std::size_t j = 1; j < s.width; ++j) {
            total += w[j];
        }
        if (total > 1.0 + 1e-12) {
            throw DomainError("finite differences: CFL condition violated at " + node_report(g, idx) +
                              " (dt*rate=" + format_double(total) + ")");
        }
        w[0] = std::max(0.0, 1.0 - total);
    }
    return s;
}

/// One explicit step. Interior values are nonnegative combinations of the
/// stencil values, clamped to the stencil range to absorb rounding.
inline void apply_stencil(const Stencil& s, const GridSpec& g, std::span<const double> u, std::span<double> out)
{
    const std::size_t count = u.size();
    if (s.width == 3) {
        const double* w = s.weights.data();
        for (std::size_t i = 1; i + 1 < count; ++i) {
            const double c = u[i], r = u[i + 1], l = u[i - 1];
            const double v = w[3 * i] * c + w[3 * i + 1] * r + w[3 * i + 2] * l;
            const double lo = std::min(c, std::min(r, l));
            const double hi = std::max(c, std::max(r, l));
            out[i] = std::min(std::max(v, lo), hi);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            if (!s.interior[i]) {
                continue;
            }
            const double* w = &s.weights[i * s.width];
            double v = 0.0;
            double lo = u[i];
            double hi = u[i];
            for (std::size_t j = 0; j < s.width; ++j) {
                const double uj = u[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + s.offsets[j])];
                v += w[j] * uj;
                if (w[j] > 0.0) {
                    lo = std::min(lo, uj);
                    hi = std::max(hi, uj);
                }
            }
            out[i] = std::min(std::max(v, lo), hi);
        }
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (s.interior[i]) {
            continue;
        }
        out[i] = g.boundary == BoundaryCondition::frozen_dirichlet ? u[i] : out[s.boundary_source[i]];
    }
}

} // namespace detail

/// Advances one time slice of du/dt = (1/2) Tr(sigma sigma^T D^2 u) + b . Du.
inline Vector step(std::span<const double> u_slice, const CoefficientField& field, const GridSpec& grid)
{
    require(u_slice.size() == grid.node_count(), "step: slice size does not match grid");
    const auto stencil = detail::build_stencil(field, grid);
    Vector out(u_slice.size());
    detail::apply_stencil(stencil, grid, u_slice, out);
    return out;
}

/// Initial data u(x,0) = f(x) sampled on the grid.
inline Vector sample_payoff(const Payoff& f, const GridSpec& grid)
{
    Vector v(grid.node_count());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = f(grid.node(i));
    }
    return v;
}

/// Solves the backward Kolmogorov equation for initial datum `f` on `grid`
/// and keeps every `save_stride`-th slice.
inline LatticeFunction solve(const CoefficientField& field, const Payoff& f, const GridSpec& grid, double eps = std::numeric_limits<double>::quiet_NaN())
{
    const auto stencil = detail::build_stencil(field, grid);
    const std::size_t steps = grid.steps();
    const std::size_t count = grid.node_count();
    Vector cur = sample_payoff(f, grid);
    Vector next(count);
    std::vector<double> times{0.0};
    std::vector<double> values(cur.begin(), cur.end());
    values.reserve(grid.saved_slices() * count);
    for (std::size_t k = 1; k <= steps; ++k) {
        detail::apply_stencil(stencil, grid, cur, next);
        std::swap(cur, next);
        if (k % grid.save_stride == 0) {
            times.push_back(grid.dt * static_cast<double>(k));
            values.insert(values.end(), cur.begin(), cur.end());
        }
    }
    return LatticeFunction(grid, std::move(times), std::move(values), f.tag, field.tag(), eps);
}

// ---------------------------------------------------------------------------
// eps sweep

struct SweepWindow {
    Box box;
    double t_max = 0.0;
};

/// Solutions u^eps for a decreasing eps schedule on a common grid, with the
/// Cauchy table D(i,j) = sup over window x [0, t_max] of |u^eps_i - u^eps_j|.
struct SweepReport {
    std::vector<double> eps;
    GridSpec grid;
    SweepWindow window;
    double influence_margin = 0.0;
    std::vector<LatticeFunction> solutions;
    std::vector<std::vector<double>> cauchy;
    std::vector<std::size_t> window_nodes;
    std::vector<std::size_t> window_slices;

    std::size_t size() const { return eps.size(); }
    const LatticeFunction& selected_limit() const { return solutions.back(); }

    /// D(k, k+1) for consecutive schedule entries.
    std::vector<double> increments() const
    {
        std::vector<double> inc;
        for (std::size_t k = 0; k + 1 < eps.size(); ++k) {
            inc.push_back(cauchy[k][k + 1]);
        }
        return inc;
    }

    double error_bar() const { return cauchy[size() - 1][size() - 2]; }

    /// False when the last increment fails to shrink.
    bool converging() const
    {
        const std::size_t L = size() - 1;
        return cauchy[L][L - 1] < cauchy[L - 1][L - 2];
    }

    bool increments_strictly_decreasing() const
    {
        const auto inc = increments();
        for (std::size_t k = 1; k < inc.size(); ++k) {
            if (!(inc[k] < inc[k - 1])) {
                return false;
            }
        }
        return true;
    }

    /// Every column j of the upper triangle shrinks toward the diagonal:
    /// D(0,j) > D(1,j) > ... > D(j-1,j).
    bool columns_strictly_decreasing() const
    {
        for (std::size_t j = 2; j < size(); ++j) {
            for (std::size_t i = 1; i < j; ++i) {
                if (!(cauchy[i][j] < cauchy[i - 1][j])) {
                    return false;
                }
            }
        }
        return true;
    }

    /// First-order-in-eps extrapolation of the last two solutions. Heuristic:
    /// no convergence rate in eps is known.
    double extrapolated(std::size_t node, std::size_t slice) const
    {
        const std::size_t L = size() - 1;
        const double a = solutions[L].at(node, slice);
        const double b = solutions[L - 1].at(node, slice);
        return a + (a - b) * eps[L] / (eps[L - 1] - eps[L]);
    }
};

/// Margin between the reporting window and the artificial boundary:
/// T sup|b| + 6 sqrt(T (sup|sigma|^2 + eps_max)).
inline double influence_margin(const CoefficientField& base, double T, double eps_max)
{
    return T * base.sup_b() + 6.0 * std::sqrt(T * (base.sup_sigma() * base.sup_sigma() + eps_max));
}

/// Common grid for a sweep: dt satisfies the monotonicity condition for every
/// perturbed field of the schedule.
inline GridSpec make_sweep_grid(const PerturbationFamily& family, const std::vector<double>& eps_list, const Box& box,
                                double h, double T, BoundaryCondition boundary = BoundaryCondition::frozen_dirichlet,
                                std::size_t slices = 0)
{
    std::vector<CoefficientField> fields;
    for (double e : eps_list) {
        fields.push_back(family.perturb(e));
    }
    return make_grid(box, h, T, fields, boundary, slices);
}

/// Box that leaves the influence margin (plus two cells) around `window`,
/// snapped to multiples of h.
inline Box box_for_window(const PerturbationFamily& family, const Box& window, double T, double eps_max, double h)
{
    const double m = influence_margin(family.base(), T, eps_max) + 2.0 * h;
    Box b = window;
    for (std::size_t i = 0; i < b.dim(); ++i) {
        b.lo[i] = h * std::floor((window.lo[i] - m) / h);
        b.hi[i] = h * std::ceil((window.hi[i] + m) / h);
    }
    return b;
}

namespace detail {

inline std::vector<std::size_t> nodes_in(const GridSpec& g, const Box& window)
{
    std::vector<std::size_t> out;
    const double slack = 1e-9 * g.h;
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        if (window.contains(g.node(idx), slack)) {
            out.push_back(idx);
        }
    }
    return out;
}

inline std::vector<std::size_t> slices_upto(const LatticeFunction& u, double t_max)
{
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < u.slice_count(); ++k) {
        if (u.times()[k] <= t_max + 1e-9 * std::max(1.0, t_max)) {
            out.push_back(k);
        }
    }
    return out;
}

inline double sup_diff(const LatticeFunction& a, const LatticeFunction& b, const std::vector<std::size_t>& nodes,
                       const std::vector<std::size_t>& slices)
{
    double d = 0.0;
    for (std::size_t k : slices) {
        for (std::size_t i : nodes) {
            d = std::max(d, std::abs(a.at(i, k) - b.at(i, k)));
        }
    }
    return d;
}

} // namespace detail

inline SweepReport eps_sweep(const PerturbationFamily& family, const Payoff& f, const std::vector<double>& eps_list,
                             const GridSpec& grid, const SweepWindow& window, unsigned workers = default_workers())
{
    require(eps_list.size() >= 3, "eps_sweep: need at least three eps values");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        require(eps_list[i] > 0.0, "eps_sweep: eps must be positive");
        require(i == 0 || eps_list[i] < eps_list[i - 1], "eps_sweep: eps_list must be strictly decreasing");
    }
    grid.validate();
    window.box.validate("eps_sweep window");
    require(window.box.dim() == grid.dim(), "eps_sweep: window dimension mismatch");
    require(window.t_max > 0.0 && window.t_max <= grid.T * (1.0 + 1e-12), "eps_sweep: window time must lie in (0, T]");
    const double margin = influence_margin(family.base(), grid.T, eps_list.front());
    require(window.box.inside_with_margin(grid.box, margin - 1e-9),
            "eps_sweep: window is within the influence margin " + format_double(margin) + " of the grid boundary");

    SweepReport rep;
    rep.eps = eps_list;
    rep.grid = grid;
    rep.window = window;
    rep.influence_margin = margin;
    rep.solutions.resize(eps_list.size());
    parallel_for(eps_list.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            rep.solutions[i] = solve(family.perturb(eps_list[i]), f, grid, eps_list[i]);
        }
    });
    rep.window_nodes = detail::nodes_in(grid, window.box);
    rep.window_slices = detail::slices_upto(rep.solutions.front(), window.t_max);
    const std::size_t L = eps_list.size();
    rep.cauchy.assign(L, std::vector<double>(L, 0.0));
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = i + 1; j < L; ++j) {
            const double d = detail::sup_diff(rep.solutions[i], rep.solutions[j], rep.window_nodes, rep.window_slices);
            rep.cauchy[i][j] = d;
            rep.cauchy[j][i] = d;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Relaxed semilimits

struct SemilimitLevel {
    double delta = 0.0;
    double gap = 0.0;            ///< sup over the window of u* - u_*
    std::size_t eps_used = 0;    ///< number of schedule entries with eps < delta
};

struct SemilimitReport {
    LatticeFunction u_star;   ///< at the smallest delta, restricted to the window
    LatticeFunction u_lower;
    std::vector<SemilimitLevel> levels;
};

/// Discrete relaxed semilimits
///   u*(x,t)  = sup { u^eps(y,s) : |x-y| + |t-s| < delta, eps < delta },
///   u_*(x,t) = inf { ... same set ... },
/// evaluated on window nodes, with the sup/inf over grid nodes and saved slices.
inline SemilimitReport semilimits(const SweepReport& sweep, const std::vector<double>& delta_list)
{
    require(!delta_list.empty(), "semilimits: empty delta_list");
    const GridSpec& g = sweep.grid;
    const double res = std::max(g.h, g.saved_dt());
    for (std::size_t i = 0; i < delta_list.size(); ++i) {
        require(i == 0 || delta_list[i] < delta_list[i - 1], "semilimits: delta_list must be decreasing");
        require(delta_list[i] >= res * (1.0 - 1e-9),
                "semilimits: delta " + format_double(delta_list[i]) + " is finer than the grid resolution " + format_double(res));
    }

    const std::size_t n = g.dim();
    const auto& base = sweep.solutions.front();
    const std::size_t slices = base.slice_count();
    const double dts = g.saved_dt();
    const auto n0 = static_cast<std::ptrdiff_t>(g.axis_nodes(0));
    const auto n1 = static_cast<std::ptrdiff_t>(n > 1 ? g.axis_nodes(1) : 1);

    // window sub-grid layout
    const auto k_first = g.multi_index(sweep.window_nodes.front());
    const auto k_last = g.multi_index(sweep.window_nodes.back());
    GridSpec wg = g;
    for (std::size_t i = 0; i < n; ++i) {
        wg.box.lo[i] = g.box.lo[i] + g.h * static_cast<double>(k_first[i]);
        wg.box.hi[i] = g.box.lo[i] + g.h * static_cast<double>(k_last[i]);
    }
    const std::size_t ws = sweep.window_slices.size();
    wg.T = base.times()[sweep.window_slices.back()];
    std::vector<double> wtimes;
    for (std::size_t k : sweep.window_slices) {
        wtimes.push_back(base.times()[k]);
    }

    SemilimitReport rep;
    std::vector<double> star, lower;
    for (double delta : delta_list) {
        std::vector<std::size_t> members;
        for (std::size_t e = 0; e < sweep.size(); ++e) {
            if (sweep.eps[e] < delta) {
                members.push_back(e);
            }
        }
        require(!members.empty(), "semilimits: no eps in the sweep is below delta=" + format_double(delta));
        const double lim = delta * (1.0 - 1e-12);
        const auto reach = static_cast<std::ptrdiff_t>(std::floor(delta / g.h));
        struct Offset {
            std::ptrdiff_t dx, dy;
            std::ptrdiff_t dt_max;
        };
        std::vector<Offset> offsets;
        for (std::ptrdiff_t oy = (n > 1 ? -reach : 0); oy <= (n > 1 ? reach : 0); ++oy) {
            for (std::ptrdiff_t ox = -reach; ox <= reach; ++ox) {
                const double sd = g.h * std::sqrt(static_cast<double>(ox * ox + oy * oy));
                if (!(sd < lim)) {
                    continue;
                }
                const double rem = lim - sd;
                auto tmax = static_cast<std::ptrdiff_t>(std::floor(rem / dts));
                if (static_cast<double>(tmax) * dts >= rem) {
                    --tmax;
                }
                offsets.push_back({ox, oy, std::max<std::ptrdiff_t>(tmax, 0)});
            }
        }

        star.assign(sweep.window_nodes.size() * ws, 0.0);
        lower.assign(star.size(), 0.0);
        double gap = 0.0;
        for (std::size_t wk = 0; wk < ws; ++wk) {
            const auto k = static_cast<std::ptrdiff_t>(sweep.window_slices[wk]);
            for (std::size_t wi = 0; wi < sweep.window_nodes.size(); ++wi) {
                const auto mi = g.multi_index(sweep.window_nodes[wi]);
                double hi = -std::numeric_limits<double>::infinity();
                double lo = std::numeric_limits<double>::infinity();
                for (const auto& o : offsets) {
                    const auto x = static_cast<std::ptrdiff_t>(mi[0]) + o.dx;
                    const auto y = static_cast<std::ptrdiff_t>(mi[1]) + o.dy;
                    if (x < 0 || x >= n0 || y < 0 || y >= n1) {
                        continue;
                    }
                    const auto node = static_cast<std::size_t>(x + y * n0);
                    const std::ptrdiff_t s0 = std::max<std::ptrdiff_t>(0, k - o.dt_max);
                    const std::ptrdiff_t s1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(slices) - 1, k + o.dt_max);
                    for (std::size_t e : members) {
                        const auto& u = sweep.solutions[e];
                        for (std::ptrdiff_t s = s0; s <= s1; ++s) {
                            const double v = u.at(node, static_cast<std::size_t>(s));
                            hi = std::max(hi, v);
                            lo = std::min(lo, v);
                        }
                    }
                }
                star[wk * sweep.window_nodes.size() + wi] = hi;
                lower[wk * sweep.window_nodes.size() + wi] = lo;
                gap = std::max(gap, hi - lo);
            }
        }
        rep.levels.push_back({delta, gap, members.size()});
    }
    const std::string tag = base.payoff_tag();
    rep.u_star = LatticeFunction(wg, wtimes, std::move(star), tag, base.field_tag() + ":upper_semilimit", 0.0);
    rep.u_lower = LatticeFunction(wg, wtimes, std::move(lower), tag, base.field_tag() + ":lower_semilimit", 0.0);
    return rep;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::ordered_json grid_json(const GridSpec& g)
{
    nlohmann::ordered_json j;
    j["box_lo"] = g.box.lo;
    j["box_hi"] = g.box.hi;
    j["h"] = g.h;
    j["dt"] = g.dt;
    j["T"] = g.T;
    j["save_stride"] = g.save_stride;
    j["boundary"] = to_string(g.boundary);
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < g.dim(); ++i) {
        nodes.push_back(g.axis_nodes(i));
    }
    j["nodes_per_axis"] = nodes;
    return j;
}

/// Writes `<prefix>.bin` (float64-le, slice-major, axis 0 fastest) and a JSON header.
inline void write_lattice(const LatticeFunction& u, const std::filesystem::path& prefix)
{
    auto bin = prefix;
    bin += ".bin";
    auto meta = prefix;
    meta += ".json";
    {
        std::ofstream out(bin, std::ios::binary);
        require(static_cast<bool>(out), "write_lattice: cannot open " + bin.string());
        out.write(reinterpret_cast<const char*>(u.values().data()),
                  static_cast<std::streamsize>(u.values().size() * sizeof(double)));
    }
    nlohmann::ordered_json j = grid_json(u.grid());
    j["field_tag"] = u.field_tag();
    if (std::isnan(u.eps())) {
        j["eps"] = nullptr;
    } else {
        j["eps"] = u.eps();
    }
    j["payoff_tag"] = u.payoff_tag();
    j["times"] = u.times();
    j["dtype"] = "float64-le";
    j["layout"] = "slice, node (axis 0 fastest)";
    std::ofstream(meta) << j.dump(2) << "\n";
}

inline nlohmann::ordered_json sweep_json(const SweepReport& s)
{
    nlohmann::ordered_json j;
    j["eps"] = s.eps;
    j["grid"] = grid_json(s.grid);
    j["window"] = {{"lo", s.window.box.lo}, {"hi", s.window.box.hi}, {"t_max", s.window.t_max}};
    j["influence_margin"] = s.influence_margin;
    j["cauchy"] = s.cauchy;
    j["increments"] = s.increments();
    j["error_bar"] = s.error_bar();
    j["converging"] = s.converging();
    j["increments_strictly_decreasing"] = s.increments_strictly_decreasing();
    j["columns_strictly_decreasing"] = s.columns_strictly_decreasing();
    return j;
}

inline const char* probe_line_csv_header() { return "eps,t,x,value"; }

/// Values of every solution along the window nodes at the requested times.
inline std::string probe_lines_csv(const SweepReport& s, const std::vector<double>& times)
{
    std::string out = std::string(probe_line_csv_header()) + "\n";
    for (std::size_t e = 0; e < s.size(); ++e) {
        const auto& u = s.solutions[e];
        for (double t : times) {
            const std::size_t k = u.slice_index(t);
            for (std::size_t i : s.window_nodes) {
                out += format_double(s.eps[e]) + "," + format_double(u.times()[k]) + "," +
                       format_vector(s.grid.node(i)) + "," + format_double(u.at(i, k)) + "\n";
            }
        }
    }
    return out;
}

} // namespace zeronoise
