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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace zeronoise {

using Vector = std::vector<double>;

/// Raised whenever an operation is called outside its domain: invalid
/// parameters, violated preconditions, or a numerical refusal (for example a
/// finite-difference stencil that would lose monotonicity).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw DomainError(message);
    }
}

/// Dense row-major matrix. Small sizes only (state and noise dimensions).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    /// this * this^T
    Matrix gram() const
    {
        Matrix g(rows_, rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < rows_; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < cols_; ++k) {
                    s += (*this)(i, k) * (*this)(j, k);
                }
                g(i, j) = s;
            }
        }
        return g;
    }

    double frobenius_norm() const
    {
        double s = 0.0;
        for (double v : data_) {
            s += v * v;
        }
        return std::sqrt(s);
    }

    double trace() const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) {
            s += (*this)(i, i);
        }
        return s;
    }

    friend Matrix operator-(const Matrix& a, const Matrix& b)
    {
        require(a.rows_ == b.rows_ && a.cols_ == b.cols_, "matrix shape mismatch");
        Matrix r = a;
        for (std::size_t i = 0; i < r.data_.size(); ++i) {
            r.data_[i] -= b.data_[i];
        }
        return r;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double norm(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

inline double distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

/// Axis-aligned box [lo, hi] in R^n.
struct Box {
    Vector lo;
    Vector hi;

    static Box interval(double a, double b) { return Box{{a}, {b}}; }

    std::size_t dim() const { return lo.size(); }

    double volume() const
    {
        double v = 1.0;
        for (std::size_t i = 0; i < lo.size(); ++i) {
            v *= hi[i] - lo[i];
        }
        return v;
    }

    double diameter() const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < lo.size(); ++i) {
            s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
        }
        return std::sqrt(s);
    }

    bool contains(std::span<const double> x, double slack = 0.0) const
    {
        for (std::size_t i = 0; i < lo.size(); ++i) {
            if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) {
                return false;
            }
        }
        return true;
    }

    /// True when this box, grown by `margin` on every side, still fits in `outer`.
    bool inside_with_margin(const Box& outer, double margin) const
    {
        for (std::size_t i = 0; i < lo.size(); ++i) {
            if (lo[i] - margin < outer.lo[i] || hi[i] + margin > outer.hi[i]) {
                return false;
            }
        }
        return true;
    }

    void validate(const std::string& what) const
    {
        require(!lo.empty() && lo.size() == hi.size(), what + ": box dimension mismatch");
        for (std::size_t i = 0; i < lo.size(); ++i) {
            require(std::isfinite(lo[i]) && std::isfinite(hi[i]), what + ": box bounds must be finite");
            require(hi[i] > lo[i], what + ": box has zero volume");
        }
    }

    friend bool operator==(const Box&, const Box&) = default;
};

/// Pairwise (cascade) summation in a fixed tree order. The result depends only
/// on the input sequence, never on how it was produced.
inline double pairwise_sum(std::span<const double> values)
{
    constexpr std::size_t leaf = 8;
    if (values.size() <= leaf) {
        double s = 0.0;
        for (double v : values) {
            s += v;
        }
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

struct SampleMoments {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Mean and standard error (sample standard deviation / sqrt(N)).
inline SampleMoments sample_moments(std::span<const double> values)
{
    const std::size_t n = values.size();
    require(n > 0, "sample_moments: empty sample");
    SampleMoments m;
    m.mean = pairwise_sum(values) / static_cast<double>(n);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    // rounding in the sum must not push an average outside the sample range
    m.mean = std::clamp(m.mean, *lo, *hi);
    if (n > 1 && *lo != *hi) {
        std::vector<double> sq(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = values[i] - m.mean;
            sq[i] = d * d;
        }
        const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
        m.std_error = std::sqrt(var / static_cast<double>(n));
    }
    return m;
}

inline unsigned default_workers()
{
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1u : hc;
}

/// Runs body(begin, end) over [0, count) split into contiguous chunks. Bodies
/// must write only to index-owned slots so results do not depend on `workers`.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body)
{
    if (count == 0) {
        return;
    }
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::min<std::size_t>(count, 1024))));
    if (workers == 1) {
        body(std::size_t{0}, count);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) {
            break;
        }
        pool.emplace_back([&, w, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    pool.clear();
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_vector(std::span<const double> v, char sep = ';')
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) {
            out.push_back(sep);
        }
        out += format_double(v[i]);
    }
    return out;
}

/// Evenly spaced values a, ..., b (inclusive).
inline Vector linspace(double a, double b, std::size_t count)
{
    require(count >= 1, "linspace: count must be positive");
    Vector v(count);
    if (count == 1) {
        v[0] = a;
        return v;
    }
    for (std::size_t i = 0; i < count; ++i) {
        v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    v.back() = b;
    return v;
}

} // namespace zeronoise
