#pragma once

// Linear and natural cubic interpolating splines in one dimension.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lfp/dataset.hpp"
#include "lfp/errors.hpp"

namespace lfp {

enum class SplineKind { linear, natural_cubic };

class SplineInterpolant {
public:
    /// Knots need not be sorted; duplicates are rejected.
    static SplineInterpolant fit(SplineKind kind, std::vector<double> x, std::vector<double> y) {
        if (x.size() != y.size()) throw config_error("spline fit: x and y sizes differ");
        if (x.size() < 2) throw config_error("spline fit: need at least two knots");
        std::vector<std::size_t> order(x.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
        SplineInterpolant s;
        s.kind_ = kind;
        for (auto i : order) {
            s.x_.push_back(x[i]);
            s.y_.push_back(y[i]);
        }
        for (std::size_t i = 1; i < s.x_.size(); ++i) {
            if (!(s.x_[i] > s.x_[i - 1])) throw config_error("spline fit: duplicate knot");
        }
        s.m_.assign(s.x_.size(), 0.0);
        if (kind == SplineKind::natural_cubic) s.solve_second_derivatives();
        return s;
    }

    static SplineInterpolant fit(SplineKind kind, const Dataset& data) {
        if (data.dim() != 1) throw config_error("spline fit: data must be one-dimensional");
        std::vector<double> x(data.X.col(0).data(), data.X.col(0).data() + data.n());
        std::vector<double> y(data.Y.data(), data.Y.data() + data.n());
        return fit(kind, std::move(x), std::move(y));
    }

    SplineKind kind() const { return kind_; }
    const std::vector<double>& knots() const { return x_; }
    const std::vector<double>& values() const { return y_; }
    /// Second derivatives at the knots (all zero for linear).
    const std::vector<double>& curvatures() const { return m_; }
    double lo() const { return x_.front(); }
    double hi() const { return x_.back(); }

    double operator()(double t) const {
        if (!(t >= x_.front() && t <= x_.back())) {
            throw domain_error("spline eval: x outside [" + std::to_string(x_.front()) + ", " +
                               std::to_string(x_.back()) + "]; extrapolation is not supported");
        }
        auto it = std::upper_bound(x_.begin(), x_.end(), t);
        std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin() - 1, 0));
        if (i >= x_.size() - 1) i = x_.size() - 2;
        const double h = x_[i + 1] - x_[i];
        const double A = (x_[i + 1] - t) / h;
        const double B = (t - x_[i]) / h;
        double v = A * y_[i] + B * y_[i + 1];
        if (kind_ == SplineKind::natural_cubic) {
            v += ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
        }
        return v;
    }

private:
    // Tridiagonal system for interior second derivatives, m_0 = m_{n-1} = 0 (Thomas algorithm).
    void solve_second_derivatives() {
        const std::size_t n = x_.size();
        if (n < 3) return;
        const std::size_t k = n - 2;
        std::vector<double> diag(k), upper(k), rhs(k);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1];
            const double h1 = x_[i + 1] - x_[i];
            diag[i - 1] = (h0 + h1) / 3.0;
            upper[i - 1] = h1 / 6.0;
            rhs[i - 1] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
        }
        // lower[i] (coupling of row i to i-1) equals upper[i-1] by symmetry.
        for (std::size_t i = 1; i < k; ++i) {
            const double f = upper[i - 1] / diag[i - 1];
            diag[i] -= f * upper[i - 1];
            rhs[i] -= f * rhs[i - 1];
        }
        std::vector<double> sol(k);
        sol[k - 1] = rhs[k - 1] / diag[k - 1];
        for (std::size_t i = k - 1; i-- > 0;) sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
        for (std::size_t i = 0; i < k; ++i) m_[i + 1] = sol[i];
    }

    SplineKind kind_ = SplineKind::linear;
    std::vector<double> x_, y_, m_;
};

}  // namespace lfp
