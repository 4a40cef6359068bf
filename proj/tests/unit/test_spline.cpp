#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lfp/spline.hpp"

namespace {

using lfp::SplineInterpolant;
using lfp::SplineKind;

const std::vector<double> xs{0.0, 0.3, 0.45, 0.8, 1.0};
const std::vector<double> ys{0.2, -0.5, 0.4, 1.0, 0.0};

double second_derivative(const SplineInterpolant& s, double x, double h = 1e-4) {
    return (s(x + h) - 2 * s(x) + s(x - h)) / (h * h);
}

// int_lo^hi g''(x)^2 by the midpoint rule with a central-difference second derivative.
template <class F>
double bending_energy(F&& g, double lo, double hi, int steps = 20000) {
    const double dx = (hi - lo) / steps, h = 1e-4;
    double e = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double x = lo + (i + 0.5) * dx;
        const double d2 = (g(x + h) - 2 * g(x) + g(x - h)) / (h * h);
        e += d2 * d2 * dx;
    }
    return e;
}

TEST(Spline, InterpolatesKnots) {
    for (auto kind : {SplineKind::linear, SplineKind::natural_cubic}) {
        const auto s = SplineInterpolant::fit(kind, xs, ys);
        for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(s(xs[i]), ys[i], 1e-15);
    }
}

TEST(Spline, LinearIsPiecewiseLinear) {
    const auto s = SplineInterpolant::fit(SplineKind::linear, xs, ys);
    EXPECT_NEAR(s(0.15), 0.5 * (ys[0] + ys[1]), 1e-15);
    EXPECT_NEAR(s(0.9), 0.5 * (ys[3] + ys[4]), 1e-15);
}

TEST(Spline, NaturalCubicBoundaryAndSmoothness) {
    const auto s = SplineInterpolant::fit(SplineKind::natural_cubic, xs, ys);
    EXPECT_EQ(s.curvatures().front(), 0.0);
    EXPECT_EQ(s.curvatures().back(), 0.0);
    // Second derivative is continuous across interior knots: it is piecewise linear, so
    // without a jump it changes by at most 2 h max|third derivative| across a knot.
    const auto& M = s.curvatures();
    double third = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) third = std::max(third, std::abs(M[i + 1] - M[i]) / (xs[i + 1] - xs[i]));
    const double h = 1e-3;
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        EXPECT_LE(std::abs(second_derivative(s, xs[i] - h) - second_derivative(s, xs[i] + h)), 2.0 * h * third * 1.01 + 1e-2);
        EXPECT_NEAR(second_derivative(s, xs[i]), s.curvatures()[i], 1e-3 * (1 + std::abs(s.curvatures()[i])));
    }
}

TEST(Spline, NaturalCubicMinimisesBendingEnergy) {
    // Any other C^2 interpolant: add a polynomial that vanishes at the knots.
    const auto s = SplineInterpolant::fit(SplineKind::natural_cubic, xs, ys);
    const auto bump = [](double x) {
        double p = 1.0;
        for (double k : xs) p *= (x - k);
        return p;
    };
    const double base = bending_energy([&](double x) { return s(std::clamp(x, 0.0, 1.0)); }, 1e-3, 1.0 - 1e-3);
    for (double eps : {-2.0, -0.1, 0.1, 2.0}) {
        const double alt = bending_energy([&](double x) { return s(std::clamp(x, 0.0, 1.0)) + eps * bump(x); }, 1e-3, 1.0 - 1e-3);
        EXPECT_GT(alt, base);
    }
}

TEST(Spline, ReproducesLinearData) {
    std::vector<double> y;
    for (double x : xs) y.push_back(3.0 * x - 1.0);
    const auto s = SplineInterpolant::fit(SplineKind::natural_cubic, xs, y);
    for (double x = 0.0; x <= 1.0; x += 0.05) EXPECT_NEAR(s(x), 3.0 * x - 1.0, 1e-13);
}

TEST(Spline, UnsortedInputAndErrors) {
    const auto s = SplineInterpolant::fit(SplineKind::natural_cubic, {1.0, 0.0, 0.5}, {2.0, 0.0, 1.5});
    EXPECT_EQ(s.knots(), (std::vector<double>{0.0, 0.5, 1.0}));
    EXPECT_THROW(s(1.5), lfp::domain_error);
    EXPECT_THROW(SplineInterpolant::fit(SplineKind::linear, {0.0, 0.0}, {1.0, 2.0}), lfp::config_error);
    EXPECT_THROW(SplineInterpolant::fit(SplineKind::linear, {0.0}, {1.0}), lfp::config_error);
}

}  // namespace
