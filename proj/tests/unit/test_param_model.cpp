#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lfp/param_model.hpp"

namespace {

using lfp::Activation;
using lfp::ParamModel;
using lfp::RadialDist;
using lfp::ScalarDist;
constexpr double pi = std::numbers::pi;

TEST(ParamModel, GammaSquaredFrozenValue) {
    const ParamModel m(ScalarDist::point(1.0), RadialDist::point(1.0), 1.0, 1);
    const double kernel = 1.0 / (16.0 * std::pow(pi, 4)) + 1.0 / (4.0 * pi * pi);
    const double expected = kernel / (2.0 * std::sqrt(2.0 * pi));
    EXPECT_NEAR(lfp::gamma_squared(m, Activation::relu(), 1.0).value, expected, 1e-15);
}

TEST(ParamModel, PrefactorRatio) {
    for (int d : {1, 2, 3}) {
        const ParamModel m(ScalarDist::point(0.5), RadialDist::point(2.0), 3.0, d);
        const double phys = lfp::gamma_squared(m, Activation::relu(), 0.4, std::nullopt, lfp::Prefactor::physical).value;
        const double unit = lfp::gamma_squared(m, Activation::relu(), 0.4, std::nullopt, lfp::Prefactor::unit).value;
        const double c = std::tgamma(0.5 * d) / (2.0 * std::sqrt(2.0) * std::pow(pi, 0.5 * (d + 1)) * 3.0);
        EXPECT_NEAR(phys / unit, c, 1e-14 * c);
    }
}

TEST(ParamModel, MonteCarloMatchesExactGaussianA) {
    // The kernel is linear in a^2, so E over a ~ N(mu, sd^2) is exact at a^2 = mu^2 + sd^2.
    const ParamModel m(ScalarDist::gaussian(0.5, 2.0), RadialDist::point(1.5), 2.0, 1);
    const double s = 0.3;
    const auto est = lfp::gamma_squared(m, Activation::relu(), s, lfp::McSpec{200000, 11}, lfp::Prefactor::unit);
    const double exact = lfp::neuron_spectral_kernel(Activation::relu(), std::sqrt(4.25), 1.5, s);
    EXPECT_NEAR(est.value, exact, 5.0 * est.std_error);
    EXPECT_GT(est.std_error, 0.0);
}

TEST(ParamModel, MonteCarloSeedsAgree) {
    const ParamModel m(ScalarDist::gaussian(0.0, 1.0), RadialDist::gaussian_w(1.0), 4.0, 2);
    for (double s : {0.2, 1.0}) {
        const auto e1 = lfp::gamma_squared(m, Activation::tanh(), s, lfp::McSpec{50000, 1});
        const auto e2 = lfp::gamma_squared(m, Activation::tanh(), s, lfp::McSpec{50000, 2});
        EXPECT_NEAR(e1.value, e2.value, 5.0 * std::hypot(e1.std_error, e2.std_error));
    }
}

TEST(ParamModel, MonteCarloIsDeterministic) {
    const ParamModel m(ScalarDist::gaussian(0.0, 1.0), RadialDist::gaussian_w(1.0), 4.0, 1);
    const auto e1 = lfp::gamma_squared(m, Activation::relu(), 0.5, lfp::McSpec{10000, 3});
    const auto e2 = lfp::gamma_squared(m, Activation::relu(), 0.5, lfp::McSpec{10000, 3});
    EXPECT_EQ(e1.value, e2.value);
    EXPECT_EQ(e1.std_error, e2.std_error);
}

TEST(ParamModel, ChiDensityNormalised) {
    for (int d : {1, 2, 3}) {
        const RadialDist r = RadialDist::gaussian_w(0.7);
        double mass = 0.0, second = 0.0;
        const double h = 1e-4;
        for (double x = h / 2; x < 12.0; x += h) {
            mass += r.density(x, d) * h;
            second += x * x * r.density(x, d) * h;
        }
        EXPECT_NEAR(mass, 1.0, 1e-6);
        EXPECT_NEAR(second, r.second_moment(d), 1e-5);
    }
}

TEST(ParamModel, SampledNeuronsFollowModel) {
    const ParamModel m(ScalarDist::point(0.3), RadialDist::point(2.5), 5.0, 3);
    const auto s = lfp::sample_neurons(m, 20000, 9);
    double b2 = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const auto w = s.w_of(j);
        EXPECT_NEAR(std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]), 2.5, 1e-12);
        EXPECT_EQ(s.a[j], 0.3);
        b2 += s.b[j] * s.b[j];
    }
    EXPECT_NEAR(std::sqrt(b2 / s.size()), 5.0, 0.1);
}

TEST(ParamModel, WeightIsRadialAndPositive) {
    const ParamModel m(ScalarDist::point(1.0), RadialDist::point(1.0), 2.0, 2);
    const lfp::Lattice lat(2, 6, 4.0);
    const auto w = lfp::make_gamma_weight(m, Activation::relu(), lat);
    for (std::size_t i = 0; i < lat.size(); ++i) {
        if (i == lat.zero_index()) {
            EXPECT_EQ(w[i], 0.0);
            continue;
        }
        EXPECT_GT(w[i], 0.0);
        EXPECT_EQ(w[i], w[lat.mirror(i)]);
        auto k = lat.k_of(i);
        std::swap(k[0], k[1]);
        EXPECT_EQ(w[i], w[lat.index_of(k)]);
    }
}

TEST(ParamModel, Errors) {
    EXPECT_THROW(ParamModel(ScalarDist::point(1.0), RadialDist::point(1.0), 0.0, 1), lfp::config_error);
    EXPECT_THROW(RadialDist::point(-1.0), lfp::config_error);
    EXPECT_THROW(ScalarDist::gaussian(0.0, 0.0), lfp::config_error);
    const ParamModel g(ScalarDist::gaussian(0.0, 1.0), RadialDist::point(1.0), 1.0, 1);
    EXPECT_THROW(lfp::gamma_squared(g, Activation::relu(), 1.0), lfp::config_error);
    EXPECT_THROW(lfp::gamma_squared(g, Activation::relu(), 0.0, lfp::McSpec{}), lfp::domain_error);
    const ParamModel p(ScalarDist::point(1.0), RadialDist::point(1.0), 1.0, 1);
    EXPECT_THROW(lfp::make_gamma_weight(p, Activation::relu(), lfp::Lattice(1, 3, 2.0, lfp::ZeroMode::penalized)),
                 lfp::config_error);
}

}  // namespace
