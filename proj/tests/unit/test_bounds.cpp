#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lfp/bounds.hpp"

namespace {

using lfp::BoundCase;
using lfp::GammaWeight;
using lfp::Lattice;

GammaWeight weight(const Lattice& lat) {
    return GammaWeight::from_radial(lat, [](double xi) { return 1.0 / (1.0 + std::pow(8.0 * xi, 3)); });
}

TEST(Bounds, CaseTwoWithZeroC0IsCaseOne) {
    const Lattice lat(1, 20, 10.0);
    const auto w = weight(lat);
    EXPECT_DOUBLE_EQ(lfp::rademacher_bound(2.0, w, 9, BoundCase::zero_excluded, 0.0),
                     lfp::rademacher_bound(2.0, w, 9, BoundCase::all_modes));
    EXPECT_DOUBLE_EQ(lfp::rademacher_bound(2.0, w, 9, BoundCase::all_modes), 2.0 * lfp::gamma_l2_norm(w) / 3.0);
    EXPECT_THROW(lfp::rademacher_bound(1.0, w, 4, BoundCase::zero_excluded), lfp::config_error);
    EXPECT_THROW(lfp::rademacher_bound(1.0, w, 0, BoundCase::all_modes), lfp::config_error);
}

TEST(Bounds, ExactComplexityBelowBound) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Lattice lat(1, 30, 10.0, lfp::ZeroMode::penalized);
    const auto w = weight(lat);
    for (int n = 1; n <= 10; ++n) {
        Eigen::MatrixXd X(n, 1);
        for (int i = 0; i < n; ++i) X(i, 0) = u(rng);
        const double exact = lfp::rademacher_exact(X, 1.5, w);
        const double bound = lfp::rademacher_bound(1.5, w, n, BoundCase::all_modes);
        if (n == 1) {
            EXPECT_NEAR(exact, bound, 1e-14 * bound);
        } else {
            EXPECT_LT(exact, bound);
        }
    }
    EXPECT_THROW(lfp::rademacher_exact(Eigen::MatrixXd::Zero(13, 1), 1.0, w), lfp::config_error);
}

TEST(Bounds, ExactComplexityBruteForceN2) {
    // n = 2: tau in {++, +-, -+, --}; tau^T G tau = 2 g0 +- 2 G01.
    const Lattice lat(1, 10, 5.0, lfp::ZeroMode::penalized);
    const auto w = weight(lat);
    Eigen::MatrixXd X(2, 1);
    X << 0.1, 0.7;
    const Eigen::MatrixXd G = lfp::gram_matrix(X, w);
    const double expected = 0.5 * 0.25 * 2.0 * (std::sqrt(2 * G(0, 0) + 2 * G(0, 1)) + std::sqrt(2 * G(0, 0) - 2 * G(0, 1)));
    EXPECT_NEAR(lfp::rademacher_exact(X, 1.0, w), expected, 1e-14);
}

TEST(Bounds, AprioriBoundOnKnownFunction) {
    const Lattice lat(1, 40, 10.0);
    const auto w = weight(lat);
    const double L = lat.period();
    const auto f = [L](std::span<const double> x) { return std::sin(2 * std::numbers::pi * 3 * x[0] / L); };
    const auto r = lfp::apriori_bound(f, w, 20, 0.1, BoundCase::zero_excluded, 0.0, 1.0);
    // Only k = +-3 carry mass 1/4 each: Q^2 = 2 (1/4) / gamma^2(3).
    const double g3 = w[lat.index_of(std::vector<int>{3})];
    EXPECT_NEAR(r.Q, std::sqrt(0.5 / g3), 1e-10 * r.Q);
    EXPECT_LT(r.projection_residual, 1e-12);
    EXPECT_EQ(r.sup_grid_points, 4096u);
    ASSERT_TRUE(r.c0.has_value());
    EXPECT_NEAR(*r.c0, r.sup_norm + r.Q * r.gamma_l2, 1e-14);
    EXPECT_GT(r.risk_bound, 0.0);
    // More data, smaller bound.
    EXPECT_LT(lfp::apriori_bound(f, w, 200, 0.1, BoundCase::zero_excluded, 0.0, 1.0).risk_bound, r.risk_bound);
    EXPECT_THROW(lfp::apriori_bound(f, w, 20, 0.1, BoundCase::all_modes, 0.0, 1.0), lfp::config_error);
    EXPECT_THROW(lfp::apriori_bound(f, w, 20, 1.5, BoundCase::zero_excluded, 0.0, 1.0), lfp::config_error);
}

TEST(Bounds, Spearman) {
    EXPECT_DOUBLE_EQ(lfp::spearman({1, 2, 3, 4}, {0.1, 0.5, 0.7, 9.0}), 1.0);
    EXPECT_DOUBLE_EQ(lfp::spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
    EXPECT_NEAR(lfp::spearman({1, 2, 3}, {1, 1, 2}), std::sqrt(3.0) / 2.0, 1e-12);
}

TEST(Bounds, LfpSweepIsMonotoneAndBounded) {
    const lfp::ParamModel m(lfp::ScalarDist::point(10.0), lfp::RadialDist::point(2.0), 1.0, 1);
    lfp::SweepOptions opt;
    opt.learner = lfp::Learner::lfp;
    const auto rows = lfp::frequency_sweep(m, lfp::Activation::relu(), opt);
    ASSERT_EQ(rows.size(), 5u);
    std::vector<double> v, loss;
    for (const auto& r : rows) {
        v.push_back(r.v);
        loss.push_back(r.test_loss);
        EXPECT_LE(r.test_loss_max, r.bound.risk_bound);
        EXPECT_LE(r.test_loss, r.test_loss_max);
    }
    EXPECT_GE(lfp::spearman(v, loss), 0.9);
    opt.v_list = {10};
    EXPECT_THROW(lfp::frequency_sweep(m, lfp::Activation::relu(), opt), lfp::config_error);
}

TEST(Bounds, ConstantTargetIsLearnedExactly) {
    const lfp::ParamModel m(lfp::ScalarDist::point(10.0), lfp::RadialDist::point(2.0), 1.0, 1);
    lfp::SweepOptions opt;
    opt.v_list = {0};
    opt.trials = 3;
    const auto rows = lfp::frequency_sweep(m, lfp::Activation::relu(), opt);
    EXPECT_LE(rows.at(0).test_loss_max, 1e-8);
}

TEST(Bounds, LfpSweepTrendHoldsAcrossSeeds) {
    const lfp::ParamModel m(lfp::ScalarDist::point(10.0), lfp::RadialDist::point(2.0), 1.0, 1);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        lfp::SweepOptions opt;
        opt.seed = seed;
        std::vector<double> v, loss;
        for (const auto& r : lfp::frequency_sweep(m, lfp::Activation::relu(), opt)) {
            v.push_back(r.v);
            loss.push_back(r.test_loss);
        }
        EXPECT_GE(lfp::spearman(v, loss), 0.9) << "seed " << seed;
    }
}

TEST(Bounds, NnSweepReportsUnconvergedTrials) {
    const lfp::ParamModel m(lfp::ScalarDist::point(10.0), lfp::RadialDist::point(2.0), 1.0, 1);
    lfp::SweepOptions opt;
    opt.learner = lfp::Learner::nn;
    opt.v_list = {3};
    opt.trials = 2;
    opt.m = 64;
    opt.max_steps = 20;
    const auto rows = lfp::frequency_sweep(m, lfp::Activation::relu(), opt);
    EXPECT_EQ(rows.at(0).trials, 2);
    EXPECT_EQ(rows.at(0).converged, 0);
    EXPECT_EQ(rows.at(0).steps, 20u);
    EXPECT_GT(rows.at(0).train_mse, opt.mse_tol);
}

}  // namespace
