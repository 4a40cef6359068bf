#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "lfp/network.hpp"
#include "lfp/ntk.hpp"

namespace {

using lfp::Activation;
using lfp::Dataset;
using lfp::KernelEstimate;

lfp::ParamModel model(int d) {
    return lfp::ParamModel(lfp::ScalarDist::point(2.0), lfp::RadialDist::point(1.0), 3.0, d);
}

Dataset fig2() {
    return Dataset::line(std::vector<double>{-0.4, -0.2, 0.0, 0.2, 0.4}, std::vector<double>{0.2, 0.7, 1.0, 0.6, 0.1}, -0.5,
                         0.5);
}

TEST(Ntk, ClosedFormForPointMasses) {
    // d = 1, r = 1: w = +-1 with equal probability, so K is an average over b ~ N(0, sigma_b^2) only.
    const KernelEstimate k(model(1), Activation::relu(), lfp::McSpec{200000, 1});
    const double x = 0.3, xp = -0.2;
    const auto e = k(std::vector<double>{x}, std::vector<double>{xp});
    // Quadrature over b for both signs of w.
    double acc = 0.0;
    const double sb = 3.0, h = 1e-3;
    for (double b = -12 * sb; b <= 12 * sb; b += h) {
        const double pdf = std::exp(-0.5 * b * b / (sb * sb)) / (sb * std::sqrt(2 * std::numbers::pi));
        for (double w : {-1.0, 1.0}) {
            const double z = w * x + b, zp = w * xp + b;
            acc += 0.5 * pdf * h * (std::max(z, 0.0) * std::max(zp, 0.0) + 4.0 * (z > 0) * (zp > 0) * (1 + x * xp));
        }
    }
    EXPECT_NEAR(e.value, acc, 5.0 * e.std_error);
}

TEST(Ntk, SymmetricDeterministicAndPsd) {
    const KernelEstimate k(model(2), Activation::tanh(), lfp::McSpec{5000, 2});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd X(12, 2);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
    const Eigen::MatrixXd G = k.gram(X);
    EXPECT_EQ((G - G.transpose()).cwiseAbs().maxCoeff(), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e(G, Eigen::EigenvaluesOnly);
    EXPECT_GE(e.eigenvalues()(0), -1e-8 * e.eigenvalues().maxCoeff());
    EXPECT_EQ(G, KernelEstimate(model(2), Activation::tanh(), lfp::McSpec{5000, 2}).gram(X));
}

TEST(Ntk, ThreadCountDoesNotChangeResults) {
    const KernelEstimate k(model(1), Activation::relu(), lfp::McSpec{20000, 4});
    const Eigen::MatrixXd X = Eigen::VectorXd::LinSpaced(7, -0.5, 0.5);
    setenv("LFP_LAB_THREADS", "1", 1);
    const Eigen::MatrixXd one = k.gram(X);
    setenv("LFP_LAB_THREADS", "4", 1);
    const Eigen::MatrixXd four = k.gram(X);
    unsetenv("LFP_LAB_THREADS");
    EXPECT_EQ(one, four);
}

TEST(Ntk, SeedsAgreeWithinStandardError) {
    const std::vector<double> x{0.1}, xp{0.25};
    const auto a = lfp::ntk_kernel(model(1), Activation::relu(), x, xp, lfp::McSpec{50000, 5});
    const auto b = lfp::ntk_kernel(model(1), Activation::relu(), x, xp, lfp::McSpec{50000, 6});
    EXPECT_NEAR(a.value, b.value, 5.0 * std::hypot(a.std_error, b.std_error));
    EXPECT_THROW(lfp::ntk_kernel(model(1), Activation::relu(), x, xp, lfp::McSpec{999, 1}), lfp::config_error);
}

TEST(Ntk, EmpiricalKernelConvergesToOracle) {
    const KernelEstimate k(model(1), Activation::relu(), lfp::McSpec{100000, 7});
    const auto net = lfp::TwoLayerNet::init(model(1), Activation::relu(), 20000, true, 8);
    for (double x : {-0.3, 0.0, 0.4}) {
        const std::vector<double> p{x}, q{0.1};
        const auto e = k(p, q);
        EXPECT_NEAR(net.empirical_ntk(p, q), e.value, 5.0 * (e.std_error + 1.0 / std::sqrt(20000.0)));
    }
}

TEST(Ntk, KernelPredictInterpolates) {
    const KernelEstimate k(model(1), Activation::relu(), lfp::McSpec{20000, 9});
    const Dataset data = fig2();
    const Eigen::VectorXd at_data = lfp::kernel_predict(k, data, {}, data.X);
    EXPECT_LT((at_data - data.Y).cwiseAbs().maxCoeff(), 1e-8);
    const lfp::PointFunction ini = [](std::span<const double> x) { return 0.3 * x[0]; };
    EXPECT_LT((lfp::kernel_predict(k, data, ini, data.X) - data.Y).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Ntk, ResidualFlowDecays) {
    const KernelEstimate k(model(1), Activation::relu(), lfp::McSpec{20000, 10});
    const Dataset data = fig2();
    EXPECT_LT((lfp::residual_flow(k, data, {}, 0.0) + data.Y).norm(), 1e-14);
    double prev = INFINITY;
    for (double t : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        const double r = lfp::residual_flow(k, data, {}, t).norm();
        EXPECT_LT(r, prev);
        prev = r;
    }
    EXPECT_THROW(lfp::residual_flow(k, data, {}, -1.0), lfp::config_error);
}

}  // namespace
