#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lfp/network.hpp"

namespace {

using lfp::Activation;
using lfp::Dataset;
using lfp::TwoLayerNet;

lfp::ParamModel model(int d, double a = 1.0, double r = 3.0, double sigma_b = 2.0) {
    return lfp::ParamModel(lfp::ScalarDist::point(a), lfp::RadialDist::point(r), sigma_b, d);
}

Dataset random_dataset(std::uint64_t seed, int n, int d) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5), y(-1.0, 1.0);
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) X(i, k) = u(rng);
        Y(i) = y(rng);
    }
    return Dataset(X, Y, -0.5, 0.5);
}

TEST(Network, AsiInitialOutputIsExactlyZero) {
    for (const auto& act : {Activation::relu(), Activation::tanh()}) {
        const TwoLayerNet net = TwoLayerNet::init(model(2), act, 1000, true, 3);
        const Dataset data = random_dataset(1, 20, 2);
        EXPECT_EQ(net.forward(data.X).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Network, ForwardMatchesNaiveSum) {
    const TwoLayerNet net = TwoLayerNet::init(model(1), Activation::tanh(), 51, false, 4);
    for (double x : {-0.4, 0.1, 0.33}) {
        double s = 0.0;
        for (std::size_t j = 0; j < net.width(); ++j) s += net.a()[j] * std::tanh(net.w()[0][j] * x + net.b()[j]);
        EXPECT_NEAR(net.forward(x), s / std::sqrt(51.0), 1e-13);
    }
}

TEST(Network, GradientMatchesFiniteDifferences) {
    for (const auto& act : {Activation::relu(), Activation::tanh()}) {
        for (int d : {1, 2}) {
            TwoLayerNet net = TwoLayerNet::init(model(d), act, 12, false, 5 + d);
            const Dataset data = random_dataset(6 + d, 4, d);
            const auto [loss, g] = lfp::loss_and_gradient(net, data);
            EXPECT_NEAR(loss, lfp::training_loss(net, data), 1e-15);
            const double h = 1e-6;
            auto central = [&](double& p) {
                const double keep = p;
                p = keep + h;
                const double up = lfp::training_loss(net, data);
                p = keep - h;
                const double down = lfp::training_loss(net, data);
                p = keep;
                return (up - down) / (2 * h);
            };
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j < net.width(); ++j) {
                const double da = central(net.a_mut()[j]) - g.a[j];
                const double db = central(net.b_mut()[j]) - g.b[j];
                num += da * da + db * db;
                den += g.a[j] * g.a[j] + g.b[j] * g.b[j];
                for (int k = 0; k < d; ++k) {
                    const double dw = central(net.w_mut()[static_cast<std::size_t>(k)][j]) - g.w[static_cast<std::size_t>(k)][j];
                    num += dw * dw;
                    den += g.w[static_cast<std::size_t>(k)][j] * g.w[static_cast<std::size_t>(k)][j];
                }
            }
            EXPECT_LT(std::sqrt(num / den), 1e-5) << act.name << " d=" << d;
        }
    }
}

TEST(Network, EmpiricalNtkIsGradientInnerProduct) {
    // K(x, x') from single-point losses: grad R for one point with residual 1 is grad f(x).
    const TwoLayerNet net = TwoLayerNet::init(model(1), Activation::tanh(), 20, false, 9);
    const double x = 0.2, xp = -0.35;
    auto grad_f = [&](double p) {
        const double f = net.forward(p);
        const Dataset one = Dataset::line(std::vector<double>{p}, std::vector<double>{f - 1.0}, -0.5, 0.5);
        return lfp::loss_and_gradient(net, one).second;
    };
    const auto g1 = grad_f(x), g2 = grad_f(xp);
    double dot = 0.0;
    for (std::size_t j = 0; j < net.width(); ++j) dot += g1.a[j] * g2.a[j] + g1.b[j] * g2.b[j] + g1.w[0][j] * g2.w[0][j];
    // R = sum e^2 / 2, so one point with residual 1 has gradient grad f(x).
    const double k = net.empirical_ntk(std::vector<double>{x}, std::vector<double>{xp});
    EXPECT_NEAR(dot, k, 1e-10 * std::abs(k));
    const Eigen::MatrixXd X = (Eigen::MatrixXd(2, 1) << x, xp).finished();
    EXPECT_NEAR(net.empirical_ntk_gram(X)(0, 1), k, 1e-14);
}

TEST(Network, GradientDescentReducesLoss) {
    TwoLayerNet net = TwoLayerNet::init(model(1, 10.0, 1.0, 4.0), Activation::relu(), 200, true, 10);
    const Dataset data = Dataset::line(std::vector<double>{-0.4, -0.2, 0.0, 0.2, 0.4},
                                       std::vector<double>{0.2, 0.7, 1.0, 0.6, 0.1}, -0.5, 0.5);
    lfp::TrainOptions opt;
    opt.loss_tol = 1e-5;
    opt.max_steps = 200000;
    const auto res = lfp::train_gd(net, data, opt);
    EXPECT_TRUE(res.converged);
    EXPECT_LE(res.loss_history.back(), 1e-5);
    EXPECT_NEAR(lfp::training_loss(net, data), res.loss_history.back(), 1e-12);
    EXPECT_GT(res.lr, 0.0);
    for (std::size_t s = 1; s < res.loss_history.size(); ++s) EXPECT_LE(res.loss_history[s], res.loss_history[s - 1] * (1 + 1e-12));
}

TEST(Network, DivergentLearningRateIsReported) {
    TwoLayerNet net = TwoLayerNet::init(model(1, 10.0, 1.0, 4.0), Activation::relu(), 200, true, 11);
    const Dataset data = random_dataset(12, 5, 1);
    lfp::TrainOptions opt;
    opt.lr = 100.0 * lfp::default_learning_rate(net, data);
    EXPECT_THROW(lfp::train_gd(net, data, opt), lfp::numerical_error);
}

TEST(Network, JsonRoundTrip) {
    const TwoLayerNet net = TwoLayerNet::init(model(2), Activation::tanh(), 10, true, 13);
    const nlohmann::json j = net;
    const TwoLayerNet back = lfp::net_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.a(), net.a());
    EXPECT_EQ(back.w(), net.w());
    EXPECT_EQ(back.b(), net.b());
    EXPECT_EQ(back.activation(), net.activation());
    EXPECT_EQ(back.asi(), net.asi());
}

TEST(Network, Errors) {
    EXPECT_THROW(TwoLayerNet::init(model(1), Activation::relu(), 7, true, 1), lfp::config_error);
    const TwoLayerNet net = TwoLayerNet::init(model(2), Activation::relu(), 4, false, 1);
    EXPECT_THROW(net.forward(std::vector<double>{1.0}), lfp::config_error);
}

}  // namespace
