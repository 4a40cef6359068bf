#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lfp/activation.hpp"

namespace {

using lfp::Activation;
using lfp::ActivationPart;
constexpr double pi = std::numbers::pi;

// Direct trapezoid quadrature of int g(z) e^{-2 pi i z xi} dz for a rapidly decaying g.
lfp::cplx quadrature_ft(double (*g)(double), double xi, double half_width = 40.0, int steps = 400000) {
    const double h = 2.0 * half_width / steps;
    lfp::cplx acc{0.0, 0.0};
    for (int i = 0; i <= steps; ++i) {
        const double z = -half_width + h * i;
        const double wt = (i == 0 || i == steps) ? 0.5 : 1.0;
        acc += wt * g(z) * std::polar(1.0, -2.0 * pi * z * xi);
    }
    return acc * h;
}

TEST(Activation, ReluKernelFrozenValue) {
    const double expected = 1.0 / (16.0 * std::pow(pi, 4)) + 1.0 / (4.0 * pi * pi);
    EXPECT_NEAR(lfp::neuron_spectral_kernel(Activation::relu(), 1.0, 1.0, 1.0), expected, 1e-15);
}

TEST(Activation, ReluKernelClosedForm) {
    for (double a : {0.0, 0.3, 2.0}) {
        for (double r : {0.5, 1.0, 4.0}) {
            for (double s : {0.01, 0.7, 3.0}) {
                const double eta = s / r;
                const double expected =
                    (1.0 / (16.0 * std::pow(pi, 4) * std::pow(eta, 4)) + a * a / (4.0 * pi * pi * eta * eta)) / r;
                EXPECT_NEAR(lfp::neuron_spectral_kernel(Activation::relu(), a, r, s), expected, 1e-12 * expected);
            }
        }
    }
}

TEST(Activation, TanhKernelClosedForm) {
    for (double a : {0.0, 1.5}) {
        for (double eta : {0.05, 0.3, 1.0}) {
            const double csch = 1.0 / std::sinh(pi * pi * eta);
            const double expected = pi * pi * csch * csch + a * a * 4.0 * std::pow(pi, 4) * eta * eta * csch * csch;
            EXPECT_NEAR(lfp::neuron_spectral_kernel(Activation::tanh(), a, 1.0, eta), expected, 1e-12 * expected);
        }
    }
}

TEST(Activation, Sech2TransformMatchesQuadrature) {
    // sech^2 decays exponentially, so its transform can be checked by direct quadrature.
    for (double xi : {0.05, 0.2, 0.5}) {
        const lfp::cplx numeric = quadrature_ft(lfp::detail::sech2, xi);
        const lfp::cplx closed = lfp::ft_regular(Activation::tanh(), ActivationPart::derivative, xi);
        EXPECT_NEAR(numeric.real(), closed.real(), 1e-9);
        EXPECT_NEAR(numeric.imag(), closed.imag(), 1e-9);
    }
}

TEST(Activation, TransformsAreHermitian) {
    for (const auto& act : {Activation::relu(), Activation::tanh()}) {
        for (auto part : {ActivationPart::value, ActivationPart::derivative}) {
            for (double xi : {0.1, 0.9, 2.5}) {
                const lfp::cplx p = lfp::ft_regular(act, part, xi);
                const lfp::cplx m = lfp::ft_regular(act, part, -xi);
                EXPECT_NEAR(std::abs(p - std::conj(m)), 0.0, 1e-14 * std::abs(p));
            }
        }
    }
}

TEST(Activation, KernelsPositiveAndDecreasing) {
    for (const auto& act : {Activation::relu(), Activation::tanh()}) {
        double prev = INFINITY;
        for (double s = 0.05; s < 3.0; s *= 1.3) {
            const double k = lfp::neuron_spectral_kernel(act, 0.7, 1.0, s);
            EXPECT_GT(k, 0.0);
            EXPECT_LT(k, prev);
            prev = k;
        }
    }
}

TEST(Activation, TanhDecaysFasterThanRelu) {
    const double relu = lfp::neuron_spectral_kernel(Activation::relu(), 1.0, 1.0, 20.0);
    const double tanh = lfp::neuron_spectral_kernel(Activation::tanh(), 1.0, 1.0, 20.0);
    EXPECT_LT(tanh, 1e-50 * relu);
}

TEST(Activation, WTermCoefficient) {
    const double a = 2.0, r = 1.5, s = 0.8;
    const double eta = s / r;
    const double expected = a * a / (4.0 * pi * pi * eta * eta) / (r * s);
    EXPECT_NEAR(lfp::w_term_coefficient(Activation::relu(), a, r, s, 2), expected, 1e-14 * expected);
}

TEST(Activation, Errors) {
    EXPECT_THROW(lfp::ft_regular(Activation::relu(), ActivationPart::value, 0.0), lfp::domain_error);
    EXPECT_THROW(lfp::neuron_spectral_kernel(Activation::relu(), 1.0, 0.0, 1.0), lfp::domain_error);
    EXPECT_THROW(Activation::from_name("gelu"), lfp::config_error);
    EXPECT_EQ(Activation::from_name("tanh"), Activation::tanh());
}

}  // namespace
