#pragma once

// Closed-form one-dimensional Fourier transforms of activations and their
// derivatives, and the per-neuron spectral products that build the LFP weight.
//
// Convention: F[g](xi) = \int g(x) exp(-2 pi i x xi) dx. Only the regular part
// of each transform is returned; delta(xi) and delta'(xi) terms live at the
// zero frequency, which spectral_core handles through its zero-mode policy.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "lfp/errors.hpp"

namespace lfp {

using cplx = std::complex<double>;

namespace detail {

/// csch(x) for x > 0 without overflowing sinh: 2e^{-x} / (1 - e^{-2x}).
inline double csch_positive(double x) {
    if (x < 1.0) return 1.0 / std::sinh(x);
    const double e = std::exp(-x);
    return 2.0 * e / (-std::expm1(-2.0 * x));
}

/// Odd extension of csch for any nonzero argument.
inline double csch(double x) { return x > 0 ? csch_positive(x) : -csch_positive(-x); }

inline double relu(double z) { return z > 0.0 ? z : 0.0; }
// Subgradient at 0 is 0.
inline double heaviside(double z) { return z > 0.0 ? 1.0 : 0.0; }
inline double sech2(double z) {
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

inline cplx ft_relu(double xi) {
    constexpr double pi = std::numbers::pi;
    return {-1.0 / (4.0 * pi * pi * xi * xi), 0.0};
}
inline cplx ft_heaviside(double xi) {
    constexpr double pi = std::numbers::pi;
    // 1 / (i 2 pi xi)
    return {0.0, -1.0 / (2.0 * pi * xi)};
}
inline cplx ft_tanh(double xi) {
    constexpr double pi = std::numbers::pi;
    return {0.0, -pi * csch(pi * pi * xi)};
}
inline cplx ft_sech2(double xi) {
    constexpr double pi = std::numbers::pi;
    return {2.0 * pi * pi * xi * csch(pi * pi * xi), 0.0};
}

}  // namespace detail

enum class ActivationPart { value, derivative };

/// An activation together with its pointwise value, derivative and the regular
/// parts of the Fourier transforms of both. New kinds only need to supply the
/// four functions.
struct Activation {
    enum class Kind { relu, tanh, custom };

    Kind kind = Kind::relu;
    std::string name = "relu";
    double (*value)(double) = &detail::relu;
    double (*derivative)(double) = &detail::heaviside;
    cplx (*ft_value)(double) = &detail::ft_relu;
    cplx (*ft_derivative)(double) = &detail::ft_heaviside;

    static Activation relu() { return {}; }
    static Activation tanh() {
        return {Kind::tanh, "tanh", [](double z) { return std::tanh(z); }, &detail::sech2, &detail::ft_tanh,
                &detail::ft_sech2};
    }
    static Activation from_name(const std::string& n) {
        if (n == "relu" || n == "ReLU") return relu();
        if (n == "tanh" || n == "Tanh") return tanh();
        throw config_error("unknown activation '" + n + "' (expected relu or tanh)");
    }

    friend bool operator==(const Activation& l, const Activation& r) {
        return l.kind == r.kind && l.name == r.name;
    }
};

/// Regular (non-distributional) part of F[sigma] or F[sigma'] at xi != 0.
inline cplx ft_regular(const Activation& act, ActivationPart part, double xi) {
    if (xi == 0.0 || !std::isfinite(xi)) {
        throw domain_error("ft_regular: frequency must be finite and nonzero (zero mode is handled by the lattice policy)");
    }
    return part == ActivationPart::value ? act.ft_value(xi) : act.ft_derivative(xi);
}

namespace detail {
// F[g](eta) * F[g](-eta); real for real-valued g.
inline double mirrored_product(cplx (*ft)(double), double eta) { return (ft(eta) * ft(-eta)).real(); }

inline void check_radius_frequency(const char* who, double r, double s) {
    if (!(r > 0.0) || !(s > 0.0) || !std::isfinite(r) || !std::isfinite(s)) {
        throw domain_error(std::string(who) + ": requires r > 0 and s > 0");
    }
}
}  // namespace detail

/// (1/r) F[g1](s/r) . F[g1](-s/r) with g1 = (sigma, a sigma'): the diagonal
/// integrand of the LFP operator for one neuron, at frequency magnitude s.
inline double neuron_spectral_kernel(const Activation& act, double a, double r, double s) {
    detail::check_radius_frequency("neuron_spectral_kernel", r, s);
    const double eta = s / r;
    return (detail::mirrored_product(act.ft_value, eta) + a * a * detail::mirrored_product(act.ft_derivative, eta)) / r;
}

/// Coefficient of the w-gradient divergence term, (1/(r s^{d-1})) F[g2](s/r) F[g2](-s/r)
/// with g2 = a sigma'. Reported only; it never enters the dynamics.
inline double w_term_coefficient(const Activation& act, double a, double r, double s, int d) {
    detail::check_radius_frequency("w_term_coefficient", r, s);
    if (d < 1) throw domain_error("w_term_coefficient: dimension must be positive");
    const double eta = s / r;
    return a * a * detail::mirrored_product(act.ft_derivative, eta) / (r * std::pow(s, d - 1));
}

}  // namespace lfp
