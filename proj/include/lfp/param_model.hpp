#pragma once

// Initial parameter distribution (independent a, w = r * direction, b ~ N(0, sigma_b^2))
// and the frequency weight gamma^2 it induces.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lfp/activation.hpp"
#include "lfp/errors.hpp"
#include "lfp/spectral.hpp"

namespace lfp {

/// Point mass or Gaussian scalar law (used for a).
struct ScalarDist {
    enum class Kind { point, gaussian };
    Kind kind = Kind::point;
    double mean = 0.0;
    double sd = 0.0;

    static ScalarDist point(double v) { return {Kind::point, v, 0.0}; }
    static ScalarDist gaussian(double mean, double sd) {
        if (!(sd > 0.0)) throw config_error("ScalarDist: Gaussian sd must be positive");
        return {Kind::gaussian, mean, sd};
    }
    bool is_point() const { return kind == Kind::point; }
    double second_moment() const { return mean * mean + sd * sd; }
    template <class Rng>
    double sample(Rng& rng) const {
        if (is_point()) return mean;
        return mean + sd * std::normal_distribution<double>(0.0, 1.0)(rng);
    }
};

/// Law of r = ||w||: a point mass, or the chi law induced by w ~ N(0, sd^2 I_d).
struct RadialDist {
    enum class Kind { point, gaussian_w };
    Kind kind = Kind::point;
    double value = 1.0;  // r for point, per-coordinate sd for gaussian_w

    static RadialDist point(double r) {
        if (!(r > 0.0)) throw config_error("RadialDist: r must be positive");
        return {Kind::point, r};
    }
    static RadialDist gaussian_w(double sd) {
        if (!(sd > 0.0)) throw config_error("RadialDist: sd must be positive");
        return {Kind::gaussian_w, sd};
    }
    bool is_point() const { return kind == Kind::point; }
    double second_moment(int d) const { return is_point() ? value * value : d * value * value; }

    /// rho_r(r) for the Gaussian case: r^{d-1} exp(-r^2 / 2sd^2) / (2^{d/2-1} Gamma(d/2) sd^d).
    double density(double r, int d) const {
        if (is_point()) throw config_error("RadialDist::density: point mass has no density");
        if (r < 0.0) return 0.0;
        const double sd = value;
        return std::pow(r, d - 1) * std::exp(-r * r / (2.0 * sd * sd)) /
               (std::pow(2.0, 0.5 * d - 1.0) * std::tgamma(0.5 * d) * std::pow(sd, d));
    }
};

struct ParamModel {
    ScalarDist a;
    RadialDist r;
    double sigma_b = 1.0;
    int d = 1;

    ParamModel(ScalarDist a_dist, RadialDist r_dist, double sigma_b_, int d_)
        : a(a_dist), r(r_dist), sigma_b(sigma_b_), d(d_) {
        if (!(sigma_b > 0.0) || !std::isfinite(sigma_b)) throw config_error("ParamModel: sigma_b must be positive");
        if (d < 1) throw config_error("ParamModel: dimension must be >= 1");
        if (!std::isfinite(a.second_moment()) || !std::isfinite(r.second_moment(d))) {
            throw config_error("ParamModel: moments must be finite");
        }
    }

    bool point_masses() const { return a.is_point() && r.is_point(); }
};

struct McSpec {
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
};

/// Monte Carlo mean and its standard error (0 for exact values).
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// physical: the full Gamma(d/2) / (2 sqrt2 pi^{(d+1)/2} sigma_b s^{d-1}) prefactor.
/// unit:     only the s^{1-d} factor; the limit of the flow is invariant to this choice.
enum class Prefactor { physical, unit };

namespace detail {

inline double gamma_prefactor(const ParamModel& m, double s, Prefactor p) {
    const double radial = std::pow(s, 1 - m.d);
    if (p == Prefactor::unit) return radial;
    return std::tgamma(0.5 * m.d) /
           (2.0 * std::numbers::sqrt2 * std::pow(std::numbers::pi, 0.5 * (m.d + 1)) * m.sigma_b) * radial;
}

/// Fixed (a, r) draws shared across all frequencies (common random numbers).
struct ARSamples {
    std::vector<double> a, r;
};

inline ARSamples draw_ar(const ParamModel& m, const McSpec& mc) {
    if (mc.samples < 2) throw config_error("Monte Carlo needs at least 2 samples");
    std::mt19937_64 rng(mc.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ARSamples out;
    out.a.resize(mc.samples);
    out.r.resize(mc.samples);
    for (std::size_t i = 0; i < mc.samples; ++i) {
        out.a[i] = m.a.sample(rng);
        if (m.r.is_point()) {
            out.r[i] = m.r.value;
        } else {
            double s2 = 0.0;
            for (int k = 0; k < m.d; ++k) {
                const double z = normal(rng);
                s2 += z * z;
            }
            out.r[i] = m.r.value * std::sqrt(s2);
        }
    }
    return out;
}

inline Estimate kernel_expectation(const ParamModel& m, const Activation& act, double s, const ARSamples* ar) {
    if (ar == nullptr) return {neuron_spectral_kernel(act, m.a.mean, m.r.value, s), 0.0};
    const std::size_t n = ar->a.size();
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = neuron_spectral_kernel(act, ar->a[i], ar->r[i], s);
        const double delta = v - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (v - mean);
    }
    const double var = m2 / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

inline std::optional<ARSamples> samples_for(const ParamModel& m, const std::optional<McSpec>& mc) {
    if (m.point_masses()) return std::nullopt;
    if (!mc) throw config_error("gamma_squared: non-point-mass distribution requires a Monte Carlo spec");
    return draw_ar(m, *mc);
}

}  // namespace detail

/// gamma^2(s) at several frequency magnitudes, sharing one Monte Carlo sample set.
inline std::vector<Estimate> gamma_squared_profile(const ParamModel& m, const Activation& act,
                                                   std::span<const double> s, const std::optional<McSpec>& mc,
                                                   Prefactor p = Prefactor::physical) {
    for (double v : s) {
        if (!(v > 0.0) || !std::isfinite(v)) throw domain_error("gamma_squared: s must be positive and finite");
    }
    const auto ar = detail::samples_for(m, mc);
    std::vector<Estimate> out;
    out.reserve(s.size());
    for (double v : s) {
        const Estimate e = detail::kernel_expectation(m, act, v, ar ? &*ar : nullptr);
        const double c = detail::gamma_prefactor(m, v, p);
        out.push_back({c * e.value, c * e.std_error});
    }
    return out;
}

inline Estimate gamma_squared(const ParamModel& m, const Activation& act, double s,
                              const std::optional<McSpec>& mc = std::nullopt, Prefactor p = Prefactor::physical) {
    return gamma_squared_profile(m, act, std::span<const double>(&s, 1), mc, p).front();
}

/// gamma^2 on every lattice mode. Under the penalized policy gamma0 supplies the
/// (finite) zero-mode weight.
inline GammaWeight make_gamma_weight(const ParamModel& m, const Activation& act, const Lattice& lat,
                                     const std::optional<McSpec>& mc = std::nullopt,
                                     Prefactor p = Prefactor::physical, std::optional<double> gamma0 = std::nullopt) {
    if (lat.dim() != m.d) throw config_error("make_gamma_weight: lattice and model dimensions differ");
    if (lat.zero_mode() == ZeroMode::penalized && !gamma0) {
        throw config_error("make_gamma_weight: penalized zero mode needs an explicit finite gamma0");
    }
    std::map<long, double> radius_of;
    for (std::size_t i = 0; i < lat.size(); ++i) {
        if (i == lat.zero_index()) continue;
        long r2 = 0;
        for (int k : lat.k_of(i)) r2 += static_cast<long>(k) * k;
        radius_of.emplace(r2, std::sqrt(static_cast<double>(r2)) / lat.period());
    }
    std::vector<double> s;
    s.reserve(radius_of.size());
    for (const auto& kv : radius_of) s.push_back(kv.second);
    const auto prof = gamma_squared_profile(m, act, s, mc, p);
    std::map<long, double> value_of;
    std::size_t idx = 0;
    for (const auto& kv : radius_of) value_of[kv.first] = prof[idx++].value;
    std::vector<double> g(lat.size(), 0.0);
    for (std::size_t i = 0; i < lat.size(); ++i) {
        if (i == lat.zero_index()) {
            if (gamma0) g[i] = *gamma0;
            continue;
        }
        long r2 = 0;
        for (int k : lat.k_of(i)) r2 += static_cast<long>(k) * k;
        g[i] = value_of.at(r2);
    }
    return GammaWeight(lat, std::move(g));
}

/// Structure-of-arrays neuron parameters; w is row-major m x d.
struct NeuronSet {
    int d = 1;
    std::vector<double> a, w, b;

    std::size_t size() const { return a.size(); }
    std::span<const double> w_of(std::size_t j) const {
        return std::span<const double>(w).subspan(j * static_cast<std::size_t>(d), static_cast<std::size_t>(d));
    }
};

/// m independent draws: a ~ a_dist, w = r * u with u uniform on S^{d-1}, b ~ N(0, sigma_b^2).
inline NeuronSet sample_neurons(const ParamModel& m, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw config_error("sample_neurons: m must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    NeuronSet n;
    n.d = m.d;
    n.a.resize(count);
    n.b.resize(count);
    n.w.resize(count * static_cast<std::size_t>(m.d));
    std::vector<double> z(static_cast<std::size_t>(m.d));
    for (std::size_t j = 0; j < count; ++j) {
        n.a[j] = m.a.sample(rng);
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (auto& v : z) {
                v = normal(rng);
                norm2 += v * v;
            }
        } while (norm2 == 0.0);
        // Gaussian w is sd * z directly; a point radius rescales the direction z / |z|.
        const double scale = m.r.is_point() ? m.r.value / std::sqrt(norm2) : m.r.value;
        for (int k = 0; k < m.d; ++k) n.w[j * static_cast<std::size_t>(m.d) + static_cast<std::size_t>(k)] = scale * z[static_cast<std::size_t>(k)];
        n.b[j] = m.sigma_b * normal(rng);
    }
    return n;
}

}  // namespace lfp
