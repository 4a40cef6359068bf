#pragma once

// Truncated frequency lattice k / L' with k in {-K..K}^d, Hermitian coefficient
// vectors on it, evaluation/projection, and the FP-norm.

#include <json.hpp>

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lfp/activation.hpp"
#include "lfp/errors.hpp"

namespace lfp {

/// How the k = 0 (constant) mode is treated.
///   penalized:   finite gamma^2(0), counted in every norm and sum.
///   unpenalized: free constant; interpolates but contributes 0 to the FP-norm.
///   excluded:    the constant mode is pinned to its initial value.
enum class ZeroMode { penalized, unpenalized, excluded };

inline std::string to_string(ZeroMode z) {
    switch (z) {
        case ZeroMode::penalized: return "penalized";
        case ZeroMode::unpenalized: return "unpenalized";
        case ZeroMode::excluded: return "excluded";
    }
    return "?";
}

inline ZeroMode zero_mode_from_string(const std::string& s) {
    if (s == "penalized") return ZeroMode::penalized;
    if (s == "unpenalized") return ZeroMode::unpenalized;
    if (s == "excluded") return ZeroMode::excluded;
    throw config_error("unknown zero-mode policy '" + s + "'");
}

/// Flat index layout: axis 0 varies slowest, each axis offset by K. With this
/// layout the mirror -k of index i is size() - 1 - i.
class Lattice {
public:
    Lattice(int d, int K, double L_prime, ZeroMode zero_mode = ZeroMode::unpenalized)
        : d_(d), K_(K), L_(L_prime), zero_mode_(zero_mode) {
        if (d < 1) throw config_error("Lattice: dimension must be >= 1");
        if (K < 0) throw config_error("Lattice: cutoff K must be >= 0");
        if (!(L_prime > 0.0) || !std::isfinite(L_prime)) throw config_error("Lattice: period must be positive");
        size_ = 1;
        for (int a = 0; a < d; ++a) size_ *= static_cast<std::size_t>(2 * K + 1);
    }

    int dim() const { return d_; }
    int cutoff() const { return K_; }
    double period() const { return L_; }
    ZeroMode zero_mode() const { return zero_mode_; }
    std::size_t size() const { return size_; }
    std::size_t zero_index() const { return (size_ - 1) / 2; }
    std::size_t mirror(std::size_t i) const { return size_ - 1 - i; }

    /// Integer multi-index k of flat index i.
    std::vector<int> k_of(std::size_t i) const {
        std::vector<int> k(static_cast<std::size_t>(d_));
        const auto side = static_cast<std::size_t>(2 * K_ + 1);
        for (int a = d_ - 1; a >= 0; --a) {
            k[static_cast<std::size_t>(a)] = static_cast<int>(i % side) - K_;
            i /= side;
        }
        return k;
    }

    std::size_t index_of(std::span<const int> k) const {
        if (static_cast<int>(k.size()) != d_) throw config_error("Lattice: multi-index has wrong dimension");
        std::size_t i = 0;
        for (int a = 0; a < d_; ++a) {
            if (k[a] < -K_ || k[a] > K_) throw config_error("Lattice: multi-index outside the cutoff");
            i = i * static_cast<std::size_t>(2 * K_ + 1) + static_cast<std::size_t>(k[a] + K_);
        }
        return i;
    }

    /// Euclidean norm of the integer multi-index.
    double index_radius(std::size_t i) const {
        double s = 0.0;
        for (int k : k_of(i)) s += static_cast<double>(k) * k;
        return std::sqrt(s);
    }

    /// |xi| = ||k|| / L'.
    double frequency_norm(std::size_t i) const { return index_radius(i) / L_; }

    /// Whether mode i carries a gamma weight that enters sums and norms.
    bool weighted(std::size_t i) const { return i != zero_index() || zero_mode_ == ZeroMode::penalized; }

    /// The same frequencies under another zero-mode policy.
    Lattice with_zero_mode(ZeroMode z) const { return Lattice(d_, K_, L_, z); }

    friend bool operator==(const Lattice& l, const Lattice& r) {
        return l.d_ == r.d_ && l.K_ == r.K_ && l.L_ == r.L_ && l.zero_mode_ == r.zero_mode_;
    }

private:
    int d_;
    int K_;
    double L_;
    ZeroMode zero_mode_;
    std::size_t size_ = 1;
};

namespace detail {

inline void require_same_lattice(const Lattice& a, const Lattice& b, const char* who) {
    if (!(a == b)) throw config_error(std::string(who) + ": lattice mismatch");
}

/// Per-axis phase tables exp(sign * 2 pi i k x_a / L') for k = -K..K.
inline std::vector<std::vector<cplx>> phase_tables(const Lattice& lat, std::span<const double> x, double sign) {
    const int K = lat.cutoff();
    std::vector<std::vector<cplx>> t(static_cast<std::size_t>(lat.dim()),
                                     std::vector<cplx>(static_cast<std::size_t>(2 * K + 1)));
    for (int a = 0; a < lat.dim(); ++a) {
        const double theta = sign * 2.0 * std::numbers::pi * x[static_cast<std::size_t>(a)] / lat.period();
        auto& row = t[static_cast<std::size_t>(a)];
        for (int k = -K; k <= K; ++k) row[static_cast<std::size_t>(k + K)] = std::polar(1.0, theta * k);
    }
    return t;
}

/// Visits every lattice index in flat order with its phase product.
template <class Visit>
void for_each_phase(const Lattice& lat, const std::vector<std::vector<cplx>>& tables, Visit&& visit) {
    const int d = lat.dim();
    const auto side = static_cast<std::size_t>(2 * lat.cutoff() + 1);
    if (d == 1) {
        for (std::size_t i = 0; i < side; ++i) visit(i, tables[0][i]);
        return;
    }
    std::vector<std::size_t> digit(static_cast<std::size_t>(d), 0);
    for (std::size_t i = 0; i < lat.size(); ++i) {
        cplx p = tables[0][digit[0]];
        for (int a = 1; a < d; ++a) p *= tables[static_cast<std::size_t>(a)][digit[static_cast<std::size_t>(a)]];
        visit(i, p);
        for (int a = d - 1; a >= 0; --a) {
            if (++digit[static_cast<std::size_t>(a)] < side) break;
            digit[static_cast<std::size_t>(a)] = 0;
        }
    }
}

}  // namespace detail

/// phi(k) = F[h](k / L') on a lattice. Construction enforces Hermitian symmetry
/// phi(-k) = conj(phi(k)) by averaging each mode with its mirror.
class SpectralCoefficients {
public:
    explicit SpectralCoefficients(Lattice lattice) : lattice_(std::move(lattice)), phi_(lattice_.size()) {}

    SpectralCoefficients(Lattice lattice, std::vector<cplx> phi) : lattice_(std::move(lattice)), phi_(std::move(phi)) {
        if (phi_.size() != lattice_.size()) throw config_error("SpectralCoefficients: size does not match lattice");
        for (const auto& c : phi_) {
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
                throw config_error("SpectralCoefficients: non-finite coefficient");
            }
        }
        symmetrize();
    }

    const Lattice& lattice() const { return lattice_; }
    const std::vector<cplx>& values() const { return phi_; }
    std::size_t size() const { return phi_.size(); }
    const cplx& operator[](std::size_t i) const { return phi_[i]; }

    /// Sets phi(k) and its mirror to conj.
    void set(std::size_t i, cplx v) {
        const std::size_t j = lattice_.mirror(i);
        if (i == j) {
            phi_[i] = {v.real(), 0.0};
        } else {
            phi_[i] = v;
            phi_[j] = std::conj(v);
        }
    }

    double l2_norm() const {
        double s = 0.0;
        for (const auto& c : phi_) s += std::norm(c);
        return std::sqrt(s);
    }

    SpectralCoefficients& operator+=(const SpectralCoefficients& o) {
        detail::require_same_lattice(lattice_, o.lattice_, "SpectralCoefficients +");
        for (std::size_t i = 0; i < phi_.size(); ++i) phi_[i] += o.phi_[i];
        return *this;
    }
    SpectralCoefficients& operator-=(const SpectralCoefficients& o) {
        detail::require_same_lattice(lattice_, o.lattice_, "SpectralCoefficients -");
        for (std::size_t i = 0; i < phi_.size(); ++i) phi_[i] -= o.phi_[i];
        return *this;
    }
    SpectralCoefficients& operator*=(double c) {
        for (auto& v : phi_) v *= c;
        return *this;
    }
    friend SpectralCoefficients operator+(SpectralCoefficients a, const SpectralCoefficients& b) { return a += b; }
    friend SpectralCoefficients operator-(SpectralCoefficients a, const SpectralCoefficients& b) { return a -= b; }
    friend SpectralCoefficients operator*(double c, SpectralCoefficients a) { return a *= c; }

private:
    void symmetrize() {
        for (std::size_t i = 0; i <= lattice_.zero_index(); ++i) {
            const std::size_t j = lattice_.mirror(i);
            const cplx avg = 0.5 * (phi_[i] + std::conj(phi_[j]));
            phi_[i] = avg;
            phi_[j] = std::conj(avg);
        }
        phi_[lattice_.zero_index()].imag(0.0);
    }

    Lattice lattice_;
    std::vector<cplx> phi_;
};

/// Radial positive weight gamma^2(|k| / L'). The value stored at k = 0 is used
/// only under the penalized policy; otherwise it is 0 and never read.
class GammaWeight {
public:
    GammaWeight(Lattice lattice, std::vector<double> gamma2) : lattice_(std::move(lattice)), g_(std::move(gamma2)) {
        if (g_.size() != lattice_.size()) throw config_error("GammaWeight: size does not match lattice");
        for (std::size_t i = 0; i < g_.size(); ++i) {
            if (!lattice_.weighted(i)) {
                g_[i] = 0.0;
                continue;
            }
            if (!(g_[i] > 0.0) || !std::isfinite(g_[i])) {
                throw config_error("GammaWeight: gamma^2 must be finite and positive on every weighted mode");
            }
        }
    }

    /// Builds the weight from a radial profile s -> gamma^2(s), evaluated once per
    /// distinct integer radius so equal-radius modes get bitwise equal weights.
    static GammaWeight from_radial(const Lattice& lat, const std::function<double(double)>& profile) {
        std::vector<double> g(lat.size(), 0.0);
        std::map<long, double> cache;
        for (std::size_t i = 0; i < lat.size(); ++i) {
            if (!lat.weighted(i)) continue;
            long r2 = 0;
            for (int k : lat.k_of(i)) r2 += static_cast<long>(k) * k;
            auto it = cache.find(r2);
            if (it == cache.end()) {
                it = cache.emplace(r2, profile(std::sqrt(static_cast<double>(r2)) / lat.period())).first;
            }
            const double v = it->second;
            g[i] = v;
        }
        return GammaWeight(lat, std::move(g));
    }

    const Lattice& lattice() const { return lattice_; }
    const std::vector<double>& values() const { return g_; }
    double operator[](std::size_t i) const { return g_[i]; }

    /// c * gamma^2, c > 0.
    GammaWeight scaled(double c) const {
        if (!(c > 0.0)) throw config_error("GammaWeight::scaled: factor must be positive");
        std::vector<double> g = g_;
        for (auto& v : g) v *= c;
        return GammaWeight(lattice_, std::move(g));
    }

private:
    Lattice lattice_;
    std::vector<double> g_;
};

/// Complex value sum_k phi(k) exp(2 pi i k.x / L'); the imaginary part is round-off.
inline cplx evaluate_complex(const SpectralCoefficients& phi, std::span<const double> x) {
    const Lattice& lat = phi.lattice();
    if (static_cast<int>(x.size()) != lat.dim()) throw config_error("evaluate: point has wrong dimension");
    const auto tables = detail::phase_tables(lat, x, +1.0);
    cplx acc{0.0, 0.0};
    detail::for_each_phase(lat, tables, [&](std::size_t i, cplx p) { acc += phi[i] * p; });
    return acc;
}

/// h(x) = Re sum_k phi(k) exp(2 pi i k.x / L').
inline double evaluate(const SpectralCoefficients& phi, std::span<const double> x) {
    return evaluate_complex(phi, x).real();
}

inline double evaluate(const SpectralCoefficients& phi, double x) { return evaluate(phi, std::span<const double>(&x, 1)); }

/// Batched evaluation; points is row-major n x d.
inline std::vector<double> evaluate_many(const SpectralCoefficients& phi, std::span<const double> points) {
    const auto d = static_cast<std::size_t>(phi.lattice().dim());
    if (points.size() % d != 0) throw config_error("evaluate_many: point buffer is not a multiple of d");
    std::vector<double> out(points.size() / d);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = evaluate(phi, points.subspan(p * d, d));
    return out;
}

/// Trapezoidal Fourier coefficients of f over [0, L')^d with q points per axis.
/// Exact for trigonometric polynomials inside the lattice when q >= 4K + 4.
inline SpectralCoefficients project(const std::function<double(std::span<const double>)>& f, const Lattice& lat,
                                    int quadrature_points) {
    const int q = quadrature_points;
    if (q < 4 * lat.cutoff() + 4) {
        throw config_error("project: need at least 4K+4 quadrature points per axis (got " + std::to_string(q) + ")");
    }
    const int d = lat.dim();
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(q);
    std::vector<cplx> phi(lat.size(), cplx{0.0, 0.0});
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<std::size_t> digit(static_cast<std::size_t>(d), 0);
    const double h = lat.period() / q;
    for (std::size_t p = 0; p < total; ++p) {
        for (int a = 0; a < d; ++a) x[static_cast<std::size_t>(a)] = h * static_cast<double>(digit[static_cast<std::size_t>(a)]);
        const double fx = f(x);
        const auto tables = detail::phase_tables(lat, x, -1.0);
        detail::for_each_phase(lat, tables, [&](std::size_t i, cplx ph) { phi[i] += fx * ph; });
        for (int a = d - 1; a >= 0; --a) {
            if (++digit[static_cast<std::size_t>(a)] < static_cast<std::size_t>(q)) break;
            digit[static_cast<std::size_t>(a)] = 0;
        }
    }
    const double scale = 1.0 / static_cast<double>(total);
    for (auto& c : phi) c *= scale;
    return SpectralCoefficients(lat, std::move(phi));
}

/// ||h||_gamma = (sum_k gamma(k)^{-2} |phi(k)|^2)^{1/2}; the zero mode is skipped
/// unless the policy is penalized.
inline double fp_norm(const SpectralCoefficients& phi, const GammaWeight& w) {
    detail::require_same_lattice(phi.lattice(), w.lattice(), "fp_norm");
    double s = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (w.lattice().weighted(i)) s += std::norm(phi[i]) / w[i];
    }
    return std::sqrt(s);
}

/// ||gamma||_{l2} over the weighted modes.
inline double gamma_l2_norm(const GammaWeight& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.values().size(); ++i) {
        if (w.lattice().weighted(i)) s += w[i];
    }
    return std::sqrt(s);
}

inline void to_json(nlohmann::json& j, const Lattice& lat) {
    j = {{"d", lat.dim()}, {"K", lat.cutoff()}, {"L_prime", lat.period()}, {"zero_mode", to_string(lat.zero_mode())}};
}

inline void to_json(nlohmann::json& j, const SpectralCoefficients& phi) {
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < phi.size(); ++i) {
        entries.push_back({phi.lattice().k_of(i), phi[i].real(), phi[i].imag()});
    }
    j = {{"lattice", phi.lattice()}, {"phi", std::move(entries)}};
}

/// Entries may be listed in any order and omitted modes are zero.
inline SpectralCoefficients spectral_from_json(const nlohmann::json& j) {
    const auto& l = j.at("lattice");
    const ZeroMode z = l.contains("zero_mode") ? zero_mode_from_string(l.at("zero_mode").get<std::string>())
                                               : ZeroMode::unpenalized;
    Lattice lat(l.at("d").get<int>(), l.at("K").get<int>(), l.at("L_prime").get<double>(), z);
    std::vector<cplx> phi(lat.size());
    for (const auto& e : j.at("phi")) {
        const auto k = e.at(0).get<std::vector<int>>();
        phi[lat.index_of(k)] = {e.at(1).get<double>(), e.at(2).get<double>()};
    }
    return SpectralCoefficients(lat, std::move(phi));
}

}  // namespace lfp
