#pragma once

// Lattice LFP gradient flow
//   d phi(k)/dt = gamma^2(k) sum_i (y_i - h(x_i, t)) exp(-2 pi i k.x_i / L'),
// integrated exactly (eigendecomposition of the Gram matrix) or by explicit Euler.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lfp/dataset.hpp"
#include "lfp/detail/csv.hpp"
#include "lfp/detail/linalg.hpp"
#include "lfp/solver.hpp"
#include "lfp/spectral.hpp"

namespace lfp {

/// Snapshots of the flow. residuals[j] = h(X, times[j]) - Y.
struct Trajectory {
    std::vector<double> times;
    std::vector<SpectralCoefficients> states;
    std::vector<Eigen::VectorXd> residuals;

    std::size_t size() const { return times.size(); }
    double residual_norm(std::size_t j) const { return residuals[j].norm(); }
};

struct ExactScheme {};
struct EulerScheme {
    double dt = 0.0;
};
using Scheme = std::variant<ExactScheme, EulerScheme>;

/// Matrix driving the data residual. Under the unpenalized policy the constant mode
/// relaxes infinitely fast, leaving P G P with P = I - 11^T / n.
inline Eigen::MatrixXd flow_matrix(const Dataset& data, const GammaWeight& w) {
    Eigen::MatrixXd G = gram_matrix(data, w);
    if (w.lattice().zero_mode() != ZeroMode::unpenalized) return G;
    const auto n = data.n();
    const Eigen::MatrixXd P =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    return detail::symmetrized(P * G * P);
}

/// Largest step for which explicit Euler on the residual system is stable.
inline double euler_stability_bound(const Dataset& data, const GammaWeight& w) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(flow_matrix(data, w), Eigen::EigenvaluesOnly);
    return 2.0 / eig.eigenvalues().maxCoeff();
}

namespace detail {

inline Trajectory evolve_exact(const SpectralCoefficients& phi_ini, const Dataset& data, const GammaWeight& w,
                               const std::vector<double>& times) {
    const Eigen::MatrixXd G = gram_matrix(data, w);
    const bool free_constant = w.lattice().zero_mode() == ZeroMode::unpenalized;
    const auto n = data.n();
    const Eigen::MatrixXd A = flow_matrix(data, w);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
    const double floor = 1e-14 * std::max(eig.eigenvalues().maxCoeff(), 0.0);
    const Eigen::VectorXd e0 = evaluate_on(phi_ini, data.X) - data.Y;
    const Eigen::VectorXd drive = free_constant ? Eigen::VectorXd(e0.array() - e0.mean()) : e0;

    Trajectory traj;
    for (double t : times) {
        if (t == 0.0) {
            traj.states.push_back(phi_ini);
        } else {
            const Eigen::VectorXd c = -integrated_decay(eig, t, drive, floor, false);
            double constant = 0.0;
            if (free_constant) constant = -(e0.sum() + (G * c).sum()) / static_cast<double>(n);
            traj.states.push_back(phi_ini + spectral_update(w, data.X, c, constant));
        }
        traj.times.push_back(t);
        traj.residuals.push_back(evaluate_on(traj.states.back(), data.X) - data.Y);
    }
    return traj;
}

inline Trajectory evolve_euler(const SpectralCoefficients& phi_ini, const Dataset& data, const GammaWeight& w,
                               double dt, const std::vector<double>& times) {
    const double bound = euler_stability_bound(data, w);
    if (!(dt > 0.0) || !(dt < bound)) {
        throw config_error("evolve: Euler step " + format_double(dt) + " violates the stability bound dt < " +
                           format_double(bound));
    }
    const Lattice& lat = w.lattice();
    const auto N = static_cast<Eigen::Index>(lat.size());
    // Phi(i, k) = exp(2 pi i k.x_i / L') over the full lattice.
    std::vector<std::size_t> all(lat.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const Eigen::MatrixXd theta = phase_angles(lat, data.X, all);
    const Eigen::MatrixXcd Phi = (std::complex<double>(0.0, 1.0) * theta.cast<std::complex<double>>()).array().exp().matrix();
    Eigen::VectorXd g(N);
    for (Eigen::Index k = 0; k < N; ++k) g(k) = lat.weighted(static_cast<std::size_t>(k)) ? w[static_cast<std::size_t>(k)] : 0.0;
    const auto z = static_cast<Eigen::Index>(lat.zero_index());
    const bool free_constant = lat.zero_mode() == ZeroMode::unpenalized;

    Eigen::VectorXcd phi(N);
    for (Eigen::Index k = 0; k < N; ++k) phi(k) = phi_ini[static_cast<std::size_t>(k)];
    auto residual = [&]() -> Eigen::VectorXd { return (Phi * phi).real() - data.Y; };
    if (free_constant) phi(z) -= residual().mean();

    Trajectory traj;
    long step = 0;
    for (double t : times) {
        const long target = std::lround(t / dt);
        for (; step < target; ++step) {
            const Eigen::VectorXd r = residual();
            phi -= dt * (g.cast<std::complex<double>>().array() * (Phi.adjoint() * r.cast<std::complex<double>>()).array()).matrix();
            if (free_constant) phi(z) -= residual().mean();
        }
        const double actual = static_cast<double>(step) * dt;
        if (!traj.times.empty() && actual <= traj.times.back()) continue;
        std::vector<cplx> v(static_cast<std::size_t>(N));
        for (Eigen::Index k = 0; k < N; ++k) v[static_cast<std::size_t>(k)] = phi(k);
        traj.times.push_back(actual);
        traj.states.emplace_back(lat, std::move(v));
        traj.residuals.push_back(evaluate_on(traj.states.back(), data.X) - data.Y);
    }
    return traj;
}

}  // namespace detail

/// Evolves phi_ini under the flow and records the state at each requested time.
inline Trajectory evolve(const SpectralCoefficients& phi_ini, const Dataset& data, const GammaWeight& w,
                         const Scheme& scheme, const std::vector<double>& times) {
    detail::check_shapes(data, w, phi_ini, "evolve");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0) || (i > 0 && !(times[i] > times[i - 1]))) {
            throw config_error("evolve: snapshot times must be non-negative and strictly increasing");
        }
    }
    if (const auto* e = std::get_if<EulerScheme>(&scheme)) return detail::evolve_euler(phi_ini, data, w, e->dt, times);
    return detail::evolve_exact(phi_ini, data, w, times);
}

/// `snapshots` equally spaced times on [0, T].
inline Trajectory evolve(const SpectralCoefficients& phi_ini, const Dataset& data, const GammaWeight& w,
                         const Scheme& scheme, double T, std::size_t snapshots) {
    if (snapshots < 2 || !(T > 0.0)) throw config_error("evolve: need T > 0 and at least two snapshots");
    std::vector<double> times(snapshots);
    for (std::size_t j = 0; j < snapshots; ++j) times[j] = T * static_cast<double>(j) / static_cast<double>(snapshots - 1);
    return evolve(phi_ini, data, w, scheme, times);
}

/// Default long-time horizon 40 / lambda_min of the flow matrix (ignoring the
/// structural zero of the free constant).
inline double default_horizon(const Dataset& data, const GammaWeight& w) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(flow_matrix(data, w), Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    const double floor = 1e-14 * ev.maxCoeff();
    double lo = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > floor) lo = std::min(lo, ev(i));
    }
    return 40.0 / lo;
}

/// |d phi(k)/dt| at t = 0 on weighted modes; unweighted modes report 0.
inline std::vector<double> spectral_velocity_envelope(const SpectralCoefficients& phi_ini, const Dataset& data,
                                                      const GammaWeight& w) {
    detail::check_shapes(data, w, phi_ini, "spectral_velocity_envelope");
    const Eigen::VectorXd forcing = data.Y - detail::evaluate_on(phi_ini, data.X);
    const SpectralCoefficients v = detail::spectral_update(w, data.X, forcing, 0.0);
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (w.lattice().weighted(i)) out[i] = std::abs(v[i]);
    }
    return out;
}

/// Half-open band [lo, hi) in integer lattice radius ||k||.
using Band = std::pair<double, double>;

namespace detail {
inline double band_error(const SpectralCoefficients& phi, const SpectralCoefficients& target, const Band& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double rad = phi.lattice().index_radius(i);
        if (rad >= b.first && rad < b.second) s += std::norm(phi[i] - target[i]);
    }
    return s;
}
}  // namespace detail

/// First snapshot time at which each band's squared error relative to `target` falls
/// to `threshold` times its initial value. Bands that never do report +inf.
inline std::vector<double> band_convergence_times(const Trajectory& traj, const SpectralCoefficients& target,
                                                  const std::vector<Band>& bands, double threshold) {
    if (traj.size() == 0) throw config_error("band_convergence_times: empty trajectory");
    const double r0 = traj.residual_norm(0);
    const double rT = traj.residual_norm(traj.size() - 1);
    if (r0 > 0.0 && !(rT < threshold * r0) && threshold < 1.0) {
        throw numerical_error("band_convergence_times: trajectory has not converged (final residual " + detail::format_double(rT) +
                              ", initial " + detail::format_double(r0) + ")");
    }
    std::vector<double> out;
    for (const auto& b : bands) {
        const double e0 = detail::band_error(traj.states.front(), target, b);
        double t = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < traj.size(); ++j) {
            if (e0 == 0.0 || detail::band_error(traj.states[j], target, b) <= threshold * e0) {
                t = traj.times[j];
                break;
            }
        }
        out.push_back(t);
    }
    return out;
}

/// CSV with columns t, residual_norm, band_<lo>_<hi> (relative squared band error).
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const SpectralCoefficients& target,
                                 const std::vector<Band>& bands) {
    std::vector<std::string> header{"t", "residual_norm"};
    for (const auto& b : bands) header.push_back("band_" + detail::format_double(b.first) + "_" + detail::format_double(b.second));
    detail::CsvWriter csv(os, header);
    std::vector<double> e0;
    for (const auto& b : bands) e0.push_back(detail::band_error(traj.states.front(), target, b));
    for (std::size_t j = 0; j < traj.size(); ++j) {
        std::vector<std::optional<double>> row{traj.times[j], traj.residual_norm(j)};
        for (std::size_t b = 0; b < bands.size(); ++b) {
            const double e = detail::band_error(traj.states[j], target, bands[b]);
            row.emplace_back(e0[b] > 0.0 ? e / e0[b] : 0.0);
        }
        csv.row(row);
    }
}

}  // namespace lfp
