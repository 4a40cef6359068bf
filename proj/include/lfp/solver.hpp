#pragma once

// Long-time limits of the LFP flow: the exact minimum-FP-norm interpolant, the
// ridge-regularized sin/cos regression, and the parameter-space equivalence check.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "lfp/dataset.hpp"
#include "lfp/detail/linalg.hpp"
#include "lfp/errors.hpp"
#include "lfp/spectral.hpp"

namespace lfp {

struct SolverOptions {
    double condition_limit = 1e12;
};

namespace detail {

inline void check_shapes(const Dataset& data, const GammaWeight& w, const SpectralCoefficients& phi_ini,
                         const char* who) {
    require_same_lattice(w.lattice(), phi_ini.lattice(), who);
    if (data.dim() != w.lattice().dim()) throw config_error(std::string(who) + ": data and lattice dimensions differ");
}

/// Flat indices of the positive half lattice (one representative per +-k pair).
inline std::vector<std::size_t> half_modes(const Lattice& lat) {
    std::vector<std::size_t> out;
    out.reserve(lat.size() / 2);
    for (std::size_t i = lat.zero_index() + 1; i < lat.size(); ++i) out.push_back(i);
    return out;
}

/// theta(i, j) = 2 pi k_j . x_i / L' for the given modes.
inline Eigen::MatrixXd phase_angles(const Lattice& lat, const Eigen::MatrixXd& X, const std::vector<std::size_t>& modes) {
    Eigen::MatrixXd K(X.cols(), static_cast<Eigen::Index>(modes.size()));
    for (std::size_t j = 0; j < modes.size(); ++j) {
        const auto k = lat.k_of(modes[j]);
        for (Eigen::Index a = 0; a < X.cols(); ++a) K(a, static_cast<Eigen::Index>(j)) = k[static_cast<std::size_t>(a)];
    }
    return (2.0 * std::numbers::pi / lat.period()) * (X * K);
}

inline Eigen::VectorXd evaluate_on(const SpectralCoefficients& phi, const Eigen::MatrixXd& X) {
    Eigen::VectorXd out(X.rows());
    std::vector<double> x(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index a = 0; a < X.cols(); ++a) x[static_cast<std::size_t>(a)] = X(i, a);
        out(i) = evaluate(phi, x);
    }
    return out;
}

/// delta phi(k) = gamma^2(k) sum_i c_i exp(-2 pi i k.x_i / L') on weighted modes;
/// the zero mode gets `constant` when it is not weighted.
inline SpectralCoefficients spectral_update(const GammaWeight& w, const Eigen::MatrixXd& X, const Eigen::VectorXd& c,
                                            double constant) {
    const Lattice& lat = w.lattice();
    SpectralCoefficients out(lat);
    const auto modes = half_modes(lat);
    const Eigen::MatrixXd theta = phase_angles(lat, X, modes);
    const Eigen::VectorXd re = theta.array().cos().matrix().transpose() * c;
    const Eigen::VectorXd im = theta.array().sin().matrix().transpose() * c;
    for (std::size_t j = 0; j < modes.size(); ++j) {
        const double g = w[modes[j]];
        out.set(modes[j], {g * re(static_cast<Eigen::Index>(j)), -g * im(static_cast<Eigen::Index>(j))});
    }
    const std::size_t z = lat.zero_index();
    out.set(z, {lat.weighted(z) ? w[z] * c.sum() : constant, 0.0});
    return out;
}

}  // namespace detail

/// G_ij = sum over weighted k of gamma^2(k) cos(2 pi k.(x_i - x_j) / L').
inline Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& X, const GammaWeight& w) {
    const Lattice& lat = w.lattice();
    if (X.cols() != lat.dim()) throw config_error("gram_matrix: data and lattice dimensions differ");
    const auto modes = detail::half_modes(lat);
    const Eigen::MatrixXd theta = detail::phase_angles(lat, X, modes);
    Eigen::VectorXd scale(static_cast<Eigen::Index>(modes.size()));
    for (std::size_t j = 0; j < modes.size(); ++j) scale(static_cast<Eigen::Index>(j)) = std::sqrt(2.0 * w[modes[j]]);
    const Eigen::MatrixXd C = theta.array().cos().matrix() * scale.asDiagonal();
    const Eigen::MatrixXd S = theta.array().sin().matrix() * scale.asDiagonal();
    Eigen::MatrixXd G = C * C.transpose() + S * S.transpose();
    const std::size_t z = lat.zero_index();
    if (lat.weighted(z)) G.array() += w[z];
    return detail::symmetrized(G);
}

inline Eigen::MatrixXd gram_matrix(const Dataset& data, const GammaWeight& w) { return gram_matrix(data.X, w); }

/// Minimum ||h - h_ini||_gamma among lattice functions with h(x_i) = y_i.
/// Under the unpenalized policy the constant is a free (unweighted) unknown.
inline SpectralCoefficients solve_constrained(const Dataset& data, const GammaWeight& w,
                                              const SpectralCoefficients& phi_ini, const SolverOptions& opt = {}) {
    detail::check_shapes(data, w, phi_ini, "solve_constrained");
    const Eigen::VectorXd r = data.Y - detail::evaluate_on(phi_ini, data.X);
    const Eigen::MatrixXd G = gram_matrix(data, w);
    const auto f = detail::factor_spd(G, opt.condition_limit, "solve_constrained");
    Eigen::VectorXd c = f.solve(r);
    double constant = 0.0;
    if (w.lattice().zero_mode() == ZeroMode::unpenalized) {
        const Eigen::VectorXd v = f.solve(Eigen::VectorXd(Eigen::VectorXd::Ones(data.n())));
        constant = c.sum() / v.sum();
        c -= constant * v;
    }
    return phi_ini + detail::spectral_update(w, data.X, c, constant);
}

/// Ridge design matrix: columns [sin(theta_j)]_{j in I}, then [cos(theta_j)]_{j in I},
/// where I is the zero mode followed by the positive half lattice.
inline Eigen::MatrixXd ridge_design_matrix(const Eigen::MatrixXd& X, const Lattice& lat) {
    std::vector<std::size_t> modes{lat.zero_index()};
    for (auto i : detail::half_modes(lat)) modes.push_back(i);
    const Eigen::MatrixXd theta = detail::phase_angles(lat, X, modes);
    Eigen::MatrixXd E(X.rows(), 2 * theta.cols());
    E << theta.array().sin().matrix(), theta.array().cos().matrix();
    return E;
}

/// argmin sum_i (h(x_i) - y_i)^2 + eps ||h - h_ini||_gamma^2, solved in the real
/// sin/cos parameterization as a = [E^T E + eps W^{-1}]^{-1} E^T (Y - h_ini(X)).
inline SpectralCoefficients solve_ridge(const Dataset& data, const GammaWeight& w, double eps,
                                        const SpectralCoefficients& phi_ini, std::size_t max_unknowns = 4000) {
    detail::check_shapes(data, w, phi_ini, "solve_ridge");
    if (!(eps > 0.0)) throw config_error("solve_ridge: eps must be positive");
    const Lattice& lat = w.lattice();
    const auto half = detail::half_modes(lat);
    const auto m = static_cast<Eigen::Index>(half.size() + 1);
    if (static_cast<std::size_t>(2 * m) > max_unknowns) {
        throw config_error("solve_ridge: " + std::to_string(2 * m) + " unknowns exceed the primal-form limit; use solve_constrained");
    }
    const Eigen::MatrixXd E = ridge_design_matrix(data.X, lat);
    const Eigen::VectorXd r = data.Y - detail::evaluate_on(phi_ini, data.X);
    Eigen::MatrixXd A = E.transpose() * E;
    Eigen::VectorXd rhs = E.transpose() * r;
    for (Eigen::Index j = 1; j < m; ++j) {
        const double inv_w = 1.0 / (2.0 * w[half[static_cast<std::size_t>(j - 1)]]);
        A(j, j) += eps * inv_w;
        A(m + j, m + j) += eps * inv_w;
    }
    const std::size_t z = lat.zero_index();
    const double jitter = 1e-12 * std::max(A.trace() / static_cast<double>(A.rows()), 1.0);
    switch (lat.zero_mode()) {
        case ZeroMode::penalized:
            A(0, 0) += eps / w[z];
            A(m, m) += eps / w[z];
            break;
        case ZeroMode::unpenalized:
            A(0, 0) += jitter;  // the sin(0) column vanishes
            break;
        case ZeroMode::excluded:
            A.row(m).setZero();
            A.col(m).setZero();
            A(m, m) = 1.0;
            rhs(m) = 0.0;
            A(0, 0) += jitter;
            break;
    }
    const auto f = detail::factor_spd(detail::symmetrized(A), INFINITY, "solve_ridge");
    const Eigen::VectorXd sol = f.solve(rhs);
    SpectralCoefficients delta(lat);
    for (Eigen::Index j = 1; j < m; ++j) {
        delta.set(half[static_cast<std::size_t>(j - 1)], {0.5 * sol(m + j), -0.5 * sol(j)});
    }
    delta.set(z, {sol(m), 0.0});
    return phi_ini + delta;
}

struct EquivalenceResult {
    Eigen::VectorXd theta_ode;
    Eigen::VectorXd theta_closed;
    double gap = 0.0;
};

/// Gradient flow d theta/dt = P^T (Y - P theta) integrated exactly to time T through the
/// eigendecomposition of P^T P, against P^T (P P^T)^{-1} (Y - P theta_ini) + theta_ini.
inline EquivalenceResult equivalence_check_matrix(const Eigen::MatrixXd& P, const Eigen::VectorXd& Y,
                                                  const Eigen::VectorXd& theta_ini, double T) {
    if (P.rows() > P.cols()) throw config_error("equivalence_check_matrix: need n <= m");
    if (Y.size() != P.rows() || theta_ini.size() != P.cols()) throw config_error("equivalence_check_matrix: shape mismatch");
    if (!(T >= 0.0)) throw config_error("equivalence_check_matrix: horizon must be non-negative");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-12 * sv(0)) throw config_error("equivalence_check_matrix: P is rank deficient");

    const Eigen::VectorXd e0 = Y - P * theta_ini;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(detail::symmetrized(P.transpose() * P));
    const double floor = 1e-12 * eig.eigenvalues().maxCoeff();
    EquivalenceResult out;
    out.theta_ode = theta_ini + detail::integrated_decay(eig, T, P.transpose() * e0, floor, false);
    const Eigen::MatrixXd PPt = P * P.transpose();
    out.theta_closed = theta_ini + P.transpose() * PPt.llt().solve(e0);
    out.gap = (out.theta_ode - out.theta_closed).norm();
    return out;
}

}  // namespace lfp
