#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <string>

#include "lfp/errors.hpp"

namespace lfp::detail {

/// Cholesky factor of a symmetric positive (semi)definite matrix. On failure a
/// jitter of 1e-12 * trace / n is added once. The condition estimate is the
/// squared ratio of the largest to the smallest factor diagonal.
struct SpdFactor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
    double condition_estimate = 1.0;

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt.solve(rhs); }
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return llt.solve(rhs); }
};

inline SpdFactor factor_spd(const Eigen::MatrixXd& a, double condition_limit, const std::string& who) {
    SpdFactor f;
    f.llt.compute(a);
    if (f.llt.info() != Eigen::Success) {
        const double n = static_cast<double>(a.rows());
        f.jitter = 1e-12 * std::max(a.trace(), 0.0) / n;
        if (!(f.jitter > 0.0)) f.jitter = 1e-300;
        Eigen::MatrixXd shifted = a;
        shifted.diagonal().array() += f.jitter;
        f.llt.compute(shifted);
        if (f.llt.info() != Eigen::Success) {
            throw numerical_error(who + ": positive-definite factorization failed even with jitter");
        }
    }
    const auto diag = f.llt.matrixLLT().diagonal().cwiseAbs();
    const double lo = diag.minCoeff();
    const double hi = diag.maxCoeff();
    f.condition_estimate = lo > 0.0 ? (hi / lo) * (hi / lo) : INFINITY;
    if (f.condition_estimate > condition_limit) {
        std::ostringstream msg;
        msg << who << ": system is ill-conditioned (condition estimate " << f.condition_estimate << " > "
            << condition_limit << "); use a larger lattice, better separated points, or add jitter";
        throw numerical_error(msg.str());
    }
    return f;
}

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

/// exp(-t A) v for symmetric positive semidefinite A given its eigendecomposition.
inline Eigen::VectorXd decay(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig, double t,
                             const Eigen::VectorXd& v) {
    const Eigen::VectorXd coeff = eig.eigenvectors().transpose() * v;
    const Eigen::VectorXd scaled = (coeff.array() * (-t * eig.eigenvalues().array().max(0.0)).exp()).matrix();
    return eig.eigenvectors() * scaled;
}

/// A^+ (I - exp(-tA)) v: the time integral of exp(-sA) v over [0, t], restricted to
/// the eigenspace with eigenvalues above `floor`; the null space contributes t * v.
inline Eigen::VectorXd integrated_decay(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig, double t,
                                        const Eigen::VectorXd& v, double floor, bool include_null) {
    const Eigen::VectorXd coeff = eig.eigenvectors().transpose() * v;
    Eigen::VectorXd scaled(coeff.size());
    for (Eigen::Index i = 0; i < coeff.size(); ++i) {
        const double lam = eig.eigenvalues()(i);
        if (lam > floor) {
            scaled(i) = -std::expm1(-lam * t) / lam * coeff(i);
        } else {
            scaled(i) = include_null ? t * coeff(i) : 0.0;
        }
    }
    return eig.eigenvectors() * scaled;
}

}  // namespace lfp::detail
