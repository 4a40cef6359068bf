#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>

#include "lfp/errors.hpp"

namespace lfp {

/// Training set S = {(x_i, y_i)} inside the box [lo, hi]^d. X is n x d.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd Y;
    double lo = 0.0;
    double hi = 1.0;

    Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, double lo_, double hi_)
        : X(std::move(x)), Y(std::move(y)), lo(lo_), hi(hi_) {
        if (X.rows() < 1) throw config_error("Dataset: need at least one point");
        if (X.rows() != Y.size()) throw config_error("Dataset: X and Y sizes differ");
        if (!(hi > lo)) throw config_error("Dataset: empty domain box");
        if (!X.allFinite() || !Y.allFinite()) throw config_error("Dataset: non-finite entries");
        if ((X.array() < lo).any() || (X.array() > hi).any()) throw config_error("Dataset: point outside the domain box");
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            for (Eigen::Index j = 0; j < i; ++j) {
                if ((X.row(i) - X.row(j)).cwiseAbs().maxCoeff() == 0.0) {
                    throw config_error("Dataset: duplicate point at rows " + std::to_string(j) + " and " +
                                       std::to_string(i));
                }
            }
        }
    }

    /// 1-d convenience constructor.
    static Dataset line(std::span<const double> x, std::span<const double> y, double lo, double hi) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(x.size()), 1);
        Eigen::VectorXd Y(static_cast<Eigen::Index>(y.size()));
        for (std::size_t i = 0; i < x.size(); ++i) X(static_cast<Eigen::Index>(i), 0) = x[i];
        for (std::size_t i = 0; i < y.size(); ++i) Y(static_cast<Eigen::Index>(i)) = y[i];
        return Dataset(std::move(X), std::move(Y), lo, hi);
    }

    Eigen::Index n() const { return X.rows(); }
    int dim() const { return static_cast<int>(X.cols()); }
    double domain_length() const { return hi - lo; }
    std::span<const double> point(Eigen::Index i, std::vector<double>& buf) const {
        buf.resize(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index a = 0; a < X.cols(); ++a) buf[static_cast<std::size_t>(a)] = X(i, a);
        return buf;
    }
};

}  // namespace lfp
