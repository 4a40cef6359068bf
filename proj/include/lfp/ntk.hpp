#pragma once

// Infinite-width neural tangent kernel
//   K(x, x') = E[sigma(z) sigma(z') + a^2 sigma'(z) sigma'(z') (x.x' + 1)],  z = w.x + b,
// estimated by Monte Carlo over the initial parameter distribution.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "lfp/activation.hpp"
#include "lfp/dataset.hpp"
#include "lfp/detail/linalg.hpp"
#include "lfp/detail/parallel.hpp"
#include "lfp/param_model.hpp"

namespace lfp {

/// Kernel estimator bound to one fixed sample set, so K(x, x') = K(x', x) exactly
/// and every Gram matrix it produces is a sum of positive semidefinite terms.
class KernelEstimate {
public:
    KernelEstimate(const ParamModel& model, Activation act, const McSpec& mc)
        : act_(std::move(act)), mc_(mc), s_(sample_neurons(model, mc.samples, mc.seed)) {
        if (mc.samples < 2) throw config_error("KernelEstimate: need at least 2 samples");
    }

    std::size_t samples() const { return mc_.samples; }
    std::uint64_t seed() const { return mc_.seed; }
    int dim() const { return s_.d; }

    Estimate operator()(std::span<const double> x, std::span<const double> xp) const {
        const auto d = static_cast<std::size_t>(s_.d);
        if (x.size() != d || xp.size() != d) throw config_error("KernelEstimate: point has wrong dimension");
        double dot = 1.0;
        for (std::size_t k = 0; k < d; ++k) dot += x[k] * xp[k];
        double mean = 0.0;
        double m2 = 0.0;
        for (std::size_t j = 0; j < s_.size(); ++j) {
            double z = s_.b[j];
            double zp = s_.b[j];
            for (std::size_t k = 0; k < d; ++k) {
                z += s_.w[j * d + k] * x[k];
                zp += s_.w[j * d + k] * xp[k];
            }
            const double v = act_.value(z) * act_.value(zp) +
                             s_.a[j] * s_.a[j] * act_.derivative(z) * act_.derivative(zp) * dot;
            const double delta = v - mean;
            mean += delta / static_cast<double>(j + 1);
            m2 += delta * (v - mean);
        }
        const double n = static_cast<double>(s_.size());
        return {mean, std::sqrt(m2 / (n - 1.0) / n)};
    }

    /// Mean kernel between the rows of A and B. Samples are processed in fixed
    /// chunks and the chunk sums added in order, independent of the thread count.
    Eigen::MatrixXd matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
        if (A.cols() != s_.d || B.cols() != s_.d) throw config_error("KernelEstimate: points have wrong dimension");
        constexpr std::size_t chunk = 4096;
        const std::size_t chunks = (s_.size() + chunk - 1) / chunk;
        const Eigen::MatrixXd dots = (A * B.transpose()).array() + 1.0;
        std::vector<Eigen::MatrixXd> partial(chunks);
        detail::parallel_chunks(chunks, [&](std::size_t c) {
            const std::size_t lo = c * chunk;
            const std::size_t hi = std::min(s_.size(), lo + chunk);
            Eigen::MatrixXd SA, DA, SB, DB;
            features(A, lo, hi, SA, DA);
            features(B, lo, hi, SB, DB);
            partial[c] = SA * SB.transpose() + (DA * DB.transpose()).cwiseProduct(dots);
        });
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(A.rows(), B.rows());
        for (const auto& p : partial) K += p;
        return K / static_cast<double>(s_.size());
    }

    Eigen::MatrixXd gram(const Eigen::MatrixXd& X) const { return detail::symmetrized(matrix(X, X)); }

private:
    void features(const Eigen::MatrixXd& X, std::size_t lo, std::size_t hi, Eigen::MatrixXd& S, Eigen::MatrixXd& D) const {
        const auto d = static_cast<std::size_t>(s_.d);
        S.resize(X.rows(), static_cast<Eigen::Index>(hi - lo));
        D.resize(X.rows(), static_cast<Eigen::Index>(hi - lo));
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            for (std::size_t j = lo; j < hi; ++j) {
                double z = s_.b[j];
                for (std::size_t k = 0; k < d; ++k) z += s_.w[j * d + k] * X(i, static_cast<Eigen::Index>(k));
                S(i, static_cast<Eigen::Index>(j - lo)) = act_.value(z);
                D(i, static_cast<Eigen::Index>(j - lo)) = s_.a[j] * act_.derivative(z);
            }
        }
    }

    Activation act_;
    McSpec mc_;
    NeuronSet s_;
};

inline Estimate ntk_kernel(const ParamModel& model, const Activation& act, std::span<const double> x,
                           std::span<const double> xp, const McSpec& mc) {
    if (mc.samples < 1000) throw config_error("ntk_kernel: need at least 1000 Monte Carlo samples");
    return KernelEstimate(model, act, mc)(x, xp);
}

using PointFunction = std::function<double(std::span<const double>)>;

namespace detail {
inline Eigen::VectorXd apply_rows(const PointFunction& f, const Eigen::MatrixXd& X) {
    Eigen::VectorXd out(X.rows());
    std::vector<double> x(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index k = 0; k < X.cols(); ++k) x[static_cast<std::size_t>(k)] = X(i, k);
        out(i) = f ? f(x) : 0.0;
    }
    return out;
}
}  // namespace detail

/// Long-time kernel-flow predictor f(x) = f_ini(x) - K(x, X) K(X, X)^{-1} (f_ini(X) - Y).
/// An empty f_ini means f_ini = 0.
inline Eigen::VectorXd kernel_predict(const KernelEstimate& k, const Dataset& data, const PointFunction& f_ini,
                                      const Eigen::MatrixXd& queries, double condition_limit = 1e12) {
    const auto f = detail::factor_spd(k.gram(data.X), condition_limit, "kernel_predict");
    const Eigen::VectorXd u0 = detail::apply_rows(f_ini, data.X) - data.Y;
    return detail::apply_rows(f_ini, queries) - k.matrix(queries, data.X) * f.solve(u0);
}

/// Training residual u(t) = exp(-K(X, X) t) (f_ini(X) - Y).
inline Eigen::VectorXd residual_flow(const KernelEstimate& k, const Dataset& data, const PointFunction& f_ini, double t) {
    if (!(t >= 0.0)) throw config_error("residual_flow: t must be non-negative");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k.gram(data.X));
    return detail::decay(eig, t, detail::apply_rows(f_ini, data.X) - data.Y);
}

}  // namespace lfp
