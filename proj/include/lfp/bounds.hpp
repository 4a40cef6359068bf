#pragma once

// FP-norm generalization machinery: Rademacher complexity of the FP-ball (bound
// and exact small-n enumeration), a-priori population-risk bounds, and the
// frequency sweep of test loss against target frequency.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lfp/dataset.hpp"
#include "lfp/errors.hpp"
#include "lfp/network.hpp"
#include "lfp/param_model.hpp"
#include "lfp/solver.hpp"
#include "lfp/spectral.hpp"

namespace lfp {

/// all_modes: every mode weighted. zero_excluded: gamma(0)^{-1} := 0 and the
/// constant is controlled separately by c0.
enum class BoundCase { all_modes, zero_excluded };

inline std::string to_string(BoundCase c) { return c == BoundCase::all_modes ? "all_modes" : "zero_excluded"; }

/// Q ||gamma|| / sqrt(n), plus c0 / sqrt(n) in the zero-excluded case.
inline double rademacher_bound(double Q, const GammaWeight& w, long n, BoundCase c, std::optional<double> c0 = {}) {
    if (n < 1) throw config_error("rademacher_bound: n must be >= 1");
    if (!(Q >= 0.0)) throw config_error("rademacher_bound: Q must be non-negative");
    const double rn = std::sqrt(static_cast<double>(n));
    double v = Q * gamma_l2_norm(w) / rn;
    if (c == BoundCase::zero_excluded) {
        if (!c0) throw config_error("rademacher_bound: zero-excluded case requires c0");
        v += *c0 / rn;
    }
    return v;
}

/// Exact Rademacher complexity of {h : ||h - h_ini||_gamma <= Q (, |phi(0)| <= c0)} on X:
/// (1/n) 2^{-n} sum_tau [Q sqrt(tau^T G tau) + c0 |sum tau|], by enumeration of all sign vectors.
inline double rademacher_exact(const Eigen::MatrixXd& X, double Q, const GammaWeight& w, std::optional<double> c0 = {}) {
    const auto n = X.rows();
    if (n < 1 || n > 12) throw config_error("rademacher_exact: enumeration supports 1 <= n <= 12");
    const Eigen::MatrixXd G = gram_matrix(X, w);
    const std::uint32_t count = 1u << n;
    double total = 0.0;
    Eigen::VectorXd tau(n);
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        for (Eigen::Index i = 0; i < n; ++i) tau(i) = ((mask >> i) & 1u) ? 1.0 : -1.0;
        double term = Q * std::sqrt(std::max(tau.dot(G * tau), 0.0));
        if (c0) term += *c0 * std::abs(tau.sum());
        total += term;
    }
    return total / static_cast<double>(count) / static_cast<double>(n);
}

struct BoundReport {
    BoundCase bound_case = BoundCase::zero_excluded;
    double Q = 0.0;                  // ||f - h_ini||_gamma
    std::optional<double> c0;        // ||f - h_ini||_inf + Q ||gamma|| (zero-excluded case)
    double sup_norm = 0.0;           // ||f - h_ini||_inf on the grid
    std::size_t sup_grid_points = 0;
    double projection_residual = 0.0;  // sup |f - P f| on the same grid
    double gamma_l2 = 0.0;
    long n = 0;
    double delta = 0.0;
    double rad_bound = 0.0;
    double risk_bound = 0.0;
    bool unbounded = false;
};

/// Points per axis of the sup-norm grid: 4096 in 1-d, 256 per axis above.
inline std::size_t sup_grid_per_axis(int d) { return d == 1 ? 4096 : 256; }

namespace detail {
template <class Visit>
void for_each_grid_point(int d, double lo, double hi, std::size_t per_axis, Visit&& visit) {
    std::vector<std::size_t> digit(static_cast<std::size_t>(d), 0);
    std::vector<double> x(static_cast<std::size_t>(d));
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= per_axis;
    for (std::size_t p = 0; p < total; ++p) {
        for (int a = 0; a < d; ++a) {
            x[static_cast<std::size_t>(a)] =
                lo + (hi - lo) * static_cast<double>(digit[static_cast<std::size_t>(a)]) / static_cast<double>(per_axis - 1);
        }
        visit(std::span<const double>(x));
        for (int a = d - 1; a >= 0; --a) {
            if (++digit[static_cast<std::size_t>(a)] < per_axis) break;
            digit[static_cast<std::size_t>(a)] = 0;
        }
    }
}
}  // namespace detail

/// A-priori bound from the FP-norm of f - h_ini. `f_minus_ini` is
/// projected onto the lattice of w with `quadrature` points per axis; sup norms
/// are taken over the domain box [lo, hi]^d.
inline BoundReport apriori_bound(const std::function<double(std::span<const double>)>& f_minus_ini,
                                 const GammaWeight& w, long n, double delta, BoundCase c, double lo, double hi,
                                 int quadrature = 0) {
    if (!(delta > 0.0 && delta < 1.0)) throw config_error("apriori_bound: delta must be in (0, 1)");
    if (n < 1) throw config_error("apriori_bound: n must be >= 1");
    const Lattice& lat = w.lattice();
    if (c == BoundCase::all_modes && lat.zero_mode() != ZeroMode::penalized) {
        throw config_error("apriori_bound: the all-modes case needs a penalized zero mode");
    }
    if (c == BoundCase::zero_excluded && lat.zero_mode() == ZeroMode::penalized) {
        throw config_error("apriori_bound: the zero-excluded case needs an unweighted zero mode");
    }
    const int q = quadrature > 0 ? quadrature : 4 * lat.cutoff() + 4;
    const SpectralCoefficients phi = project(f_minus_ini, lat, q);
    BoundReport r;
    r.bound_case = c;
    r.n = n;
    r.delta = delta;
    r.Q = fp_norm(phi, w);
    r.gamma_l2 = gamma_l2_norm(w);
    const std::size_t per_axis = sup_grid_per_axis(lat.dim());
    std::size_t count = 0;
    detail::for_each_grid_point(lat.dim(), lo, hi, per_axis, [&](std::span<const double> x) {
        const double v = f_minus_ini(x);
        r.sup_norm = std::max(r.sup_norm, std::abs(v));
        r.projection_residual = std::max(r.projection_residual, std::abs(v - evaluate(phi, x)));
        ++count;
    });
    r.sup_grid_points = count;
    r.unbounded = !std::isfinite(r.Q);
    const double rn = std::sqrt(static_cast<double>(n));
    const double factor = 2.0 / rn + 4.0 * std::sqrt(2.0 * std::log(4.0 / delta) / static_cast<double>(n));
    const double qg = r.Q * r.gamma_l2;
    if (c == BoundCase::all_modes) {
        r.rad_bound = qg / rn;
        r.risk_bound = qg * factor;
    } else {
        r.c0 = r.sup_norm + qg;
        r.rad_bound = (*r.c0 + qg) / rn;
        r.risk_bound = (r.sup_norm + 2.0 * qg) * factor;
    }
    if (r.unbounded) {
        r.rad_bound = INFINITY;
        r.risk_bound = INFINITY;
    }
    return r;
}

enum class Learner { nn, lfp };

inline Learner learner_from_string(const std::string& s) {
    if (s == "nn") return Learner::nn;
    if (s == "lfp") return Learner::lfp;
    throw config_error("unknown learner '" + s + "' (expected nn or lfp)");
}

struct SweepOptions {
    std::vector<int> v_list{1, 2, 3, 4, 5};
    Learner learner = Learner::lfp;
    int n_train = 20;
    int n_test = 500;
    // Independent draws per v; the reported test loss is their mean.
    int trials = 8;
    std::uint64_t seed = 0;
    double delta = 0.1;
    // Target sin(2 pi v x) on [lo, lo + 1]; lattice period L' = L_prime_factor * 1.
    double lo = -0.5;
    int K = 400;
    double L_prime_factor = 10.0;
    // NN learner.
    std::size_t m = 2000;
    bool asi = true;
    double lr = 0.0;
    double mse_tol = 1e-5;  // training MSE threshold; R_S tolerance is n * mse_tol / 2
    std::size_t max_steps = 400000;
};

struct SweepRow {
    int v = 0;
    double test_loss = 0.0;      // mean over trials
    double test_loss_max = 0.0;  // worst trial
    double train_mse = 0.0;      // worst trial
    std::size_t steps = 0;       // most steps used by a trial
    int converged = 0;           // trials that reached mse_tol (nn learner)
    int trials = 0;
    BoundReport bound;
};

/// Fits sin(2 pi v x) from n_train uniform samples per v and reports the 500-point
/// test MSE (averaged over independent trials) together with the zero-excluded
/// a-priori bound at the given delta. An nn run that exhausts max_steps is
/// reported through converged < trials, not thrown.
inline std::vector<SweepRow> frequency_sweep(const ParamModel& model, const Activation& act, const SweepOptions& opt,
                                             const std::optional<McSpec>& mc = std::nullopt) {
    if (model.d != 1) throw config_error("frequency_sweep: one-dimensional model required");
    if (opt.trials < 1) throw config_error("frequency_sweep: trials must be positive");
    for (int v : opt.v_list) {
        if (v < 0) throw config_error("frequency_sweep: frequencies must be non-negative");
        if (2 * v >= opt.n_train) {
            throw config_error("frequency_sweep: v = " + std::to_string(v) + " violates the Nyquist condition 2v < n_train = " +
                               std::to_string(opt.n_train));
        }
        if (v * opt.L_prime_factor > opt.K) throw config_error("frequency_sweep: lattice cutoff too small for v");
    }
    const Lattice lat(1, opt.K, opt.L_prime_factor, ZeroMode::unpenalized);
    const GammaWeight w = make_gamma_weight(model, act, lat, mc, Prefactor::unit);
    const double lo = opt.lo, hi = opt.lo + 1.0;
    std::vector<SweepRow> rows;
    for (int v : opt.v_list) {
        const auto f = [v](double x) { return std::sin(2.0 * std::numbers::pi * v * x); };
        SweepRow row;
        row.v = v;
        row.trials = opt.trials;
        for (int t = 0; t < opt.trials; ++t) {
            const std::uint64_t stream = (opt.seed * 1000003ULL + static_cast<std::uint64_t>(v)) * 1009ULL + static_cast<std::uint64_t>(t);
            std::mt19937_64 rng(stream);
            std::uniform_real_distribution<double> uni(lo, hi);
            std::vector<double> xs(static_cast<std::size_t>(opt.n_train)), ys(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) {
                xs[i] = uni(rng);
                ys[i] = f(xs[i]);
            }
            const Dataset data = Dataset::line(xs, ys, lo, hi);
            Eigen::MatrixXd Xt(opt.n_test, 1);
            Eigen::VectorXd Yt(opt.n_test);
            for (int i = 0; i < opt.n_test; ++i) {
                Xt(i, 0) = uni(rng);
                Yt(i) = f(Xt(i, 0));
            }
            Eigen::VectorXd pred, train_pred;
            if (opt.learner == Learner::lfp) {
                const SpectralCoefficients h = solve_constrained(data, w, SpectralCoefficients(lat));
                pred = detail::evaluate_on(h, Xt);
                train_pred = detail::evaluate_on(h, data.X);
                ++row.converged;
            } else {
                TwoLayerNet net = TwoLayerNet::init(model, act, opt.m, opt.asi, stream * 7919ULL + 17ULL);
                TrainOptions to;
                to.lr = opt.lr;
                to.max_steps = opt.max_steps;
                to.loss_tol = 0.5 * opt.n_train * opt.mse_tol;
                const TrainResult tr = train_gd(net, data, to);
                row.converged += tr.converged ? 1 : 0;
                row.steps = std::max(row.steps, tr.steps);
                pred = net.forward(Xt);
                train_pred = net.forward(data.X);
            }
            const double test = (pred - Yt).squaredNorm() / opt.n_test;
            row.test_loss += test / opt.trials;
            row.test_loss_max = std::max(row.test_loss_max, test);
            row.train_mse = std::max(row.train_mse, (train_pred - data.Y).squaredNorm() / opt.n_train);
        }
        row.bound = apriori_bound([&](std::span<const double> x) { return f(x[0]); }, w, opt.n_train, opt.delta,
                                  BoundCase::zero_excluded, lo, hi);
        rows.push_back(row);
    }
    return rows;
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
            i = j + 1;
        }
        return r;
    };
    if (x.size() != y.size() || x.size() < 2) throw config_error("spearman: need two equal-length samples");
    const auto rx = ranks(x), ry = ranks(y);
    const Eigen::Map<const Eigen::VectorXd> a(rx.data(), static_cast<Eigen::Index>(rx.size()));
    const Eigen::Map<const Eigen::VectorXd> b(ry.data(), static_cast<Eigen::Index>(ry.size()));
    const Eigen::VectorXd ca = a.array() - a.mean(), cb = b.array() - b.mean();
    return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

}  // namespace lfp
