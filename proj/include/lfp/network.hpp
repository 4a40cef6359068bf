#pragma once

// Finite-width two-layer network f(x) = m^{-1/2} sum_j a_j sigma(w_j.x + b_j) and
// full-batch gradient descent on R_S = 1/2 sum_i (f(x_i) - y_i)^2.

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lfp/activation.hpp"
#include "lfp/dataset.hpp"
#include "lfp/errors.hpp"
#include "lfp/param_model.hpp"

namespace lfp {

/// Flat gradient layout: a (m), then w (d arrays of m, axis-major), then b (m).
struct NetGradient {
    std::vector<double> a;
    std::vector<std::vector<double>> w;
    std::vector<double> b;
};

class TwoLayerNet {
public:
    TwoLayerNet(Activation act, std::vector<double> a, std::vector<std::vector<double>> w, std::vector<double> b,
                bool asi)
        : act_(std::move(act)), a_(std::move(a)), w_(std::move(w)), b_(std::move(b)), asi_(asi) {
        if (a_.empty()) throw config_error("TwoLayerNet: width must be >= 1");
        if (w_.empty()) throw config_error("TwoLayerNet: dimension must be >= 1");
        for (const auto& col : w_) {
            if (col.size() != a_.size()) throw config_error("TwoLayerNet: parameter arrays have different lengths");
        }
        if (b_.size() != a_.size()) throw config_error("TwoLayerNet: parameter arrays have different lengths");
    }

    /// Draws parameters from the model. With asi, neuron 2p+1 copies (w, b) of
    /// neuron 2p and negates a, so the initial output is exactly zero.
    static TwoLayerNet init(const ParamModel& model, const Activation& act, std::size_t m, bool asi,
                            std::uint64_t seed) {
        if (m < 1) throw config_error("TwoLayerNet::init: m must be >= 1");
        if (asi && (m < 2 || m % 2 != 0)) throw config_error("TwoLayerNet::init: ASI needs an even width >= 2");
        const NeuronSet s = sample_neurons(model, asi ? m / 2 : m, seed);
        std::vector<double> a(m), b(m);
        std::vector<std::vector<double>> w(static_cast<std::size_t>(model.d), std::vector<double>(m));
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t src = asi ? j / 2 : j;
            const double sign = (asi && j % 2 == 1) ? -1.0 : 1.0;
            a[j] = sign * s.a[src];
            b[j] = s.b[src];
            for (int k = 0; k < model.d; ++k) {
                w[static_cast<std::size_t>(k)][j] = s.w[src * static_cast<std::size_t>(model.d) + static_cast<std::size_t>(k)];
            }
        }
        return TwoLayerNet(act, std::move(a), std::move(w), std::move(b), asi);
    }

    std::size_t width() const { return a_.size(); }
    int dim() const { return static_cast<int>(w_.size()); }
    bool asi() const { return asi_; }
    const Activation& activation() const { return act_; }
    const std::vector<double>& a() const { return a_; }
    const std::vector<std::vector<double>>& w() const { return w_; }
    const std::vector<double>& b() const { return b_; }
    std::vector<double>& a_mut() { return a_; }
    std::vector<std::vector<double>>& w_mut() { return w_; }
    std::vector<double>& b_mut() { return b_; }

    double pre_activation(std::size_t j, std::span<const double> x) const {
        double z = b_[j];
        for (std::size_t k = 0; k < w_.size(); ++k) z += w_[k][j] * x[k];
        return z;
    }

    /// Summed over adjacent neuron pairs first, so ASI partners cancel exactly.
    double forward(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != dim()) throw config_error("forward: point has wrong dimension");
        const std::size_t m = width();
        double acc = 0.0;
        std::size_t j = 0;
        for (; j + 1 < m; j += 2) {
            acc += a_[j] * act_.value(pre_activation(j, x)) + a_[j + 1] * act_.value(pre_activation(j + 1, x));
        }
        if (j < m) acc += a_[j] * act_.value(pre_activation(j, x));
        return acc / std::sqrt(static_cast<double>(m));
    }

    double forward(double x) const { return forward(std::span<const double>(&x, 1)); }

    Eigen::VectorXd forward(const Eigen::MatrixXd& X) const {
        Eigen::VectorXd out(X.rows());
        std::vector<double> x(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            for (Eigen::Index k = 0; k < X.cols(); ++k) x[static_cast<std::size_t>(k)] = X(i, k);
            out(i) = forward(x);
        }
        return out;
    }

    /// K_m(x, x') = grad_theta f(x) . grad_theta f(x').
    double empirical_ntk(std::span<const double> x, std::span<const double> xp) const {
        double dot = 1.0;
        for (std::size_t k = 0; k < x.size(); ++k) dot += x[k] * xp[k];
        double acc = 0.0;
        for (std::size_t j = 0; j < width(); ++j) {
            const double z = pre_activation(j, x);
            const double zp = pre_activation(j, xp);
            acc += act_.value(z) * act_.value(zp) + a_[j] * a_[j] * act_.derivative(z) * act_.derivative(zp) * dot;
        }
        return acc / static_cast<double>(width());
    }

    Eigen::MatrixXd empirical_ntk_gram(const Eigen::MatrixXd& X) const {
        const auto n = X.rows();
        const auto m = static_cast<Eigen::Index>(width());
        Eigen::MatrixXd S(n, m), D(n, m);
        std::vector<double> x(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index k = 0; k < X.cols(); ++k) x[static_cast<std::size_t>(k)] = X(i, k);
            for (Eigen::Index j = 0; j < m; ++j) {
                const double z = pre_activation(static_cast<std::size_t>(j), x);
                S(i, j) = act_.value(z);
                D(i, j) = a_[static_cast<std::size_t>(j)] * act_.derivative(z);
            }
        }
        const Eigen::MatrixXd dots = (X * X.transpose()).array() + 1.0;
        Eigen::MatrixXd K = (S * S.transpose() + (D * D.transpose()).cwiseProduct(dots)) / static_cast<double>(m);
        return 0.5 * (K + K.transpose());
    }

    /// ||theta||_2 over all parameters.
    double parameter_norm() const {
        double s = 0.0;
        for (double v : a_) s += v * v;
        for (const auto& col : w_) for (double v : col) s += v * v;
        for (double v : b_) s += v * v;
        return std::sqrt(s);
    }

    double parameter_distance(const TwoLayerNet& o) const {
        double s = 0.0;
        for (std::size_t j = 0; j < width(); ++j) {
            s += (a_[j] - o.a_[j]) * (a_[j] - o.a_[j]) + (b_[j] - o.b_[j]) * (b_[j] - o.b_[j]);
            for (std::size_t k = 0; k < w_.size(); ++k) s += (w_[k][j] - o.w_[k][j]) * (w_[k][j] - o.w_[k][j]);
        }
        return std::sqrt(s);
    }

private:
    Activation act_;
    std::vector<double> a_;
    std::vector<std::vector<double>> w_;
    std::vector<double> b_;
    bool asi_ = false;
};

inline void to_json(nlohmann::json& j, const TwoLayerNet& net) {
    j = {{"m", net.width()}, {"d", net.dim()}, {"activation", net.activation().name}, {"asi", net.asi()},
         {"a", net.a()},     {"w", net.w()},   {"b", net.b()}};
}

inline TwoLayerNet net_from_json(const nlohmann::json& j) {
    return TwoLayerNet(Activation::from_name(j.at("activation").get<std::string>()), j.at("a").get<std::vector<double>>(),
                       j.at("w").get<std::vector<std::vector<double>>>(), j.at("b").get<std::vector<double>>(),
                       j.at("asi").get<bool>());
}

namespace detail {

// Branch-free so the block loops vectorize.
struct ReluOps {
    double v(double z) const { return std::max(z, 0.0); }
    double dv(double z) const { return static_cast<double>(z > 0.0); }
};
struct TanhOps {
    double v(double z) const { return std::tanh(z); }
    double dv(double z) const {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
};
struct GenericOps {
    const Activation* act;
    double v(double z) const { return act->value(z); }
    double dv(double z) const { return act->derivative(z); }
};

/// One sweep over the neurons in cache-sized blocks. For each block it optionally
/// (1) accumulates the R_S gradient for residuals e, stores it in grad and/or
/// takes a step of size lr, then (2) accumulates the forward output of the
/// (updated) block into f. Block results are combined in block order, so the
/// arithmetic does not depend on anything but the inputs. D is the input
/// dimension when known at compile time, 0 otherwise.
template <int D, class Ops>
void neuron_pass(TwoLayerNet& net, const Eigen::MatrixXd& X, const Ops& ops, const double* e, double lr,
                 NetGradient* grad, double* f) {
    constexpr std::size_t block = 256;
    const std::size_t m = net.width();
    const auto n = static_cast<std::size_t>(X.rows());
    const std::size_t d = D > 0 ? static_cast<std::size_t>(D) : static_cast<std::size_t>(net.dim());
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
    double* a = net.a_mut().data();
    double* b = net.b_mut().data();
    std::vector<double*> w(d);
    for (std::size_t k = 0; k < d; ++k) w[k] = net.w_mut()[k].data();
    if (grad != nullptr) {
        grad->a.assign(m, 0.0);
        grad->b.assign(m, 0.0);
        grad->w.assign(d, std::vector<double>(m, 0.0));
    }
    if (f != nullptr) std::fill(f, f + n, 0.0);
    std::vector<double> x(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) x[i * d + k] = X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    alignas(64) double z[block], ga[block], gd[block];
    std::vector<double> gw(d * block);

    // z[j] = b_j + w_j . x_i over the block.
    auto pre_activations = [&](std::size_t j0, std::size_t len, std::size_t i) {
        const double* xi = x.data() + i * d;
        if constexpr (D == 1) {
            const double x0 = xi[0];
            const double* w0 = w[0] + j0;
            const double* bj = b + j0;
            for (std::size_t j = 0; j < len; ++j) z[j] = bj[j] + w0[j] * x0;
        } else if constexpr (D == 2) {
            const double x0 = xi[0], x1 = xi[1];
            const double* w0 = w[0] + j0;
            const double* w1 = w[1] + j0;
            const double* bj = b + j0;
            for (std::size_t j = 0; j < len; ++j) z[j] = bj[j] + w0[j] * x0 + w1[j] * x1;
        } else {
            for (std::size_t j = 0; j < len; ++j) z[j] = b[j0 + j];
            for (std::size_t k = 0; k < d; ++k) {
                const double* wk = w[k] + j0;
                for (std::size_t j = 0; j < len; ++j) z[j] += wk[j] * xi[k];
            }
        }
    };

    for (std::size_t j0 = 0; j0 < m; j0 += block) {
        const std::size_t len = std::min(block, m - j0);
        if (e != nullptr) {
            std::fill(ga, ga + len, 0.0);
            std::fill(gd, gd + len, 0.0);
            std::fill(gw.begin(), gw.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double ei = e[i];
                pre_activations(j0, len, i);
                for (std::size_t j = 0; j < len; ++j) {
                    const double zz = z[j];
                    ga[j] += ei * ops.v(zz);
                    const double dd = ei * ops.dv(zz);
                    gd[j] += dd;
                    z[j] = dd;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double xk = x[i * d + k];
                    double* g = gw.data() + k * block;
                    for (std::size_t j = 0; j < len; ++j) g[j] += z[j] * xk;
                }
            }
            for (std::size_t j = 0; j < len; ++j) {
                const double s = a[j0 + j] * inv_sqrt_m;
                ga[j] *= inv_sqrt_m;
                gd[j] *= s;
                for (std::size_t k = 0; k < d; ++k) gw[k * block + j] *= s;
            }
            if (grad != nullptr) {
                std::copy(ga, ga + len, grad->a.begin() + static_cast<std::ptrdiff_t>(j0));
                std::copy(gd, gd + len, grad->b.begin() + static_cast<std::ptrdiff_t>(j0));
                for (std::size_t k = 0; k < d; ++k) {
                    std::copy(gw.begin() + static_cast<std::ptrdiff_t>(k * block),
                              gw.begin() + static_cast<std::ptrdiff_t>(k * block + len),
                              grad->w[k].begin() + static_cast<std::ptrdiff_t>(j0));
                }
            }
            if (lr != 0.0) {
                for (std::size_t j = 0; j < len; ++j) {
                    a[j0 + j] -= lr * ga[j];
                    b[j0 + j] -= lr * gd[j];
                }
                for (std::size_t k = 0; k < d; ++k) {
                    double* wk = w[k] + j0;
                    const double* g = gw.data() + k * block;
                    for (std::size_t j = 0; j < len; ++j) wk[j] -= lr * g[j];
                }
            }
        }
        if (f != nullptr) {
            const double* aj = a + j0;
            for (std::size_t i = 0; i < n; ++i) {
                pre_activations(j0, len, i);
                for (std::size_t j = 0; j < len; ++j) z[j] = aj[j] * ops.v(z[j]);
                // Adjacent pairs first: ASI partners cancel exactly.
                double acc = 0.0;
                const std::size_t pairs = len / 2;
#pragma omp simd reduction(+ : acc)
                for (std::size_t p = 0; p < pairs; ++p) acc += z[2 * p] + z[2 * p + 1];
                if (len % 2 == 1) acc += z[len - 1];
                f[i] += acc;
            }
        }
    }
    if (f != nullptr) {
        for (std::size_t i = 0; i < n; ++i) f[i] *= inv_sqrt_m;
    }
}

template <class Ops>
void neuron_pass_any_dim(TwoLayerNet& net, const Eigen::MatrixXd& X, const Ops& ops, const double* e, double lr,
                         NetGradient* grad, double* f) {
    switch (net.dim()) {
        case 1: return neuron_pass<1>(net, X, ops, e, lr, grad, f);
        case 2: return neuron_pass<2>(net, X, ops, e, lr, grad, f);
        default: return neuron_pass<0>(net, X, ops, e, lr, grad, f);
    }
}

inline void dispatch_pass(TwoLayerNet& net, const Eigen::MatrixXd& X, const double* e, double lr, NetGradient* grad,
                          double* f) {
    switch (net.activation().kind) {
        case Activation::Kind::relu: return neuron_pass_any_dim(net, X, ReluOps{}, e, lr, grad, f);
        case Activation::Kind::tanh: return neuron_pass_any_dim(net, X, TanhOps{}, e, lr, grad, f);
        default: return neuron_pass_any_dim(net, X, GenericOps{&net.activation()}, e, lr, grad, f);
    }
}

inline double residuals(const std::vector<double>& f, const Dataset& data, std::vector<double>& e) {
    double loss = 0.0;
    e.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        e[i] = f[i] - data.Y(static_cast<Eigen::Index>(i));
        loss += 0.5 * e[i] * e[i];
    }
    return loss;
}

inline void check_net_data(const TwoLayerNet& net, const Dataset& data) {
    if (data.dim() != net.dim()) throw config_error("network and data dimensions differ");
}

}  // namespace detail

/// R_S(theta) and its analytic gradient, computed by the same pass train_gd uses.
inline std::pair<double, NetGradient> loss_and_gradient(const TwoLayerNet& net, const Dataset& data) {
    detail::check_net_data(net, data);
    TwoLayerNet copy = net;
    std::vector<double> f(static_cast<std::size_t>(data.n())), e;
    detail::dispatch_pass(copy, data.X, nullptr, 0.0, nullptr, f.data());
    const double loss = detail::residuals(f, data, e);
    NetGradient g;
    detail::dispatch_pass(copy, data.X, e.data(), 0.0, &g, nullptr);
    return {loss, std::move(g)};
}

inline double training_loss(const TwoLayerNet& net, const Dataset& data) { return loss_and_gradient(net, data).first; }

struct TrainOptions {
    double lr = 0.0;  // <= 0 selects 1 / (2 lambda_max) of the initial empirical NTK Gram
    std::size_t max_steps = 1000000;
    double loss_tol = 1e-6;
};

struct TrainResult {
    std::vector<double> loss_history;  // loss before each step and at the final state
    double lr = 0.0;
    std::size_t steps = 0;
    bool converged = false;
};

inline double default_learning_rate(const TwoLayerNet& net, const Dataset& data) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(net.empirical_ntk_gram(data.X), Eigen::EigenvaluesOnly);
    return 0.5 / eig.eigenvalues().maxCoeff();
}

/// Full-batch gradient descent until R_S <= loss_tol or max_steps updates.
inline TrainResult train_gd(TwoLayerNet& net, const Dataset& data, const TrainOptions& opt) {
    detail::check_net_data(net, data);
    TrainResult res;
    res.lr = opt.lr > 0.0 ? opt.lr : default_learning_rate(net, data);
    std::vector<double> f(static_cast<std::size_t>(data.n())), e;
    detail::dispatch_pass(net, data.X, nullptr, 0.0, nullptr, f.data());
    double initial = 0.0;
    for (std::size_t step = 0;; ++step) {
        const double loss = detail::residuals(f, data, e);
        res.loss_history.push_back(loss);
        if (!std::isfinite(loss)) throw numerical_error("train_gd: loss became non-finite at step " + std::to_string(step));
        if (step == 0) initial = loss;
        if (loss <= opt.loss_tol) {
            res.converged = true;
            break;
        }
        if (loss > 1e3 * initial) {
            std::ostringstream msg;
            msg << "train_gd: diverged at step " << step << " (loss " << loss << " > 1e3 x initial " << initial
                << ", lr " << res.lr << ")";
            throw numerical_error(msg.str());
        }
        if (step == 10 && !(loss < initial)) {
            std::ostringstream msg;
            msg << "train_gd: loss did not decrease over the first 10 steps with lr " << res.lr << "; try lr "
                << res.lr / 2;
            throw numerical_error(msg.str());
        }
        if (step == opt.max_steps) break;
        detail::dispatch_pass(net, data.X, e.data(), res.lr, nullptr, f.data());
        res.steps = step + 1;
    }
    return res;
}

}  // namespace lfp
