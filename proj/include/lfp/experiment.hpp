#pragma once

// Config-driven experiment runner: JSON config schema, per-experiment defaults,
// validation, and the runs that emit curves/grid/sweep CSVs plus metrics.json.

#include <json.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lfp/activation.hpp"
#include "lfp/bounds.hpp"
#include "lfp/dataset.hpp"
#include "lfp/detail/csv.hpp"
#include "lfp/dynamics.hpp"
#include "lfp/errors.hpp"
#include "lfp/network.hpp"
#include "lfp/ntk.hpp"
#include "lfp/param_model.hpp"
#include "lfp/solver.hpp"
#include "lfp/spectral.hpp"
#include "lfp/spline.hpp"

namespace lfp {

inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"fig2_relu_cubic", "fig2_relu_linear", "fig2d_xor",    "fig_tanh",
                                                "theorem2_check",  "spline_check",     "freq_sweep",   "kernel_check"};
    return names;
}

struct DistConfig {
    std::string dist = "point";  // point | gaussian (a) | gaussian_w (r)
    double value = 1.0;
    double mean = 0.0;
    double sd = 1.0;
};

struct RegimeConfig {
    DistConfig a;
    DistConfig r;
    double sigma_b = 1.0;
};

struct LatticeConfig {
    int K = 200;
    double L_prime_factor = 10.0;
    std::string zero_mode = "unpenalized";
    std::string prefactor = "unit";
};

struct NnConfig {
    std::size_t m = 10000;
    std::optional<double> lr;  // unset: 1 / (2 lambda_max) of the initial empirical NTK Gram
    double loss_tol = 1e-6;
    std::size_t max_steps = 20000000;
    bool asi = true;
};

struct NtkConfig {
    bool enabled = true;
    std::size_t samples = 100000;
};

struct McConfig {
    std::size_t samples = 100000;
};

struct DataConfig {
    double lo = 0.0;
    double hi = 1.0;
    int dim = 1;
    std::vector<std::vector<double>> x;  // explicit points, or
    std::vector<double> y;
    int random_points = 0;  // n random points with uniform labels in [-1, 1]
};

struct EvalConfig {
    int grid = 512;                  // points per axis
    double interior_fraction = 0.9;  // centred share of the domain (or data hull, for splines)
};

struct SweepConfig {
    std::vector<int> v{1, 2, 3, 4, 5};
    std::string learner = "nn";
    int n_train = 20;
    int n_test = 500;
    double delta = 0.1;
    int trials = 8;         // independent draws per v, test losses averaged
    double mse_tol = 1e-5;  // nn training MSE target; runs that exhaust nn.max_steps are reported, not fatal
};

struct Tolerances {
    double nn_vs_lfp = 5e-2;    // x ||Y||_inf
    double ntk_vs_lfp = 5e-2;   // x ||Y||_inf
    double spline = 1e-2;       // x ||Y||_inf
    double ridge = 1e-3;        // x ||Y||_inf
    double lattice_limit = 1e-6;
    double matrix_limit = 1e-8;
    double xor_correlation = 0.99;
    double xor_slope_lo = 0.9;
    double xor_slope_hi = 1.1;
    double spearman = 0.9;
    double kernel_sigmas = 5.0;
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::string experiment;
    std::uint64_t seed = 1;
    std::string activation = "relu";
    std::string output_dir;
    LatticeConfig lattice;
    std::map<std::string, RegimeConfig> regimes;
    McConfig gamma_mc;
    NnConfig nn;
    NtkConfig ntk;
    DataConfig data;
    EvalConfig eval;
    std::optional<SweepConfig> sweep;
    Tolerances tolerances;
};

// ---------------------------------------------------------------- JSON

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw config_error(where + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) throw config_error(where + ": unknown key '" + k + "'");
    }
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const DistConfig& d) {
    if (d.dist == "point") {
        j = {{"dist", d.dist}, {"value", d.value}};
    } else if (d.dist == "gaussian") {
        j = {{"dist", d.dist}, {"mean", d.mean}, {"sd", d.sd}};
    } else {
        j = {{"dist", d.dist}, {"sd", d.sd}};
    }
}

inline void from_json(const nlohmann::json& j, DistConfig& d) {
    detail::require_keys(j, {"dist", "value", "mean", "sd"}, "distribution");
    d = DistConfig{};
    d.dist = j.at("dist").get<std::string>();
    detail::read_opt(j, "value", d.value);
    detail::read_opt(j, "mean", d.mean);
    detail::read_opt(j, "sd", d.sd);
}

inline void to_json(nlohmann::json& j, const RegimeConfig& r) { j = {{"a", r.a}, {"r", r.r}, {"sigma_b", r.sigma_b}}; }
inline void from_json(const nlohmann::json& j, RegimeConfig& r) {
    detail::require_keys(j, {"a", "r", "sigma_b"}, "regime");
    r.a = j.at("a").get<DistConfig>();
    r.r = j.at("r").get<DistConfig>();
    r.sigma_b = j.at("sigma_b").get<double>();
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["schema_version"] = c.schema_version;
    j["experiment"] = c.experiment;
    j["seed"] = c.seed;
    j["activation"] = c.activation;
    j["output_dir"] = c.output_dir;
    j["lattice"] = {{"K", c.lattice.K},
                    {"L_prime_factor", c.lattice.L_prime_factor},
                    {"zero_mode", c.lattice.zero_mode},
                    {"prefactor", c.lattice.prefactor}};
    j["regimes"] = c.regimes;
    j["gamma_mc"] = {{"samples", c.gamma_mc.samples}};
    j["nn"] = {{"m", c.nn.m},
               {"lr", c.nn.lr ? nlohmann::json(*c.nn.lr) : nlohmann::json(nullptr)},
               {"loss_tol", c.nn.loss_tol},
               {"max_steps", c.nn.max_steps},
               {"asi", c.nn.asi}};
    j["ntk"] = {{"enabled", c.ntk.enabled}, {"samples", c.ntk.samples}};
    nlohmann::json data = {{"domain", {c.data.lo, c.data.hi}}, {"dim", c.data.dim}};
    if (c.data.random_points > 0) {
        data["random_points"] = c.data.random_points;
    } else {
        data["x"] = c.data.x;
        data["y"] = c.data.y;
    }
    j["data"] = data;
    j["eval"] = {{"grid", c.eval.grid}, {"interior_fraction", c.eval.interior_fraction}};
    if (c.sweep) {
        j["sweep"] = {{"v", c.sweep->v},           {"learner", c.sweep->learner}, {"n_train", c.sweep->n_train},
                      {"n_test", c.sweep->n_test}, {"delta", c.sweep->delta},     {"trials", c.sweep->trials},
                      {"mse_tol", c.sweep->mse_tol}};
    }
    const auto& t = c.tolerances;
    j["tolerances"] = {{"nn_vs_lfp", t.nn_vs_lfp},         {"ntk_vs_lfp", t.ntk_vs_lfp},
                       {"spline", t.spline},               {"ridge", t.ridge},
                       {"lattice_limit", t.lattice_limit}, {"matrix_limit", t.matrix_limit},
                       {"xor_correlation", t.xor_correlation}, {"xor_slope_lo", t.xor_slope_lo},
                       {"xor_slope_hi", t.xor_slope_hi},   {"spearman", t.spearman},
                       {"kernel_sigmas", t.kernel_sigmas}};
    return j;
}

inline ExperimentConfig default_config(const std::string& experiment);

/// Parses a config; missing sections take the experiment's defaults, unknown keys are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    using detail::read_opt;
    using detail::require_keys;
    require_keys(j, {"schema_version", "experiment", "seed", "activation", "output_dir", "lattice", "regimes", "gamma_mc",
                     "nn", "ntk", "data", "eval", "sweep", "tolerances"},
                 "config");
    if (!j.contains("schema_version")) throw config_error("config: missing schema_version");
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
        throw config_error("config: unsupported schema_version " + j.at("schema_version").dump());
    }
    ExperimentConfig c = default_config(j.at("experiment").get<std::string>());
    read_opt(j, "seed", c.seed);
    read_opt(j, "activation", c.activation);
    read_opt(j, "output_dir", c.output_dir);
    if (j.contains("lattice")) {
        const auto& l = j.at("lattice");
        require_keys(l, {"K", "L_prime_factor", "zero_mode", "prefactor"}, "lattice");
        read_opt(l, "K", c.lattice.K);
        read_opt(l, "L_prime_factor", c.lattice.L_prime_factor);
        read_opt(l, "zero_mode", c.lattice.zero_mode);
        read_opt(l, "prefactor", c.lattice.prefactor);
    }
    if (j.contains("regimes")) c.regimes = j.at("regimes").get<std::map<std::string, RegimeConfig>>();
    if (j.contains("gamma_mc")) {
        require_keys(j.at("gamma_mc"), {"samples"}, "gamma_mc");
        read_opt(j.at("gamma_mc"), "samples", c.gamma_mc.samples);
    }
    if (j.contains("nn")) {
        const auto& n = j.at("nn");
        require_keys(n, {"m", "lr", "loss_tol", "max_steps", "asi"}, "nn");
        read_opt(n, "m", c.nn.m);
        if (n.contains("lr")) c.nn.lr = n.at("lr").is_null() ? std::nullopt : std::optional<double>(n.at("lr").get<double>());
        read_opt(n, "loss_tol", c.nn.loss_tol);
        read_opt(n, "max_steps", c.nn.max_steps);
        read_opt(n, "asi", c.nn.asi);
    }
    if (j.contains("ntk")) {
        require_keys(j.at("ntk"), {"enabled", "samples"}, "ntk");
        read_opt(j.at("ntk"), "enabled", c.ntk.enabled);
        read_opt(j.at("ntk"), "samples", c.ntk.samples);
    }
    if (j.contains("data")) {
        const auto& d = j.at("data");
        require_keys(d, {"domain", "dim", "x", "y", "random_points"}, "data");
        if (d.contains("domain")) {
            const auto dom = d.at("domain").get<std::vector<double>>();
            if (dom.size() != 2) throw config_error("data.domain: expected [lo, hi]");
            c.data.lo = dom[0];
            c.data.hi = dom[1];
        }
        read_opt(d, "dim", c.data.dim);
        if (d.contains("x") || d.contains("y")) {
            c.data.x = d.at("x").get<std::vector<std::vector<double>>>();
            c.data.y = d.at("y").get<std::vector<double>>();
            c.data.random_points = 0;
        }
        if (d.contains("random_points")) {
            c.data.random_points = d.at("random_points").get<int>();
            c.data.x.clear();
            c.data.y.clear();
        }
    }
    if (j.contains("eval")) {
        require_keys(j.at("eval"), {"grid", "interior_fraction"}, "eval");
        read_opt(j.at("eval"), "grid", c.eval.grid);
        read_opt(j.at("eval"), "interior_fraction", c.eval.interior_fraction);
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        require_keys(s, {"v", "learner", "n_train", "n_test", "delta", "trials", "mse_tol"}, "sweep");
        SweepConfig sc = c.sweep.value_or(SweepConfig{});
        read_opt(s, "v", sc.v);
        read_opt(s, "learner", sc.learner);
        read_opt(s, "n_train", sc.n_train);
        read_opt(s, "n_test", sc.n_test);
        read_opt(s, "delta", sc.delta);
        read_opt(s, "trials", sc.trials);
        read_opt(s, "mse_tol", sc.mse_tol);
        c.sweep = sc;
    }
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        require_keys(t, {"nn_vs_lfp", "ntk_vs_lfp", "spline", "ridge", "lattice_limit", "matrix_limit", "xor_correlation",
                         "xor_slope_lo", "xor_slope_hi", "spearman", "kernel_sigmas"},
                     "tolerances");
        auto& o = c.tolerances;
        read_opt(t, "nn_vs_lfp", o.nn_vs_lfp);
        read_opt(t, "ntk_vs_lfp", o.ntk_vs_lfp);
        read_opt(t, "spline", o.spline);
        read_opt(t, "ridge", o.ridge);
        read_opt(t, "lattice_limit", o.lattice_limit);
        read_opt(t, "matrix_limit", o.matrix_limit);
        read_opt(t, "xor_correlation", o.xor_correlation);
        read_opt(t, "xor_slope_lo", o.xor_slope_lo);
        read_opt(t, "xor_slope_hi", o.xor_slope_hi);
        read_opt(t, "spearman", o.spearman);
        read_opt(t, "kernel_sigmas", o.kernel_sigmas);
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config '" + path + "': " + e.what());
    }
}

// ---------------------------------------------------------------- defaults

namespace detail {

inline RegimeConfig point_regime(double a, double r, double sigma_b) {
    RegimeConfig g;
    g.a.value = a;
    g.r.value = r;
    g.sigma_b = sigma_b;
    return g;
}

// Measured regimes; each keeps >= 2 decades between <r^2> and <a^2>.
inline RegimeConfig relu_a_dominant() { return point_regime(10.0, 1.0, 4.0); }
inline RegimeConfig relu_r_dominant() { return point_regime(0.1, 10.0, 30.0); }
inline RegimeConfig tanh_a_dominant() { return point_regime(30.0, 3.0, 12.0); }
inline RegimeConfig tanh_r_dominant() { return point_regime(0.1, 5.0, 20.0); }

inline void fig2_data(DataConfig& d) {
    d.lo = -0.5;
    d.hi = 0.5;
    d.dim = 1;
    d.x = {{-0.4}, {-0.2}, {0.0}, {0.2}, {0.4}};
    d.y = {0.2, 0.7, 1.0, 0.6, 0.1};
    d.random_points = 0;
}

}  // namespace detail

inline ExperimentConfig default_config(const std::string& experiment) {
    if (std::find(experiment_names().begin(), experiment_names().end(), experiment) == experiment_names().end()) {
        throw config_error("unknown experiment '" + experiment + "'");
    }
    ExperimentConfig c;
    c.experiment = experiment;
    c.output_dir = "out/" + experiment;
    detail::fig2_data(c.data);
    if (experiment == "fig2_relu_linear") {
        c.lattice.K = 400;
        c.regimes = {{"a_dominant", detail::relu_a_dominant()}};
    } else if (experiment == "fig2_relu_cubic") {
        c.lattice.K = 400;
        c.regimes = {{"r_dominant", detail::relu_r_dominant()}};
    } else if (experiment == "fig_tanh") {
        c.activation = "tanh";
        c.regimes = {{"a_dominant", detail::tanh_a_dominant()}, {"r_dominant", detail::tanh_r_dominant()}};
    } else if (experiment == "fig2d_xor") {
        c.lattice.K = 40;
        c.nn.m = 20000;
        c.eval.grid = 41;
        c.data.lo = -1.0;
        c.data.hi = 1.0;
        c.data.dim = 2;
        c.data.x = {{-1.0, -1.0}, {-1.0, 1.0}, {1.0, -1.0}, {1.0, 1.0}};
        c.data.y = {-1.0, 1.0, 1.0, -1.0};
        c.regimes = {{"r_dominant", detail::point_regime(0.1, 10.0, 60.0)}};
    } else if (experiment == "spline_check") {
        c.lattice.K = 400;
        c.ntk.enabled = false;
        c.regimes = {{"a_dominant", detail::relu_a_dominant()}, {"r_dominant", detail::relu_r_dominant()}};
    } else if (experiment == "theorem2_check") {
        c.data = DataConfig{};
        c.data.random_points = 4;
        c.ntk.enabled = false;
        c.regimes = {{"a_dominant", detail::relu_a_dominant()}, {"r_dominant", detail::relu_r_dominant()}};
    } else if (experiment == "kernel_check") {
        c.regimes = {{"a_dominant", detail::relu_a_dominant()}, {"r_dominant", detail::relu_r_dominant()}};
    } else if (experiment == "freq_sweep") {
        // Kinks concentrated inside the centred unit domain keep the finite-width
        // Gram well enough conditioned for GD to fit v = 5 within the time budget.
        c.data = DataConfig{};
        c.data.lo = -0.5;
        c.data.hi = 0.5;
        c.lattice.K = 400;
        c.nn.m = 2000;
        c.nn.max_steps = 400000;
        c.ntk.enabled = false;
        c.sweep = SweepConfig{};
        c.regimes = {{"a_dominant", detail::point_regime(10.0, 2.0, 1.0)}};
    }
    return c;
}

/// Restores the full-size network width where the desk-scale default is smaller.
inline void apply_paper_scale(ExperimentConfig& c) {
    if (c.experiment == "fig2d_xor") c.nn.m = 80000;
}

// ---------------------------------------------------------------- validation

struct Issue {
    enum class Level { warning, error };
    Level level;
    std::string message;
};

inline std::string to_string(Issue::Level l) { return l == Issue::Level::warning ? "warning" : "error"; }

inline ParamModel build_param_model(const RegimeConfig& r, int d) {
    ScalarDist a = r.a.dist == "point"      ? ScalarDist::point(r.a.value)
                   : r.a.dist == "gaussian" ? ScalarDist::gaussian(r.a.mean, r.a.sd)
                                            : throw config_error("a: dist must be point or gaussian");
    RadialDist rd = r.r.dist == "point"        ? RadialDist::point(r.r.value)
                    : r.r.dist == "gaussian_w" ? RadialDist::gaussian_w(r.r.sd)
                                               : throw config_error("r: dist must be point or gaussian_w");
    return ParamModel(a, rd, r.sigma_b, d);
}

/// Reports problems without throwing: errors make a run impossible or meaningless,
/// warnings flag assumptions of the theory that the config stretches.
inline std::vector<Issue> validate(const ExperimentConfig& c) {
    std::vector<Issue> out;
    auto err = [&](std::string m) { out.push_back({Issue::Level::error, std::move(m)}); };
    auto warn = [&](std::string m) { out.push_back({Issue::Level::warning, std::move(m)}); };
    if (c.schema_version != kSchemaVersion) err("unsupported schema_version");
    if (std::find(experiment_names().begin(), experiment_names().end(), c.experiment) == experiment_names().end()) {
        err("unknown experiment '" + c.experiment + "'");
    }
    try {
        Activation::from_name(c.activation);
    } catch (const std::exception& e) {
        err(e.what());
    }
    if (c.lattice.K < 1) err("lattice.K must be positive");
    if (!(c.lattice.L_prime_factor >= 1.0)) err("lattice.L_prime_factor must be >= 1");
    try {
        zero_mode_from_string(c.lattice.zero_mode);
    } catch (const std::exception& e) {
        err(e.what());
    }
    if (c.lattice.zero_mode == "penalized") err("lattice.zero_mode 'penalized' needs a finite gamma(0), which no activation supplies");
    if (c.lattice.prefactor != "unit" && c.lattice.prefactor != "physical") err("lattice.prefactor must be unit or physical");
    if (c.nn.m < 1) err("nn.m must be positive");
    if (c.nn.asi && c.nn.m % 2 != 0) err("nn.m must be even with ASI");
    if (c.nn.lr && !(*c.nn.lr > 0.0)) err("nn.lr must be positive (or null for the default)");
    if (!(c.nn.loss_tol > 0.0)) err("nn.loss_tol must be positive");
    if (c.nn.max_steps < 1) err("nn.max_steps must be positive");
    if (c.ntk.samples < 1000) err("ntk.samples must be >= 1000");
    if (c.gamma_mc.samples < 2) err("gamma_mc.samples must be >= 2");
    if (c.eval.grid < 2) err("eval.grid must be >= 2");
    if (!(c.eval.interior_fraction > 0.0 && c.eval.interior_fraction <= 1.0)) err("eval.interior_fraction must be in (0, 1]");
    if (!(c.data.hi > c.data.lo)) err("data.domain must satisfy lo < hi");
    if (c.data.dim < 1) err("data.dim must be positive");
    if (c.data.random_points > 0) {
        if (c.data.random_points > 200) err("data.random_points is limited to 200");
    } else if (c.experiment != "freq_sweep") {
        if (c.data.x.empty() || c.data.x.size() != c.data.y.size()) err("data.x and data.y must be non-empty and of equal length");
        for (const auto& p : c.data.x) {
            if (static_cast<int>(p.size()) != c.data.dim) {
                err("data.x: every point needs data.dim coordinates");
                break;
            }
        }
    }
    if (c.regimes.empty()) err("regimes: at least one parameter regime is required");
    const double L = c.data.hi - c.data.lo;
    const double diameter = L * std::sqrt(static_cast<double>(std::max(c.data.dim, 1)));
    for (const auto& [name, r] : c.regimes) {
        try {
            const ParamModel pm = build_param_model(r, std::max(c.data.dim, 1));
            const double ratio = r.sigma_b / (std::sqrt(pm.r.second_moment(pm.d)) * diameter);
            if (ratio < 2.0) {
                warn("regime " + name + ": sigma_b / (r_rms * domain diameter) = " + detail::format_double(ratio) +
                     " < 2; the bias spread should exceed the pre-activation range");
            }
        } catch (const std::exception& e) {
            err("regime " + name + ": " + e.what());
        }
    }
    // Nyquist: the lattice must resolve the data spacing, and swept targets must be recoverable.
    if (c.lattice.K < 2 * std::max(c.data.random_points, static_cast<int>(c.data.x.size()))) {
        warn("lattice.K is small relative to the number of training points");
    }
    if (c.experiment == "freq_sweep") {
        if (!c.sweep) {
            err("sweep section is required for freq_sweep");
        } else {
            const auto& s = *c.sweep;
            for (int v : s.v) {
                if (v < 0) err("sweep.v: frequencies must be non-negative");
                if (2 * v >= s.n_train) {
                    err("sweep.v = " + std::to_string(v) + " violates the Nyquist condition 2v < n_train = " +
                        std::to_string(s.n_train));
                }
                if (v * c.lattice.L_prime_factor > c.lattice.K) err("sweep.v = " + std::to_string(v) + " lies outside the lattice");
            }
            if (s.learner != "nn" && s.learner != "lfp") err("sweep.learner must be nn or lfp");
            if (!(s.delta > 0.0 && s.delta < 1.0)) err("sweep.delta must be in (0, 1)");
            if (s.n_train < 1 || s.n_test < 1) err("sweep sample counts must be positive");
            if (s.trials < 1) err("sweep.trials must be positive");
            if (std::abs(c.data.hi - c.data.lo - 1.0) > 1e-12) err("freq_sweep needs a unit-length domain");
            if (c.data.dim != 1) err("freq_sweep is one-dimensional");
        }
    }
    if (c.experiment == "fig2d_xor" && c.data.dim != 2) err("fig2d_xor needs two-dimensional data");
    if ((c.experiment == "spline_check" || c.experiment == "fig2_relu_linear" || c.experiment == "fig2_relu_cubic") &&
        c.data.dim != 1) {
        err("spline comparisons are one-dimensional");
    }
    if (c.nn.lr) warn("nn.lr is set explicitly; Euler-type stability is not checked beyond the first 10 steps");
    return out;
}

inline bool has_errors(const std::vector<Issue>& issues) {
    return std::any_of(issues.begin(), issues.end(), [](const Issue& i) { return i.level == Issue::Level::error; });
}

// ---------------------------------------------------------------- run helpers

struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string op;  // "<=" or ">="
    bool passed = false;
};

inline void to_json(nlohmann::json& j, const Check& c) {
    j = {{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"op", c.op}, {"passed", c.passed}};
}

struct RunReport {
    nlohmann::json metrics;
    std::vector<Check> checks;
    std::vector<std::string> files;
    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
};

namespace detail {

inline Check check_le(std::string name, double value, double threshold) {
    return {std::move(name), value, threshold, "<=", value <= threshold};
}
inline Check check_ge(std::string name, double value, double threshold) {
    return {std::move(name), value, threshold, ">=", value >= threshold};
}

inline Dataset build_dataset(const ExperimentConfig& c) {
    if (c.data.random_points > 0) {
        std::mt19937_64 rng(c.seed);
        std::uniform_real_distribution<double> ux(c.data.lo, c.data.hi), uy(-1.0, 1.0);
        Eigen::MatrixXd X(c.data.random_points, c.data.dim);
        Eigen::VectorXd Y(c.data.random_points);
        for (int i = 0; i < c.data.random_points; ++i) {
            for (int k = 0; k < c.data.dim; ++k) X(i, k) = ux(rng);
            Y(i) = uy(rng);
        }
        return Dataset(std::move(X), std::move(Y), c.data.lo, c.data.hi);
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(c.data.x.size()), c.data.dim);
    Eigen::VectorXd Y(static_cast<Eigen::Index>(c.data.y.size()));
    for (std::size_t i = 0; i < c.data.x.size(); ++i) {
        for (int k = 0; k < c.data.dim; ++k) X(static_cast<Eigen::Index>(i), k) = c.data.x[i][static_cast<std::size_t>(k)];
        Y(static_cast<Eigen::Index>(i)) = c.data.y[i];
    }
    return Dataset(std::move(X), std::move(Y), c.data.lo, c.data.hi);
}

inline Lattice build_lattice(const ExperimentConfig& c, int K_override = 0) {
    return Lattice(c.data.dim, K_override > 0 ? K_override : c.lattice.K, c.lattice.L_prime_factor * (c.data.hi - c.data.lo),
                   zero_mode_from_string(c.lattice.zero_mode));
}

inline GammaWeight build_weight(const ExperimentConfig& c, const ParamModel& pm, const Lattice& lat) {
    const Prefactor p = c.lattice.prefactor == "physical" ? Prefactor::physical : Prefactor::unit;
    return make_gamma_weight(pm, Activation::from_name(c.activation), lat, McSpec{c.gamma_mc.samples, c.seed + 101}, p);
}

/// Equally spaced grid on [lo, hi] (inclusive), grid points per axis; rows are points.
inline Eigen::MatrixXd grid_points(int dim, double lo, double hi, int per_axis) {
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(per_axis);
    Eigen::MatrixXd G(static_cast<Eigen::Index>(total), dim);
    for (std::size_t p = 0; p < total; ++p) {
        std::size_t rest = p;
        for (int a = dim - 1; a >= 0; --a) {
            const auto digit = rest % static_cast<std::size_t>(per_axis);
            rest /= static_cast<std::size_t>(per_axis);
            G(static_cast<Eigen::Index>(p), a) = lo + (hi - lo) * static_cast<double>(digit) / (per_axis - 1);
        }
    }
    return G;
}

/// sup and RMS of a - b over the rows selected by mask.
inline nlohmann::json gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const std::vector<bool>& mask, double scale) {
    double sup = 0.0, ss = 0.0;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (!mask[static_cast<std::size_t>(i)]) continue;
        const double d = std::abs(a(i) - b(i));
        sup = std::max(sup, d);
        ss += d * d;
        ++count;
    }
    const double l2 = count ? std::sqrt(ss / static_cast<double>(count)) : 0.0;
    return {{"sup", sup}, {"l2", l2}, {"sup_rel", sup / scale}, {"points", count}};
}

inline std::vector<bool> inside(const Eigen::MatrixXd& P, double lo, double hi) {
    std::vector<bool> m(static_cast<std::size_t>(P.rows()));
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        m[static_cast<std::size_t>(i)] = (P.row(i).array() >= lo - 1e-12).all() && (P.row(i).array() <= hi + 1e-12).all();
    }
    return m;
}

inline std::pair<double, double> centred(double lo, double hi, double fraction) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo) * fraction;
    return {mid - half, mid + half};
}

inline std::string iso_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); }
};

inline std::string suffix(const ExperimentConfig& c, const std::string& regime) {
    return c.regimes.size() == 1 ? "" : "_" + regime;
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
    std::ofstream out(p);
    out << j.dump(2) << '\n';
}

/// One column of optional values per predictor.
struct Column {
    std::string name;
    std::optional<Eigen::VectorXd> values;
    std::vector<bool> defined;  // empty: defined everywhere
};

inline void write_columns(const std::filesystem::path& path, const Eigen::MatrixXd& P, const std::vector<std::string>& coord,
                          const std::vector<Column>& cols) {
    std::ofstream out(path, std::ios::binary);
    std::vector<std::string> header = coord;
    for (const auto& c : cols) header.push_back(c.name);
    CsvWriter csv(out, header);
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        std::vector<std::optional<double>> row;
        for (Eigen::Index a = 0; a < P.cols(); ++a) row.emplace_back(P(i, a));
        for (const auto& c : cols) {
            const bool ok = c.values && (c.defined.empty() || c.defined[static_cast<std::size_t>(i)]);
            row.push_back(ok ? std::optional<double>((*c.values)(i)) : std::nullopt);
        }
        csv.row(row);
    }
}

struct NnOutcome {
    Eigen::VectorXd on_grid;
    nlohmann::json info;
    double seconds = 0.0;
};

inline NnOutcome train_network(const ExperimentConfig& c, const ParamModel& pm, const Dataset& data, const Eigen::MatrixXd& P,
                               const std::filesystem::path& checkpoint) {
    Timer t;
    TwoLayerNet net = TwoLayerNet::init(pm, Activation::from_name(c.activation), c.nn.m, c.nn.asi, c.seed);
    const TwoLayerNet initial = net;
    TrainOptions opt;
    opt.lr = c.nn.lr.value_or(0.0);
    opt.max_steps = c.nn.max_steps;
    opt.loss_tol = c.nn.loss_tol;
    const TrainResult tr = train_gd(net, data, opt);
    bool monotone = true;
    for (std::size_t s = 1; s < tr.loss_history.size(); ++s) monotone = monotone && tr.loss_history[s] <= tr.loss_history[s - 1];
    NnOutcome o;
    o.on_grid = net.forward(P);
    o.info = {{"steps", tr.steps},
              {"lr", tr.lr},
              {"initial_loss", tr.loss_history.front()},
              {"final_loss", tr.loss_history.back()},
              {"converged", tr.converged},
              {"monotone_loss", monotone},
              {"relative_displacement", net.parameter_distance(initial) / initial.parameter_norm()}};
    if (!checkpoint.empty()) write_json(checkpoint, net);
    o.seconds = t.seconds();
    return o;
}

}  // namespace detail

// ---------------------------------------------------------------- experiments

namespace detail {

/// fig2_relu_linear, fig2_relu_cubic, fig_tanh: NN vs LFP (vs spline, vs NTK) in 1-d.
inline void run_curves(const ExperimentConfig& c, const std::filesystem::path& out, RunReport& rep, nlohmann::json& times) {
    const Dataset data = build_dataset(c);
    const double yinf = data.Y.cwiseAbs().maxCoeff();
    const Eigen::MatrixXd P = grid_points(1, c.data.lo, c.data.hi, c.eval.grid);
    const auto [ilo, ihi] = centred(c.data.lo, c.data.hi, c.eval.interior_fraction);
    const auto interior = inside(P, ilo, ihi);
    std::optional<SplineKind> spline_kind;
    if (c.experiment == "fig2_relu_linear") spline_kind = SplineKind::linear;
    if (c.experiment == "fig2_relu_cubic") spline_kind = SplineKind::natural_cubic;
    const Activation act = Activation::from_name(c.activation);

    for (const auto& [name, regime] : c.regimes) {
        const ParamModel pm = build_param_model(regime, 1);
        const std::string sfx = suffix(c, name);
        nlohmann::json m;
        Timer tl;
        const Lattice lat = build_lattice(c);
        const GammaWeight w = build_weight(c, pm, lat);
        const SpectralCoefficients lfp = solve_constrained(data, w, SpectralCoefficients(lat));
        const Eigen::VectorXd f_lfp = evaluate_on(lfp, P);
        write_json(out / ("lfp_coefficients" + sfx + ".json"), lfp);
        rep.files.push_back("lfp_coefficients" + sfx + ".json");
        // Truncation diagnostic: the same solve on a lattice with twice the cutoff.
        const Lattice lat2 = build_lattice(c, 2 * c.lattice.K);
        const SpectralCoefficients lfp2 = solve_constrained(data, build_weight(c, pm, lat2), SpectralCoefficients(lat2));
        m["lattice_drift_K_2K"] = (f_lfp - evaluate_on(lfp2, P)).cwiseAbs().maxCoeff();
        times["lfp" + sfx] = tl.seconds();

        const NnOutcome nn = train_network(c, pm, data, P, out / ("net" + sfx + ".json"));
        rep.files.push_back("net" + sfx + ".json");
        times["nn_train" + sfx] = nn.seconds;
        m["nn"] = nn.info;

        std::optional<Eigen::VectorXd> f_ntk;
        if (c.ntk.enabled) {
            Timer tk;
            const KernelEstimate k(pm, act, McSpec{c.ntk.samples, c.seed + 202});
            f_ntk = kernel_predict(k, data, {}, P);
            times["ntk" + sfx] = tk.seconds();
        }
        std::optional<Eigen::VectorXd> f_spline;
        std::vector<bool> hull_mask;
        if (spline_kind) {
            const SplineInterpolant s = SplineInterpolant::fit(*spline_kind, data);
            Eigen::VectorXd v = Eigen::VectorXd::Zero(P.rows());
            hull_mask = inside(P, s.lo(), s.hi());
            for (Eigen::Index i = 0; i < P.rows(); ++i) {
                if (hull_mask[static_cast<std::size_t>(i)]) v(i) = s(P(i, 0));
            }
            f_spline = v;
        }
        write_columns(out / ("curves" + sfx + ".csv"), P, {"x"},
                      {{"f_nn", nn.on_grid, {}}, {"f_lfp", f_lfp, {}}, {"f_spline", f_spline, hull_mask}, {"f_ntk", f_ntk, {}}});
        rep.files.push_back("curves" + sfx + ".csv");

        nlohmann::json gaps;
        gaps["nn_vs_lfp"] = gap(nn.on_grid, f_lfp, interior, yinf);
        if (f_ntk) {
            gaps["nn_vs_ntk"] = gap(nn.on_grid, *f_ntk, interior, yinf);
            gaps["ntk_vs_lfp"] = gap(*f_ntk, f_lfp, interior, yinf);
        }
        if (f_spline) {
            // Splines are compared on the centred share of the data hull.
            const SplineInterpolant s = SplineInterpolant::fit(*spline_kind, data);
            const auto [hlo, hhi] = centred(s.lo(), s.hi(), c.eval.interior_fraction);
            const auto hull_interior = inside(P, hlo, hhi);
            gaps["lfp_vs_spline"] = gap(f_lfp, *f_spline, hull_interior, yinf);
            gaps["nn_vs_spline"] = gap(nn.on_grid, *f_spline, hull_interior, yinf);
            if (f_ntk) gaps["ntk_vs_spline"] = gap(*f_ntk, *f_spline, hull_interior, yinf);
        }
        m["gaps"] = gaps;
        m["y_inf"] = yinf;
        rep.metrics["regimes"][name] = m;

        const auto& t = c.tolerances;
        rep.checks.push_back(check_le(name + ".nn_train_loss", nn.info["final_loss"].get<double>(), c.nn.loss_tol));
        rep.checks.push_back(check_le(name + ".nn_vs_lfp_sup_rel", gaps["nn_vs_lfp"]["sup_rel"].get<double>(), t.nn_vs_lfp));
        if (f_ntk) {
            rep.checks.push_back(check_le(name + ".ntk_vs_lfp_sup_rel", gaps["ntk_vs_lfp"]["sup_rel"].get<double>(), t.ntk_vs_lfp));
        }
        if (f_spline) {
            rep.checks.push_back(check_le(name + ".lfp_vs_spline_sup_rel", gaps["lfp_vs_spline"]["sup_rel"].get<double>(), t.spline));
        }
    }
}

inline void run_xor(const ExperimentConfig& c, const std::filesystem::path& out, RunReport& rep, nlohmann::json& times) {
    const Dataset data = build_dataset(c);
    const Eigen::MatrixXd P = grid_points(2, c.data.lo, c.data.hi, c.eval.grid);
    const Activation act = Activation::from_name(c.activation);
    for (const auto& [name, regime] : c.regimes) {
        const std::string sfx = suffix(c, name);
        const ParamModel pm = build_param_model(regime, 2);
        Timer tl;
        const Lattice lat = build_lattice(c);
        const SpectralCoefficients lfp = solve_constrained(data, build_weight(c, pm, lat), SpectralCoefficients(lat));
        const Eigen::VectorXd f_lfp = evaluate_on(lfp, P);
        times["lfp" + sfx] = tl.seconds();
        const NnOutcome nn = train_network(c, pm, data, P, out / ("net" + sfx + ".json"));
        rep.files.push_back("net" + sfx + ".json");
        times["nn_train" + sfx] = nn.seconds;
        std::optional<Eigen::VectorXd> f_ntk;
        if (c.ntk.enabled) {
            Timer tk;
            const KernelEstimate k(pm, act, McSpec{c.ntk.samples, c.seed + 202});
            f_ntk = kernel_predict(k, data, {}, P);
            times["ntk" + sfx] = tk.seconds();
        }
        write_columns(out / ("grid" + sfx + ".csv"), P, {"x1", "x2"},
                      {{"f_nn", nn.on_grid, {}}, {"f_lfp", f_lfp, {}}, {"f_ntk", f_ntk, {}}});
        rep.files.push_back("grid" + sfx + ".csv");

        // Fig-3(b) scatter: f_lfp (ordinate) against f_nn (abscissa).
        const Eigen::VectorXd xn = nn.on_grid.array() - nn.on_grid.mean();
        const Eigen::VectorXd yl = f_lfp.array() - f_lfp.mean();
        const double corr = xn.dot(yl) / std::sqrt(xn.squaredNorm() * yl.squaredNorm());
        const double slope = xn.dot(yl) / xn.squaredNorm();
        const std::vector<bool> all(static_cast<std::size_t>(P.rows()), true);
        const double yinf = data.Y.cwiseAbs().maxCoeff();
        nlohmann::json m;
        m["nn"] = nn.info;
        m["pearson_nn_lfp"] = corr;
        m["slope_lfp_on_nn"] = slope;
        m["gaps"]["nn_vs_lfp"] = gap(nn.on_grid, f_lfp, all, yinf);
        if (f_ntk) {
            m["gaps"]["nn_vs_ntk"] = gap(nn.on_grid, *f_ntk, all, yinf);
            m["gaps"]["ntk_vs_lfp"] = gap(*f_ntk, f_lfp, all, yinf);
        }
        rep.metrics["regimes"][name] = m;
        const auto& t = c.tolerances;
        rep.checks.push_back(check_le(name + ".nn_train_loss", nn.info["final_loss"].get<double>(), c.nn.loss_tol));
        rep.checks.push_back(check_ge(name + ".pearson_nn_lfp", corr, t.xor_correlation));
        rep.checks.push_back(check_ge(name + ".slope_lfp_on_nn_min", slope, t.xor_slope_lo));
        rep.checks.push_back(check_le(name + ".slope_lfp_on_nn_max", slope, t.xor_slope_hi));
    }
}

inline void run_spline_check(const ExperimentConfig& c, const std::filesystem::path& out, RunReport& rep) {
    const Dataset data = build_dataset(c);
    const double yinf = data.Y.cwiseAbs().maxCoeff();
    const Eigen::MatrixXd P = grid_points(1, c.data.lo, c.data.hi, c.eval.grid);
    for (const auto& [name, regime] : c.regimes) {
        const ParamModel pm = build_param_model(regime, 1);
        const Lattice lat = build_lattice(c);
        const SpectralCoefficients lfp = solve_constrained(data, build_weight(c, pm, lat), SpectralCoefficients(lat));
        const Eigen::VectorXd f_lfp = evaluate_on(lfp, P);
        // a-dominant weights behave like 1/xi^2 (linear spline), r-dominant like 1/xi^4 (cubic).
        const bool linear = pm.a.second_moment() > pm.r.second_moment(1);
        const SplineInterpolant s = SplineInterpolant::fit(linear ? SplineKind::linear : SplineKind::natural_cubic, data);
        const auto hull = inside(P, s.lo(), s.hi());
        Eigen::VectorXd f_s = Eigen::VectorXd::Zero(P.rows());
        for (Eigen::Index i = 0; i < P.rows(); ++i) {
            if (hull[static_cast<std::size_t>(i)]) f_s(i) = s(P(i, 0));
        }
        const auto [hlo, hhi] = centred(s.lo(), s.hi(), c.eval.interior_fraction);
        const auto g = gap(f_lfp, f_s, inside(P, hlo, hhi), yinf);
        const std::string sfx = suffix(c, name);
        write_columns(out / ("curves" + sfx + ".csv"), P, {"x"},
                      {{"f_nn", std::nullopt, {}}, {"f_lfp", f_lfp, {}}, {"f_spline", f_s, hull}, {"f_ntk", std::nullopt, {}}});
        rep.files.push_back("curves" + sfx + ".csv");
        rep.metrics["regimes"][name] = {{"spline", linear ? "linear" : "natural_cubic"}, {"gaps", {{"lfp_vs_spline", g}}}};
        rep.checks.push_back(check_le(name + ".lfp_vs_spline_sup_rel", g["sup_rel"].get<double>(), c.tolerances.spline));
    }
}

inline void run_flow_limit(const ExperimentConfig& c, const std::filesystem::path& out, RunReport& rep) {
    const Dataset data = build_dataset(c);
    const double yinf = data.Y.cwiseAbs().maxCoeff();
    const Eigen::MatrixXd P = grid_points(1, c.data.lo, c.data.hi, c.eval.grid);
    // Matrix level: 100 random full-rank 5 x 12 systems.
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
        std::mt19937_64 rng(c.seed * 7919 + static_cast<std::uint64_t>(s));
        std::normal_distribution<double> nd(0.0, 1.0);
        Eigen::MatrixXd Pm(5, 12);
        Eigen::VectorXd Y(5), th(12);
        for (Eigen::Index i = 0; i < Pm.size(); ++i) Pm.data()[i] = nd(rng);
        for (Eigen::Index i = 0; i < 5; ++i) Y(i) = nd(rng);
        for (Eigen::Index i = 0; i < 12; ++i) th(i) = nd(rng);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e(Pm * Pm.transpose(), Eigen::EigenvaluesOnly);
        const auto r = equivalence_check_matrix(Pm, Y, th, 50.0 / e.eigenvalues()(0));
        worst = std::max(worst, r.gap / r.theta_closed.norm());
    }
    rep.metrics["matrix_level"] = {{"systems", 100}, {"max_relative_gap", worst}};
    rep.checks.push_back(check_le("matrix_level.max_relative_gap", worst, c.tolerances.matrix_limit));

    for (const auto& [name, regime] : c.regimes) {
        const ParamModel pm = build_param_model(regime, 1);
        const Lattice lat = build_lattice(c);
        const GammaWeight w = build_weight(c, pm, lat);
        const SpectralCoefficients zero(lat);
        const SpectralCoefficients h = solve_constrained(data, w, zero);
        const double T = default_horizon(data, w);
        std::vector<double> times{0.0};
        for (int j = 0; j <= 40; ++j) times.push_back(T * std::pow(10.0, -6.0 + 6.0 * j / 40.0));
        const Trajectory traj = evolve(zero, data, w, ExactScheme{}, times);
        const double lattice_gap = (traj.states.back() - h).l2_norm() / h.l2_norm();
        // Exact flow: ||u(t)|| is non-increasing; the slack covers the round-off floor of the solve.
        const double slack = 1e-8 * traj.residual_norm(0);
        double worst_rise = 0.0;
        for (std::size_t j = 1; j < traj.size(); ++j) {
            worst_rise = std::max(worst_rise, traj.residual_norm(j) - traj.residual_norm(j - 1));
        }
        const bool monotone = worst_rise <= slack;
        const SpectralCoefficients ridge = solve_ridge(data, w, 1e-6, zero);
        const double ridge_gap = (evaluate_on(ridge, P) - evaluate_on(h, P)).cwiseAbs().maxCoeff() / yinf;
        const std::vector<Band> bands{{0.0, 5.0}, {5.0, 20.0}, {20.0, 100.0}};
        const auto band_times = band_convergence_times(traj, h, bands, 0.5);
        const std::string sfx = suffix(c, name);
        std::ofstream csv(out / ("trajectory" + sfx + ".csv"), std::ios::binary);
        write_trajectory_csv(csv, traj, h, bands);
        rep.files.push_back("trajectory" + sfx + ".csv");
        rep.metrics["regimes"][name] = {{"horizon", T},
                                        {"lattice_relative_gap", lattice_gap},
                                        {"ridge_vs_constrained_sup_rel", ridge_gap},
                                        {"residual_monotone", monotone},
                                        {"residual_worst_rise", worst_rise},
                                        {"band_half_times", band_times}};
        rep.checks.push_back(check_le(name + ".lattice_relative_gap", lattice_gap, c.tolerances.lattice_limit));
        rep.checks.push_back(check_le(name + ".ridge_vs_constrained_sup_rel", ridge_gap, c.tolerances.ridge));
        rep.checks.push_back(check_ge(name + ".residual_monotone", monotone ? 1.0 : 0.0, 1.0));
    }
}

inline void run_kernel_check(const ExperimentConfig& c, const std::filesystem::path& out, RunReport& rep, nlohmann::json& times) {
    const Dataset data = build_dataset(c);
    const double yinf = data.Y.cwiseAbs().maxCoeff();
    const Eigen::MatrixXd P = grid_points(1, c.data.lo, c.data.hi, c.eval.grid);
    const auto [ilo, ihi] = centred(c.data.lo, c.data.hi, c.eval.interior_fraction);
    const auto interior = inside(P, ilo, ihi);
    const Activation act = Activation::from_name(c.activation);
    for (const auto& [name, regime] : c.regimes) {
        Timer tk;
        const std::string sfx = suffix(c, name);
        const ParamModel pm = build_param_model(regime, 1);
        const KernelEstimate k(pm, act, McSpec{c.ntk.samples, c.seed + 202});
        const TwoLayerNet net = TwoLayerNet::init(pm, act, c.nn.m, c.nn.asi, c.seed);
        std::mt19937_64 rng(c.seed + 303);
        std::uniform_real_distribution<double> ux(c.data.lo, c.data.hi);
        std::ofstream pairs(out / ("kernel_pairs" + sfx + ".csv"), std::ios::binary);
        CsvWriter csv(pairs, {"x", "x_prime", "empirical", "oracle_mean", "oracle_stderr", "allowance"});
        double worst_ratio = 0.0;
        for (int p = 0; p < 20; ++p) {
            const double x = ux(rng), xp = ux(rng);
            const std::span<const double> sx(&x, 1), sxp(&xp, 1);
            const Estimate e = k(sx, sxp);
            const double km = net.empirical_ntk(sx, sxp);
            const double allowance = c.tolerances.kernel_sigmas * (e.std_error + 1.0 / std::sqrt(static_cast<double>(c.nn.m)));
            worst_ratio = std::max(worst_ratio, std::abs(km - e.value) / allowance);
            csv.row({x, xp, km, e.value, e.std_error, allowance});
        }
        rep.files.push_back("kernel_pairs" + sfx + ".csv");
        const Lattice lat = build_lattice(c);
        const SpectralCoefficients lfp = solve_constrained(data, build_weight(c, pm, lat), SpectralCoefficients(lat));
        const Eigen::VectorXd f_lfp = evaluate_on(lfp, P);
        const Eigen::VectorXd f_ntk = kernel_predict(k, data, {}, P);
        write_columns(out / ("curves" + sfx + ".csv"), P, {"x"},
                      {{"f_nn", std::nullopt, {}}, {"f_lfp", f_lfp, {}}, {"f_spline", std::nullopt, {}}, {"f_ntk", f_ntk, {}}});
        rep.files.push_back("curves" + sfx + ".csv");
        const auto g = gap(f_ntk, f_lfp, interior, yinf);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k.gram(data.X), Eigen::EigenvaluesOnly);
        const double psd = eig.eigenvalues()(0) / eig.eigenvalues().maxCoeff();
        rep.metrics["regimes"][name] = {{"worst_pair_ratio", worst_ratio}, {"gaps", {{"ntk_vs_lfp", g}}}, {"ntk_gram_min_over_max_eig", psd}};
        rep.checks.push_back(check_le(name + ".empirical_vs_oracle_worst_ratio", worst_ratio, 1.0));
        rep.checks.push_back(check_le(name + ".ntk_vs_lfp_sup_rel", g["sup_rel"].get<double>(), c.tolerances.ntk_vs_lfp));
        rep.checks.push_back(check_ge(name + ".ntk_gram_min_over_max_eig", psd, -1e-8));
        times["kernel" + sfx] = tk.seconds();
    }
}

inline void run_sweep(const ExperimentConfig& c, const std::filesystem::path& out, RunReport& rep) {
    const SweepConfig& s = *c.sweep;
    for (const auto& [name, regime] : c.regimes) {
        SweepOptions o;
        o.v_list = s.v;
        o.learner = learner_from_string(s.learner);
        o.n_train = s.n_train;
        o.n_test = s.n_test;
        o.seed = c.seed;
        o.delta = s.delta;
        o.trials = s.trials;
        o.lo = c.data.lo;
        o.K = c.lattice.K;
        o.L_prime_factor = c.lattice.L_prime_factor;
        o.m = c.nn.m;
        o.asi = c.nn.asi;
        o.lr = c.nn.lr.value_or(0.0);
        o.mse_tol = s.mse_tol;
        o.max_steps = c.nn.max_steps;
        const ParamModel pm = build_param_model(regime, 1);
        const auto rows = frequency_sweep(pm, Activation::from_name(c.activation), o, McSpec{c.gamma_mc.samples, c.seed + 101});
        const std::string sfx = suffix(c, name);
        std::ofstream f(out / ("sweep" + sfx + ".csv"), std::ios::binary);
        CsvWriter csv(f, {"v", "test_loss", "Q", "risk_bound", "rad_bound"});
        std::vector<double> vs, losses;
        nlohmann::json per_v = nlohmann::json::array();
        bool within = true;
        int converged = 0;
        for (const auto& r : rows) {
            csv.row({static_cast<double>(r.v), r.test_loss, r.bound.Q, r.bound.risk_bound, r.bound.rad_bound});
            vs.push_back(r.v);
            losses.push_back(r.test_loss);
            within = within && r.test_loss_max <= r.bound.risk_bound;
            converged += r.converged;
            per_v.push_back({{"v", r.v},
                             {"test_loss", r.test_loss},
                             {"test_loss_max", r.test_loss_max},
                             {"train_mse_max", r.train_mse},
                             {"steps_max", r.steps},
                             {"trials", r.trials},
                             {"converged_trials", r.converged},
                             {"Q", r.bound.Q},
                             {"c0", r.bound.c0.value_or(0.0)},
                             {"sup_norm", r.bound.sup_norm},
                             {"sup_grid_points", r.bound.sup_grid_points},
                             {"projection_residual", r.bound.projection_residual},
                             {"gamma_l2", r.bound.gamma_l2},
                             {"risk_bound", r.bound.risk_bound},
                             {"rad_bound", r.bound.rad_bound}});
        }
        rep.files.push_back("sweep" + sfx + ".csv");
        nlohmann::json m = {{"learner", s.learner},
                            {"rows", per_v},
                            {"test_loss_is_estimate", true},
                            {"converged_trials", converged},
                            {"total_trials", static_cast<int>(rows.size()) * s.trials}};
        rep.checks.push_back(check_ge(name + ".test_loss_within_risk_bound", within ? 1.0 : 0.0, 1.0));
        if (vs.size() >= 2) {
            const double rho = spearman(vs, losses);
            m["spearman_v_test_loss"] = rho;
            rep.checks.push_back(check_ge(name + ".spearman_v_test_loss", rho, c.tolerances.spearman));
        }
        rep.metrics["regimes"][name] = m;
    }
}

}  // namespace detail

/// Runs one experiment, writing its artifacts and metrics.json into out_dir.
/// Everything in metrics.json except the "timestamps" field is deterministic.
inline RunReport run(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
    const auto issues = validate(c);
    if (has_errors(issues)) {
        std::string msg = "invalid config:";
        for (const auto& i : issues) {
            if (i.level == Issue::Level::error) msg += "\n  " + i.message;
        }
        throw config_error(msg);
    }
    std::filesystem::create_directories(out_dir);
    RunReport rep;
    nlohmann::json times;
    const std::string started = detail::iso_now();
    detail::Timer total;
    rep.metrics["experiment"] = c.experiment;
    rep.metrics["config"] = to_json(c);
    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& i : issues) warnings.push_back(i.message);
    rep.metrics["warnings"] = warnings;

    const std::string& e = c.experiment;
    if (e == "fig2_relu_linear" || e == "fig2_relu_cubic" || e == "fig_tanh") {
        detail::run_curves(c, out_dir, rep, times);
    } else if (e == "fig2d_xor") {
        detail::run_xor(c, out_dir, rep, times);
    } else if (e == "spline_check") {
        detail::run_spline_check(c, out_dir, rep);
    } else if (e == "theorem2_check") {
        detail::run_flow_limit(c, out_dir, rep);
    } else if (e == "kernel_check") {
        detail::run_kernel_check(c, out_dir, rep, times);
    } else if (e == "freq_sweep") {
        detail::run_sweep(c, out_dir, rep);
    }

    rep.metrics["checks"] = rep.checks;
    rep.metrics["passed"] = rep.passed();
    rep.files.push_back("metrics.json");
    rep.metrics["files"] = rep.files;
    times["total"] = total.seconds();
    rep.metrics["timestamps"] = {{"started", started}, {"finished", detail::iso_now()}, {"runtime_seconds", times}};
    detail::write_json(out_dir / "metrics.json", rep.metrics);
    return rep;
}

}  // namespace lfp
