#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "lfp/lfp.hpp"

namespace {

void print_issues(const std::vector<lfp::Issue>& issues) {
    for (const auto& i : issues) std::cerr << lfp::to_string(i.level) << ": " << i.message << '\n';
}

int execute(const lfp::ExperimentConfig& cfg, const std::string& out_override) {
    print_issues(lfp::validate(cfg));
    const std::string out = out_override.empty() ? cfg.output_dir : out_override;
    const lfp::RunReport rep = lfp::run(cfg, out);
    for (const auto& c : rep.checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << lfp::detail::format_double(c.value) << ' ' << c.op
                  << ' ' << lfp::detail::format_double(c.threshold) << '\n';
    }
    std::cout << cfg.experiment << ": " << (rep.passed() ? "passed" : "FAILED") << " (" << out << "/metrics.json)\n";
    return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear frequency principle lab: LFP solver, two-layer network reference and bounds"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    bool paper_scale = false;
    auto* run = app.add_subcommand("run", "Run an experiment from a config file");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_flag("--paper-scale", paper_scale, "Use the paper's network sizes");
    run->add_option("--out", out_dir, "Output directory (default: the config's output_dir)");

    std::string validate_path;
    auto* val = app.add_subcommand("validate", "Check a config without running it");
    val->add_option("--config", validate_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

    std::string sweep_experiment = "freq_sweep", sweep_config, sweep_learner, sweep_out;
    std::vector<int> sweep_v;
    auto* sweep = app.add_subcommand("sweep", "Frequency sweep of test loss against the a-priori bound");
    sweep->add_option("--experiment", sweep_experiment, "Sweep experiment")->check(CLI::IsMember({"freq_sweep"}));
    sweep->add_option("--v", sweep_v, "Target frequencies, comma separated")->delimiter(',');
    sweep->add_option("--config", sweep_config, "Base config (default: built-in freq_sweep defaults)")
        ->check(CLI::ExistingFile);
    sweep->add_option("--learner", sweep_learner, "nn or lfp")->check(CLI::IsMember({"nn", "lfp"}));
    sweep->add_option("--out", sweep_out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            lfp::ExperimentConfig cfg = lfp::load_config(config_path);
            if (paper_scale) lfp::apply_paper_scale(cfg);
            return execute(cfg, out_dir);
        }
        if (*val) {
            const lfp::ExperimentConfig cfg = lfp::load_config(validate_path);
            const auto issues = lfp::validate(cfg);
            print_issues(issues);
            const bool bad = lfp::has_errors(issues);
            std::cout << validate_path << ": " << (bad ? "invalid" : "valid") << '\n';
            return bad ? 2 : 0;
        }
        if (*sweep) {
            lfp::ExperimentConfig cfg =
                sweep_config.empty() ? lfp::default_config(sweep_experiment) : lfp::load_config(sweep_config);
            if (cfg.experiment != "freq_sweep") throw lfp::config_error("sweep: config is not a freq_sweep experiment");
            if (!cfg.sweep) cfg.sweep = lfp::SweepConfig{};
            if (!sweep_v.empty()) cfg.sweep->v = sweep_v;
            if (!sweep_learner.empty()) cfg.sweep->learner = sweep_learner;
            return execute(cfg, sweep_out);
        }
    } catch (const lfp::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const lfp::domain_error& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return 2;
    } catch (const lfp::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
