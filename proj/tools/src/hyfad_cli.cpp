#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hyfad/harness.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::int64_t seed = -1;
    int trials = -1;
    std::string algorithm;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_path, "experiment config (JSON)");
    cmd->add_option("-o,--out", opts.out_path, "output file (default: stdout)");
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_option("--trials", opts.trials, "override the trial count");
    cmd->add_option("--algorithm", opts.algorithm,
                    "override the estimator: distributed|centralized|mismatched");
}

hyfad::ExperimentConfig resolve_config(const CommonOpts& opts) {
    hyfad::ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = hyfad::load_config(opts.config_path);
    if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.trials >= 0) cfg.trials = opts.trials;
    if (!opts.algorithm.empty()) cfg.algorithm = hyfad::parse_algorithm(opts.algorithm);
    cfg.validate();
    return cfg;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + out_path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"activity detection simulator for hybrid near/far-field cell-free networks"};
    app.require_subcommand(1);

    CommonOpts sim_opts;
    std::string deployment_out, signals_out;
    CLI::App* sim = app.add_subcommand("simulate", "run Monte-Carlo trials, emit metrics CSV");
    add_common(sim, sim_opts);
    sim->add_option("--deployment-out", deployment_out, "also save the trial-0 layout (JSON)");
    sim->add_option("--signals-out", signals_out, "also dump the trial-0 scenario (binary)");

    CommonOpts sweep_opts;
    std::string sweep_path;
    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep, emit long-format CSV");
    sweep->add_option("-s,--spec", sweep_path, "sweep spec (JSON)")->required();
    add_common(sweep, sweep_opts);

    CommonOpts diag_opts;
    CLI::App* diag = app.add_subcommand("diagnose", "emit pairwise similarity CSV");
    add_common(diag, diag_opts);

    CommonOpts over_opts;
    CLI::App* over = app.add_subcommand("overhead", "emit the fronthaul ledger CSV");
    add_common(over, over_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            const hyfad::ExperimentConfig cfg = resolve_config(sim_opts);
            if (!deployment_out.empty() || !signals_out.empty()) {
                const hyfad::TrialScenario sc = hyfad::build_trial_scenario(cfg, 0);
                if (!deployment_out.empty()) hyfad::save_deployment(deployment_out, sc.dep);
                if (!signals_out.empty())
                    hyfad::dump_scenario(signals_out, sc.S, sc.a_true, sc.ys);
            }
            emit(hyfad::metrics_csv(hyfad::run_trials(cfg)), sim_opts.out_path);
        } else if (sweep->parsed()) {
            hyfad::SweepSpec spec = hyfad::load_sweep(sweep_path);
            if (sweep_opts.seed >= 0) spec.base.seed = static_cast<std::uint64_t>(sweep_opts.seed);
            if (sweep_opts.trials >= 0) spec.base.trials = sweep_opts.trials;
            if (!sweep_opts.algorithm.empty())
                spec.base.algorithm = hyfad::parse_algorithm(sweep_opts.algorithm);
            emit(hyfad::run_sweep(spec), sweep_opts.out_path);
        } else if (diag->parsed()) {
            emit(hyfad::diagnose(resolve_config(diag_opts)), diag_opts.out_path);
        } else if (over->parsed()) {
            emit(hyfad::overhead_csv(resolve_config(over_opts)), over_opts.out_path);
        }
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (char& c : msg)
            if (c == '"') c = '\'';
        std::cerr << "{\"error\":\"" << msg << "\"}\n";
        return 2;
    }
    return 0;
}
