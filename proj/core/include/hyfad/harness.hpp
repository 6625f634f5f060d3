#pragma once

#include <string>
#include <vector>

#include "hyfad/detection.hpp"
#include "hyfad/solver_consensus.hpp"

namespace hyfad {

enum class Algorithm { Distributed, Centralized, Mismatched };

std::string algorithm_label(Algorithm alg);
Algorithm parse_algorithm(const std::string& label);

// One complete experiment description. Defaults are the large operating
// point (M=3, K=24, N=100); tests use smaller presets so CI stays fast.
struct ExperimentConfig {
    int M = 3;
    int K = 24;
    int N = 100;
    int L = 6;
    int L_m = 8;
    double alpha = 0.1;      // active fraction, exactly round(alpha*N) devices
    double lambda_c = 0.2;   // meters
    double side = 200.0;     // meters
    double mu = 1.0;
    double omega = 1.0;
    int outer_iters = 5;
    int cd_sweeps = 20;
    double tol = 1e-4;
    int bits_dist = 0;
    int bits_cent = 0;
    int top_s = 0;
    int trials = 200;
    std::uint64_t seed = 1;
    Algorithm algorithm = Algorithm::Distributed;

    // Throws std::invalid_argument naming the first offending field.
    void validate() const;
};

// JSON round trip; absent keys keep their defaults on load.
ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& cfg);

// Digest of every scenario-defining field. The algorithm is excluded, so
// rows produced by different algorithms on the same scenario share a hash.
std::uint64_t scenario_hash(const ExperimentConfig& cfg);

// Everything one trial simulates before any estimator runs. Deterministic in
// (config, trial): every random draw comes from streams keyed by
// (seed, purpose tag, trial), never from shared state.
struct TrialScenario {
    Deployment dep;
    std::vector<std::vector<ChannelStat>> stats;  // [ap][device]
    MatrixXcd S;
    ActivityVector a_true;
    std::vector<VectorXcd> ys;
};

TrialScenario build_trial_scenario(const ExperimentConfig& cfg, int trial);

// Runs the configured estimator on a prepared scenario and returns the soft
// activity vector in [0,1]^N. For the mismatched baseline with several APs,
// per-AP estimates are averaged and clamped.
struct AlgorithmOutcome {
    Eigen::VectorXd a;
    int iterations = 0;              // outer iterations (1 for single-stage runs)
    std::uint64_t numbers = 0;       // fronthaul real numbers actually exchanged
    std::uint64_t bits = 0;          // 0 when the corresponding bit width is 0
};

AlgorithmOutcome run_algorithm(const ExperimentConfig& cfg, const TrialScenario& scenario,
                               int trial);

struct TrialRow {
    int trial = 0;
    Algorithm algorithm = Algorithm::Distributed;
    DetectionReport report;
    int iterations = 0;
    std::uint64_t numbers = 0;
    std::uint64_t bits = 0;
    std::uint64_t scenario = 0;
};

// Runs cfg.trials independent trials on a bounded worker pool and returns
// rows sorted by trial index. max_workers <= 0 picks the hardware thread
// count. Output is identical for any worker count.
std::vector<TrialRow> run_trials(const ExperimentConfig& cfg, int max_workers = 0);

std::string metrics_csv(const std::vector<TrialRow>& rows);

struct SweepSpec {
    ExperimentConfig base;
    std::string parameter;
    std::vector<double> values;
};

SweepSpec load_sweep(const std::string& path);

// Assigns a swept value by field name; count fields reject non-integral
// values, unknown names throw.
void set_parameter(ExperimentConfig& cfg, const std::string& name, double value);

// One run_trials per swept value, concatenated into a long-format CSV with
// the swept parameter as leading columns. An empty value list yields just
// the header.
std::string run_sweep(const SweepSpec& spec, int max_workers = 0);

// Builds the trial-0 deployment and emits the pairwise similarity rows of
// every AP, M*N*(N-1)/2 rows in total.
std::string diagnose(const ExperimentConfig& cfg);

// Fronthaul ledger for the configured shape, one CSV row.
std::string overhead_csv(const ExperimentConfig& cfg);

}  // namespace hyfad
