#pragma once

#include <cstdint>
#include <vector>

#include "hyfad/solver_local.hpp"

namespace hyfad {

// One multi-AP detection instance: per-AP models and received vectors over a
// shared device set.
struct DetectionProblem {
    std::vector<LocalModel> models;
    std::vector<VectorXcd> ys;

    int num_aps() const { return static_cast<int>(models.size()); }
    int num_devices() const { return models.empty() ? 0 : models.front().N; }
};

struct ConsensusConfig {
    double mu = 1.0;
    int outer_iters = 5;
    double outer_tol = 1e-3;   // stop when ||a_i - a_{i-1}||_inf drops below
    CdConfig cd;
    int bits_dist = 0;         // fronthaul quantization bits, 0 = exact exchange
    double uplink_lo = -1.0;   // quantizer range for the mu*theta + lambda payload
    double uplink_hi = 2.0;
    int top_s = 0;             // uplink sparsification: entries per AP, 0 = all N
};

// Fronthaul accounting. Real-number counts are independent of quantization;
// bit counts are zero when the corresponding bit width is zero.
struct OverheadLedger {
    std::uint64_t dist_downlink_numbers = 0;
    std::uint64_t dist_uplink_numbers = 0;
    std::uint64_t dist_downlink_bits = 0;
    std::uint64_t dist_uplink_bits = 0;
    std::uint64_t cent_numbers = 0;
    std::uint64_t cent_bits = 0;

    std::uint64_t dist_total_numbers() const { return dist_downlink_numbers + dist_uplink_numbers; }
    std::uint64_t dist_total_bits() const { return dist_downlink_bits + dist_uplink_bits; }
};

struct ConsensusTraceRow {
    int iteration = 0;
    double lagrangian = 0.0;          // full augmented Lagrangian at iteration end
    double consensus_residual = 0.0;  // max_m ||theta_m - a||_inf
    std::vector<double> ap_nll;
    std::uint64_t numbers_cum = 0;
    std::uint64_t bits_cum = 0;
};

struct DistributedResult {
    Eigen::VectorXd a;
    std::vector<Eigen::VectorXd> thetas;
    std::vector<Eigen::VectorXd> lambdas;
    std::vector<ConsensusTraceRow> trace;
    OverheadLedger ledger;
    int iterations = 0;
};

// Closed-form consensus update: a_n = clamp(sum_m (mu*theta_mn + lambda_mn) / (M*mu)).
Eigen::VectorXd update_a(const std::vector<Eigen::VectorXd>& thetas,
                         const std::vector<Eigen::VectorXd>& lambdas, double mu);

// lambda += mu * (theta - a), in place.
void dual_ascent(Eigen::VectorXd& lambda, const Eigen::VectorXd& theta,
                 const Eigen::VectorXd& a, double mu);

// Uniform midrise quantizer with 2^bits levels on [lo, hi]; out-of-range
// values clamp to the extreme levels, cell-boundary ties round toward hi.
double quantize_value(double v, int bits, double lo, double hi);
Eigen::VectorXd quantize(const Eigen::VectorXd& values, int bits, double lo, double hi);

OverheadLedger account_overhead(std::uint64_t M, std::uint64_t N, std::uint64_t L,
                                std::uint64_t K, std::uint64_t iterations,
                                std::uint64_t bits_dist, std::uint64_t bits_cent,
                                std::uint64_t top_s = 0);

// Consensus loop: broadcast a, solve the M penalized local problems from a,
// dual-ascend, collect mu*theta + lambda, update a in closed form. Local
// solves re-randomize their sweep order from streams keyed by
// (seed, AP index, outer iteration), so results are reproducible and
// independent of scheduling.
DistributedResult run_distributed(const DetectionProblem& problem, const ConsensusConfig& cfg,
                                  std::uint64_t seed);

// Joint CD over a single shared activity vector: per coordinate the quartic
// coefficients of all APs are summed, one step is chosen, and every AP state
// commits it. With one AP this is exactly local_solve at mu = 0, lambda = 0.
Eigen::VectorXd run_centralized(const DetectionProblem& problem, const CdConfig& cfg,
                                RngStream& perm_rng, LocalSolveReport* report = nullptr);

}  // namespace hyfad
