#include "hyfad/solver_consensus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace hyfad {

Eigen::VectorXd update_a(const std::vector<Eigen::VectorXd>& thetas,
                         const std::vector<Eigen::VectorXd>& lambdas, double mu) {
    if (thetas.empty() || thetas.size() != lambdas.size())
        throw std::invalid_argument("update_a: need matching theta/lambda lists");
    if (!(mu > 0.0)) throw std::invalid_argument("update_a: mu must be positive");
    const auto M = thetas.size();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(thetas.front().size());
    for (std::size_t m = 0; m < M; ++m) acc += mu * thetas[m] + lambdas[m];
    acc /= static_cast<double>(M) * mu;
    return acc.cwiseMax(0.0).cwiseMin(1.0);
}

void dual_ascent(Eigen::VectorXd& lambda, const Eigen::VectorXd& theta,
                 const Eigen::VectorXd& a, double mu) {
    lambda += mu * (theta - a);
}

double quantize_value(double v, int bits, double lo, double hi) {
    if (bits < 1 || bits > 62) throw std::invalid_argument("quantize: bits must be in [1,62]");
    if (!(lo < hi)) throw std::invalid_argument("quantize: need lo < hi");
    const std::uint64_t levels = std::uint64_t{1} << bits;
    const double delta = (hi - lo) / static_cast<double>(levels);
    // floor() assigns a cell boundary to the upper cell, which is exactly the
    // tie-toward-hi rule.
    double idx = std::floor((v - lo) / delta);
    idx = std::clamp(idx, 0.0, static_cast<double>(levels - 1));
    return lo + (idx + 0.5) * delta;
}

Eigen::VectorXd quantize(const Eigen::VectorXd& values, int bits, double lo, double hi) {
    Eigen::VectorXd out(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i)
        out[i] = quantize_value(values[i], bits, lo, hi);
    return out;
}

namespace {

std::uint64_t ceil_log2(std::uint64_t n) {
    std::uint64_t bits = 0;
    while ((std::uint64_t{1} << bits) < n) ++bits;
    return bits;
}

}  // namespace

OverheadLedger account_overhead(std::uint64_t M, std::uint64_t N, std::uint64_t L,
                                std::uint64_t K, std::uint64_t iterations,
                                std::uint64_t bits_dist, std::uint64_t bits_cent,
                                std::uint64_t top_s) {
    if (M == 0 || N == 0 || L == 0 || K == 0)
        throw std::invalid_argument("account_overhead: counts must be positive");
    const std::uint64_t uplink_entries = (top_s > 0 && top_s < N) ? top_s : N;

    OverheadLedger ledger;
    ledger.dist_downlink_numbers = iterations * M * N;
    ledger.dist_uplink_numbers = iterations * M * uplink_entries;
    ledger.dist_downlink_bits = iterations * M * N * bits_dist;
    ledger.dist_uplink_bits = iterations * M * uplink_entries * bits_dist;
    if (top_s > 0 && top_s < N)
        ledger.dist_uplink_bits += iterations * M * top_s * ceil_log2(N);

    ledger.cent_numbers = 2 * M * L * K;
    ledger.cent_bits = 2 * M * L * K * bits_cent;
    return ledger;
}

namespace {

// Static per-device selection metric for top-S sparsification: the trace of
// the device's covariance shape at this AP (mean channel energy over noise).
double channel_energy(const LocalModel& model, int n) {
    const DeviceModel& dm = model.devices[static_cast<std::size_t>(n)];
    if (dm.kind == FieldClass::FarField) return dm.sqrt_gain * dm.sqrt_gain * model.K;
    // tr(F F^H) recovered from the Kronecker factor columns: ||X||_F^2 = L * tr(F F^H).
    return dm.x_cols.squaredNorm() / model.L;
}

std::vector<int> top_s_devices(const LocalModel& model, int s) {
    std::vector<int> idx(static_cast<std::size_t>(model.N));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return channel_energy(model, a) > channel_energy(model, b);
    });
    idx.resize(static_cast<std::size_t>(s));
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

DistributedResult run_distributed(const DetectionProblem& problem, const ConsensusConfig& cfg,
                                  std::uint64_t seed) {
    const int M = problem.num_aps();
    const int N = problem.num_devices();
    if (M < 1 || static_cast<int>(problem.ys.size()) != M)
        throw std::invalid_argument("run_distributed: inconsistent problem");
    if (!(cfg.mu > 0.0)) throw std::invalid_argument("run_distributed: mu must be positive");

    DistributedResult res;
    res.thetas.assign(static_cast<std::size_t>(M), Eigen::VectorXd::Zero(N));
    res.lambdas.assign(static_cast<std::size_t>(M), Eigen::VectorXd::Zero(N));
    res.a = update_a(res.thetas, res.lambdas, cfg.mu);
    Eigen::VectorXd a_broadcast =
        cfg.bits_dist >= 1 ? quantize(res.a, cfg.bits_dist, 0.0, 1.0) : res.a;

    const bool sparsify = cfg.top_s > 0 && cfg.top_s < N;
    std::vector<std::vector<int>> selected;
    if (sparsify) {
        selected.resize(static_cast<std::size_t>(M));
        for (int m = 0; m < M; ++m)
            selected[static_cast<std::size_t>(m)] =
                top_s_devices(problem.models[static_cast<std::size_t>(m)], cfg.top_s);
    }

    std::vector<double> ap_nll(static_cast<std::size_t>(M), 0.0);
    const std::uint64_t per_iter_uplink =
        static_cast<std::uint64_t>(M) * (sparsify ? static_cast<std::uint64_t>(cfg.top_s)
                                                  : static_cast<std::uint64_t>(N));
    const std::uint64_t per_iter_downlink = static_cast<std::uint64_t>(M) * static_cast<std::uint64_t>(N);

    for (int iter = 1; iter <= cfg.outer_iters; ++iter) {
        // Parallelizable fan-out: each AP solves its penalized subproblem from
        // the broadcast consensus point.
        for (int m = 0; m < M; ++m) {
            const LocalModel& model = problem.models[static_cast<std::size_t>(m)];
            const VectorXcd& y = problem.ys[static_cast<std::size_t>(m)];
            RngStream rng = make_stream(seed, {stream_tag::permutation,
                                               static_cast<std::uint64_t>(m),
                                               static_cast<std::uint64_t>(iter)});
            LocalSolveReport rep;
            if (model.all_far_field()) {
                res.thetas[static_cast<std::size_t>(m)] = far_field_fast_path(
                    model, y, a_broadcast, res.lambdas[static_cast<std::size_t>(m)], cfg.mu,
                    cfg.cd, rng, &rep);
            } else {
                PrecisionState state = init_precision(model, y, a_broadcast);
                res.thetas[static_cast<std::size_t>(m)] =
                    local_solve(state, model, a_broadcast, res.lambdas[static_cast<std::size_t>(m)],
                                cfg.mu, cfg.cd, rng, &rep);
            }
            ap_nll[static_cast<std::size_t>(m)] = rep.final_nll;
        }

        // Dual ascent happens at the APs, against the consensus value they saw.
        for (int m = 0; m < M; ++m)
            dual_ascent(res.lambdas[static_cast<std::size_t>(m)],
                        res.thetas[static_cast<std::size_t>(m)], a_broadcast, cfg.mu);

        // Uplink payload mu*theta + lambda, optionally quantized/sparsified,
        // then the closed-form consensus update.
        const Eigen::VectorXd a_prev = res.a;
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(N);
        Eigen::VectorXi count = Eigen::VectorXi::Zero(N);
        for (int m = 0; m < M; ++m) {
            Eigen::VectorXd payload =
                cfg.mu * res.thetas[static_cast<std::size_t>(m)] + res.lambdas[static_cast<std::size_t>(m)];
            if (cfg.bits_dist >= 1)
                payload = quantize(payload, cfg.bits_dist, cfg.uplink_lo, cfg.uplink_hi);
            if (sparsify) {
                for (int n : selected[static_cast<std::size_t>(m)]) {
                    sum[n] += payload[n];
                    count[n] += 1;
                }
            } else {
                sum += payload;
                count.array() += 1;
            }
        }
        for (int n = 0; n < N; ++n) {
            if (count[n] == 0) continue;  // no report: hold the previous value
            res.a[n] = std::clamp(sum[n] / (count[n] * cfg.mu), 0.0, 1.0);
        }

        ConsensusTraceRow row;
        row.iteration = iter;
        row.ap_nll = ap_nll;
        double lagr = 0.0;
        double residual = 0.0;
        for (int m = 0; m < M; ++m) {
            const Eigen::VectorXd diff = res.thetas[static_cast<std::size_t>(m)] - res.a;
            lagr += ap_nll[static_cast<std::size_t>(m)] +
                    res.lambdas[static_cast<std::size_t>(m)].dot(diff) +
                    0.5 * cfg.mu * diff.squaredNorm();
            residual = std::max(residual, diff.cwiseAbs().maxCoeff());
        }
        row.lagrangian = lagr;
        row.consensus_residual = residual;
        row.numbers_cum = static_cast<std::uint64_t>(iter) * (per_iter_downlink + per_iter_uplink);
        row.bits_cum = 0;
        if (cfg.bits_dist >= 1) {
            const auto ledger = account_overhead(
                static_cast<std::uint64_t>(M), static_cast<std::uint64_t>(N),
                static_cast<std::uint64_t>(problem.models.front().L),
                static_cast<std::uint64_t>(problem.models.front().K),
                static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(cfg.bits_dist), 0,
                sparsify ? static_cast<std::uint64_t>(cfg.top_s) : 0);
            row.bits_cum = ledger.dist_total_bits();
        }
        res.trace.push_back(std::move(row));
        res.iterations = iter;

        a_broadcast = cfg.bits_dist >= 1 ? quantize(res.a, cfg.bits_dist, 0.0, 1.0) : res.a;
        if ((res.a - a_prev).cwiseAbs().maxCoeff() < cfg.outer_tol) break;
    }

    res.ledger = account_overhead(
        static_cast<std::uint64_t>(M), static_cast<std::uint64_t>(N),
        static_cast<std::uint64_t>(problem.models.front().L),
        static_cast<std::uint64_t>(problem.models.front().K),
        static_cast<std::uint64_t>(res.iterations), static_cast<std::uint64_t>(cfg.bits_dist), 0,
        sparsify ? static_cast<std::uint64_t>(cfg.top_s) : 0);
    return res;
}

namespace {

constexpr double kStepFloor = 1e-14;
constexpr int kMaxBacktracks = 60;

// Per-AP state of the centralized solver: the all-far-field block engine
// where the structure allows it, the full LK-dimensional state otherwise.
struct ApSlot {
    const LocalModel* model = nullptr;
    std::unique_ptr<FarFieldEngine> fast;
    std::unique_ptr<PrecisionState> full;
    CoordinateWork work;  // valid only for the coordinate just prepared
};

}  // namespace

Eigen::VectorXd run_centralized(const DetectionProblem& problem, const CdConfig& cfg,
                                RngStream& perm_rng, LocalSolveReport* report) {
    const int M = problem.num_aps();
    const int N = problem.num_devices();
    if (M < 1 || static_cast<int>(problem.ys.size()) != M)
        throw std::invalid_argument("run_centralized: inconsistent problem");

    Eigen::VectorXd a = Eigen::VectorXd::Zero(N);
    std::vector<ApSlot> slots(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        ApSlot& slot = slots[static_cast<std::size_t>(m)];
        slot.model = &problem.models[static_cast<std::size_t>(m)];
        if (slot.model->all_far_field()) {
            slot.fast = std::make_unique<FarFieldEngine>(*slot.model,
                                                         problem.ys[static_cast<std::size_t>(m)], a);
        } else {
            slot.full = std::make_unique<PrecisionState>(
                init_precision(*slot.model, problem.ys[static_cast<std::size_t>(m)], a));
        }
    }

    auto total_nll = [&]() {
        double acc = 0.0;
        for (auto& slot : slots)
            acc += slot.fast ? slot.fast->nll() : nll(*slot.full, *slot.model);
        return acc;
    };

    double omega = cfg.omega;
    double objective = 0.0;
    const bool tracing = report != nullptr && report->record_objective;
    if (tracing) {
        objective = total_nll();
        report->objective_trace.clear();
        report->objective_trace.push_back(objective);
    }

    std::vector<int> perm(static_cast<std::size_t>(N));
    std::iota(perm.begin(), perm.end(), 0);

    int sweeps = 0;
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        perm_rng.shuffle(perm);
        double max_step = 0.0;
        for (int n : perm) {
            SurrogateCoeffs total;
            for (auto& slot : slots) {
                SurrogateCoeffs c;
                if (slot.fast) {
                    c = slot.fast->raw_coeffs(n);
                } else {
                    slot.work = prepare_coordinate(*slot.full, *slot.model, n);
                    c = coeffs_from_work(slot.work, *slot.full, n, 0.0, 0.0, slot.full->theta[n]);
                }
                total.rho1 += c.rho1;
                total.rho2 += c.rho2;
                total.rho3 += c.rho3;
                total.rho4 += c.rho4;
            }

            auto exact_delta = [&](double d) {
                double acc = 0.0;
                for (auto& slot : slots) {
                    acc += slot.fast
                               ? slot.fast->exact_delta(n, d)
                               : exact_delta_objective(slot.work, *slot.full, n, d, 0.0, 0.0,
                                                       slot.full->theta[n]);
                }
                return acc;
            };

            const double lo = -a[n];
            const double hi = 1.0 - a[n];
            double d = solve_coordinate(total, omega, lo, hi);
            double accepted = 0.0;
            if (std::abs(d) < kStepFloor) {
                d = 0.0;
            } else if (cfg.adaptive_omega) {
                bool ok = false;
                for (int back = 0; back <= kMaxBacktracks; ++back) {
                    accepted = exact_delta(d);
                    if (accepted <= 0.0) {
                        ok = true;
                        break;
                    }
                    omega *= 2.0;
                    d = solve_coordinate(total, omega, lo, hi);
                    if (std::abs(d) < kStepFloor) break;
                }
                if (!ok) d = 0.0;
            } else {
                accepted = exact_delta(d);
            }

            if (d != 0.0) {
                bool all_incremental = true;
                for (auto& slot : slots) {
                    if (slot.fast) {
                        slot.fast->commit(n, d);
                    } else {
                        all_incremental &=
                            apply_update(*slot.full, *slot.model, slot.work, n, d);
                    }
                }
                a[n] = std::clamp(a[n] + d, 0.0, 1.0);
                max_step = std::max(max_step, std::abs(d));
                if (tracing) {
                    objective = all_incremental ? objective + accepted : total_nll();
                    report->objective_trace.push_back(objective);
                }
            } else if (tracing) {
                report->objective_trace.push_back(objective);
            }
        }
        ++sweeps;
        if ((sweep + 1) % cfg.refresh_period == 0) {
            for (auto& slot : slots) {
                if (slot.fast)
                    slot.fast->refresh();
                else
                    refactorize(*slot.full, *slot.model);
            }
        }
        if (max_step < cfg.tol) break;
    }

    if (report) {
        report->sweeps = sweeps;
        report->omega_final = omega;
        report->final_nll = total_nll();
    }
    return a;
}

}  // namespace hyfad
