// Microbenchmarks for the solver hot paths: coordinate preparation, the
// incremental covariance update, one full local solve on the generic and the
// shared-block far-field paths, and a centralized joint solve. Fixtures come
// from the real geometry pipeline so gain scales and field mixes match what
// the simulator feeds the solver.

#include <benchmark/benchmark.h>

#include "hyfad/harness.hpp"
#include "hyfad/solver_consensus.hpp"
#include "hyfad/solver_local.hpp"

namespace {

using namespace hyfad;

struct Fixture {
    LocalModel model;
    VectorXcd y;
};

// One AP, N=40 devices. A 0.9 m wavelength at a 60 m square keeps a near/far
// mix; 0.01 m collapses every link to far field.
Fixture make_fixture(int K, bool hybrid) {
    ExperimentConfig cfg;
    cfg.M = 1;
    cfg.K = K;
    cfg.N = 40;
    cfg.L = 6;
    cfg.L_m = 4;
    cfg.alpha = 0.3;
    cfg.lambda_c = hybrid ? 0.9 : 0.01;
    cfg.side = hybrid ? 60.0 : 200.0;
    cfg.seed = 9;
    const TrialScenario sc = build_trial_scenario(cfg, 0);
    return {build_local_model(sc.dep, 0, sc.stats[0], sc.S), sc.ys[0]};
}

void bm_surrogate_coeffs(benchmark::State& state) {
    static const Fixture fx = make_fixture(static_cast<int>(state.range(0)), true);
    const PrecisionState ps =
        init_precision(fx.model, fx.y, Eigen::VectorXd::Constant(fx.model.N, 0.3));
    int n = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(surrogate_coeffs(n, ps, fx.model, 0.1, 1.0, 0.2));
        n = (n + 1) % fx.model.N;
    }
}
BENCHMARK(bm_surrogate_coeffs)->Arg(8)->Arg(24);

void bm_apply_update(benchmark::State& state) {
    static const Fixture fx = make_fixture(8, true);
    PrecisionState ps =
        init_precision(fx.model, fx.y, Eigen::VectorXd::Constant(fx.model.N, 0.3));
    int n = 0;
    for (auto _ : state) {
        // Round trip keeps theta inside the box and the state bounded.
        benchmark::DoNotOptimize(apply_update(ps, fx.model, n, 0.05));
        benchmark::DoNotOptimize(apply_update(ps, fx.model, n, -0.05));
        n = (n + 1) % fx.model.N;
    }
    state.SetItemsProcessed(2 * state.iterations());
}
BENCHMARK(bm_apply_update);

CdConfig bench_cd() {
    CdConfig cd;
    cd.max_sweeps = 3;
    cd.tol = 0.0;  // fixed sweep count so iterations stay comparable
    return cd;
}

void bm_local_solve_generic(benchmark::State& state) {
    static const Fixture fx = make_fixture(8, false);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(fx.model.N);
    for (auto _ : state) {
        PrecisionState ps = init_precision(fx.model, fx.y, zero);
        RngStream perm(41);
        benchmark::DoNotOptimize(
            local_solve(ps, fx.model, zero, zero, 1.0, bench_cd(), perm));
    }
}
BENCHMARK(bm_local_solve_generic);

void bm_local_solve_fast_path(benchmark::State& state) {
    static const Fixture fx = make_fixture(8, false);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(fx.model.N);
    for (auto _ : state) {
        RngStream perm(41);
        benchmark::DoNotOptimize(
            far_field_fast_path(fx.model, fx.y, zero, zero, 1.0, bench_cd(), perm));
    }
}
BENCHMARK(bm_local_solve_fast_path);

void bm_centralized(benchmark::State& state) {
    static const Fixture fx0 = make_fixture(8, true);
    static const Fixture fx1 = make_fixture(8, false);
    DetectionProblem problem;
    problem.models = {fx0.model, fx1.model};
    problem.ys = {fx0.y, fx1.y};
    for (auto _ : state) {
        RngStream perm(42);
        benchmark::DoNotOptimize(run_centralized(problem, bench_cd(), perm));
    }
}
BENCHMARK(bm_centralized);

}  // namespace

BENCHMARK_MAIN();
