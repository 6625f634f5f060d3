#include "hyfad/harness.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace hyfad {

namespace {

// Shortest representation that round-trips a double exactly, so CSV output
// is byte-stable across runs and readable back without loss.
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        for (int prec = 1; prec <= 16; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v) return shorter;
        }
    }
    return buf;
}

std::string fmt_hash(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + what);
}

}  // namespace

std::string algorithm_label(Algorithm alg) {
    switch (alg) {
        case Algorithm::Distributed: return "distributed";
        case Algorithm::Centralized: return "centralized";
        case Algorithm::Mismatched: return "mismatched";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& label) {
    if (label == "distributed") return Algorithm::Distributed;
    if (label == "centralized") return Algorithm::Centralized;
    if (label == "mismatched") return Algorithm::Mismatched;
    throw std::invalid_argument("config: unknown algorithm '" + label + "'");
}

void ExperimentConfig::validate() const {
    require(M >= 1, "M must be >= 1");
    require(K >= 1, "K must be >= 1");
    require(N >= 1, "N must be >= 1");
    require(L >= 1, "L must be >= 1");
    require(L_m >= 1, "L_m must be >= 1");
    require(alpha >= 0.0 && alpha <= 1.0, "alpha must be in [0,1]");
    require(lambda_c > 0.0, "lambda_c must be positive");
    require(side > 0.0, "side must be positive");
    require(mu > 0.0, "mu must be positive");
    require(omega > 0.0, "omega must be positive");
    require(outer_iters >= 1, "outer_iters must be >= 1");
    require(cd_sweeps >= 1, "cd_sweeps must be >= 1");
    require(tol > 0.0, "tol must be positive");
    require(bits_dist >= 0 && bits_dist <= 62, "bits_dist must be in [0,62]");
    require(bits_cent >= 0 && bits_cent <= 62, "bits_cent must be in [0,62]");
    require(top_s >= 0 && top_s <= N, "top_s must be in [0,N]");
    require(trials >= 1, "trials must be >= 1");
}

namespace {

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.M = j.value("M", cfg.M);
    cfg.K = j.value("K", cfg.K);
    cfg.N = j.value("N", cfg.N);
    cfg.L = j.value("L", cfg.L);
    cfg.L_m = j.value("L_m", cfg.L_m);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.lambda_c = j.value("lambda_c", cfg.lambda_c);
    cfg.side = j.value("side", cfg.side);
    cfg.mu = j.value("mu", cfg.mu);
    cfg.omega = j.value("omega", cfg.omega);
    cfg.outer_iters = j.value("outer_iters", cfg.outer_iters);
    cfg.cd_sweeps = j.value("cd_sweeps", cfg.cd_sweeps);
    cfg.tol = j.value("tol", cfg.tol);
    cfg.bits_dist = j.value("bits_dist", cfg.bits_dist);
    cfg.bits_cent = j.value("bits_cent", cfg.bits_cent);
    cfg.top_s = j.value("top_s", cfg.top_s);
    cfg.trials = j.value("trials", cfg.trials);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("algorithm")) cfg.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
    cfg.validate();
    return cfg;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["M"] = cfg.M;
    j["K"] = cfg.K;
    j["N"] = cfg.N;
    j["L"] = cfg.L;
    j["L_m"] = cfg.L_m;
    j["alpha"] = cfg.alpha;
    j["lambda_c"] = cfg.lambda_c;
    j["side"] = cfg.side;
    j["mu"] = cfg.mu;
    j["omega"] = cfg.omega;
    j["outer_iters"] = cfg.outer_iters;
    j["cd_sweeps"] = cfg.cd_sweeps;
    j["tol"] = cfg.tol;
    j["bits_dist"] = cfg.bits_dist;
    j["bits_cent"] = cfg.bits_cent;
    j["top_s"] = cfg.top_s;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["algorithm"] = algorithm_label(cfg.algorithm);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config file: " + path);
    out << j.dump(2) << '\n';
}

std::uint64_t scenario_hash(const ExperimentConfig& cfg) {
    const auto d = [](double v) { return std::bit_cast<std::uint64_t>(v); };
    std::uint64_t h = derive_seed(cfg.seed, {0x5ce7a21bULL});
    h = derive_seed(h, {static_cast<std::uint64_t>(cfg.M), static_cast<std::uint64_t>(cfg.K),
                        static_cast<std::uint64_t>(cfg.N), static_cast<std::uint64_t>(cfg.L),
                        static_cast<std::uint64_t>(cfg.L_m)});
    h = derive_seed(h, {d(cfg.alpha), d(cfg.lambda_c), d(cfg.side), d(cfg.mu), d(cfg.omega)});
    h = derive_seed(h, {static_cast<std::uint64_t>(cfg.outer_iters),
                        static_cast<std::uint64_t>(cfg.cd_sweeps), d(cfg.tol),
                        static_cast<std::uint64_t>(cfg.bits_dist),
                        static_cast<std::uint64_t>(cfg.bits_cent),
                        static_cast<std::uint64_t>(cfg.top_s)});
    return h;
}

TrialScenario build_trial_scenario(const ExperimentConfig& cfg, int trial) {
    const auto t = static_cast<std::uint64_t>(trial);

    DeploymentConfig dc;
    dc.M = cfg.M;
    dc.N = cfg.N;
    dc.K = cfg.K;
    dc.L_m = cfg.L_m;
    dc.side = cfg.side;
    dc.lambda_c = cfg.lambda_c;

    TrialScenario sc;
    {
        RngStream rng = make_stream(cfg.seed, {stream_tag::deployment, t});
        sc.dep = sample_deployment(dc, rng);
    }

    const PathLossModel pl;
    sc.stats.resize(static_cast<std::size_t>(cfg.M));
    for (int m = 0; m < cfg.M; ++m) {
        auto& row = sc.stats[static_cast<std::size_t>(m)];
        row.reserve(static_cast<std::size_t>(cfg.N));
        for (int n = 0; n < cfg.N; ++n)
            row.push_back(build_channel_stat(sc.dep, m, n, pl, classify_field(sc.dep, m, n)));
    }

    {
        RngStream rng = make_stream(cfg.seed, {stream_tag::signatures, t});
        sc.S = generate_signatures(cfg.N, cfg.L, rng);
    }
    {
        RngStream rng = make_stream(cfg.seed, {stream_tag::activity, t});
        sc.a_true = sample_activity(cfg.N, cfg.alpha, rng);
    }
    {
        RngStream rng = make_stream(cfg.seed, {stream_tag::channels, t});
        sc.ys = synthesize_received(sc.dep, sc.stats, sc.S, sc.a_true, rng);
    }
    return sc;
}

AlgorithmOutcome run_algorithm(const ExperimentConfig& cfg, const TrialScenario& scenario,
                               int trial) {
    const auto t = static_cast<std::uint64_t>(trial);

    DetectionProblem problem;
    problem.models.reserve(static_cast<std::size_t>(cfg.M));
    for (int m = 0; m < cfg.M; ++m)
        problem.models.push_back(
            build_local_model(scenario.dep, m, scenario.stats[static_cast<std::size_t>(m)],
                              scenario.S));
    problem.ys = scenario.ys;

    CdConfig cd;
    cd.omega = cfg.omega;
    cd.max_sweeps = cfg.cd_sweeps;
    cd.tol = cfg.tol;

    AlgorithmOutcome out;
    switch (cfg.algorithm) {
        case Algorithm::Distributed: {
            ConsensusConfig cc;
            cc.mu = cfg.mu;
            cc.outer_iters = cfg.outer_iters;
            cc.outer_tol = 0.0;  // run the configured count so overhead is config-determined
            cc.cd = cd;
            cc.bits_dist = cfg.bits_dist;
            cc.top_s = cfg.top_s;
            DistributedResult res = run_distributed(
                problem, cc, derive_seed(cfg.seed, {stream_tag::permutation, t}));
            out.a = res.a;
            out.iterations = res.iterations;
            out.numbers = res.ledger.dist_total_numbers();
            out.bits = res.ledger.dist_total_bits();
            break;
        }
        case Algorithm::Centralized: {
            RngStream rng = make_stream(cfg.seed, {stream_tag::permutation, t});
            out.a = run_centralized(problem, cd, rng);
            out.iterations = 1;
            const OverheadLedger led = account_overhead(
                static_cast<std::uint64_t>(cfg.M), static_cast<std::uint64_t>(cfg.N),
                static_cast<std::uint64_t>(cfg.L), static_cast<std::uint64_t>(cfg.K), 0,
                0, static_cast<std::uint64_t>(cfg.bits_cent));
            out.numbers = led.cent_numbers;
            out.bits = led.cent_bits;
            break;
        }
        case Algorithm::Mismatched: {
            // The baseline presumes every channel is far field; its gain for
            // device n is the center-distance path loss, whatever the true
            // field class is.
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(cfg.N);
            for (int m = 0; m < cfg.M; ++m) {
                Eigen::VectorXd gains(cfg.N);
                for (int n = 0; n < cfg.N; ++n)
                    gains[n] = path_loss_linear(
                        wrap_distance(scenario.dep.devices[static_cast<std::size_t>(n)],
                                      scenario.dep.aps[static_cast<std::size_t>(m)].center,
                                      scenario.dep.side));
                RngStream rng = make_stream(
                    cfg.seed, {stream_tag::permutation, t, static_cast<std::uint64_t>(m)});
                acc += mismatched_cd(scenario.ys[static_cast<std::size_t>(m)], scenario.S, gains,
                                     cfg.K, cd, rng);
            }
            out.a = (acc / static_cast<double>(cfg.M)).cwiseMax(0.0).cwiseMin(1.0);
            out.iterations = 1;
            const OverheadLedger led = account_overhead(
                static_cast<std::uint64_t>(cfg.M), static_cast<std::uint64_t>(cfg.N),
                static_cast<std::uint64_t>(cfg.L), static_cast<std::uint64_t>(cfg.K), 0,
                0, static_cast<std::uint64_t>(cfg.bits_cent));
            out.numbers = led.cent_numbers;
            out.bits = led.cent_bits;
            break;
        }
    }
    return out;
}

std::vector<TrialRow> run_trials(const ExperimentConfig& cfg, int max_workers) {
    cfg.validate();

    const std::uint64_t scen = scenario_hash(cfg);
    std::vector<TrialRow> rows(static_cast<std::size_t>(cfg.trials));

    unsigned workers = max_workers > 0 ? static_cast<unsigned>(max_workers)
                                       : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(cfg.trials));

    std::atomic<int> next{0};
    std::mutex fail_mutex;
    std::exception_ptr failure;

    const auto work = [&] {
        for (;;) {
            const int trial = next.fetch_add(1);
            if (trial >= cfg.trials) return;
            try {
                const TrialScenario sc = build_trial_scenario(cfg, trial);
                const AlgorithmOutcome res = run_algorithm(cfg, sc, trial);
                TrialRow& row = rows[static_cast<std::size_t>(trial)];
                row.trial = trial;
                row.algorithm = cfg.algorithm;
                row.report = equal_error_point(res.a, sc.a_true);
                row.iterations = res.iterations;
                row.numbers = res.numbers;
                row.bits = res.bits;
                row.scenario = scen;
            } catch (...) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

namespace {

const char* kMetricsHeader =
    "trial,algorithm,gamma,pm,pf,equal_error_rate,iterations,overhead_numbers,overhead_bits,"
    "scenario_hash";

void append_row(std::string& csv, const TrialRow& r) {
    csv += std::to_string(r.trial);
    csv += ',';
    csv += algorithm_label(r.algorithm);
    csv += ',';
    csv += fmt_double(r.report.gamma);
    csv += ',';
    csv += fmt_double(r.report.pm);
    csv += ',';
    csv += fmt_double(r.report.pf);
    csv += ',';
    csv += fmt_double(r.report.equal_error_rate);
    csv += ',';
    csv += std::to_string(r.iterations);
    csv += ',';
    csv += std::to_string(r.numbers);
    csv += ',';
    csv += std::to_string(r.bits);
    csv += ',';
    csv += fmt_hash(r.scenario);
    csv += '\n';
}

}  // namespace

std::string metrics_csv(const std::vector<TrialRow>& rows) {
    std::string csv = kMetricsHeader;
    csv += '\n';
    for (const TrialRow& r : rows) append_row(csv, r);
    return csv;
}

SweepSpec load_sweep(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sweep file: " + path);
    nlohmann::json j;
    in >> j;

    SweepSpec spec;
    if (!j.contains("parameter")) throw std::invalid_argument("sweep: missing 'parameter'");
    spec.parameter = j["parameter"].get<std::string>();
    for (const auto& v : j.value("values", nlohmann::json::array()))
        spec.values.push_back(v.get<double>());

    if (j.contains("base")) spec.base = config_from_json(j["base"]);

    // Reject unknown names before any trial runs.
    ExperimentConfig probe = spec.base;
    set_parameter(probe, spec.parameter, spec.values.empty() ? 1.0 : spec.values.front());
    return spec;
}

void set_parameter(ExperimentConfig& cfg, const std::string& name, double value) {
    const auto as_int = [&](const char* field) {
        if (value != std::floor(value))
            throw std::invalid_argument(std::string("sweep: ") + field +
                                        " requires an integral value");
        return static_cast<int>(value);
    };
    if (name == "M") cfg.M = as_int("M");
    else if (name == "K") cfg.K = as_int("K");
    else if (name == "N") cfg.N = as_int("N");
    else if (name == "L") cfg.L = as_int("L");
    else if (name == "L_m") cfg.L_m = as_int("L_m");
    else if (name == "alpha") cfg.alpha = value;
    else if (name == "lambda_c") cfg.lambda_c = value;
    else if (name == "side") cfg.side = value;
    else if (name == "mu") cfg.mu = value;
    else if (name == "omega") cfg.omega = value;
    else if (name == "outer_iters") cfg.outer_iters = as_int("outer_iters");
    else if (name == "cd_sweeps") cfg.cd_sweeps = as_int("cd_sweeps");
    else if (name == "tol") cfg.tol = value;
    else if (name == "bits_dist") cfg.bits_dist = as_int("bits_dist");
    else if (name == "bits_cent") cfg.bits_cent = as_int("bits_cent");
    else if (name == "top_s") cfg.top_s = as_int("top_s");
    else if (name == "trials") cfg.trials = as_int("trials");
    else if (name == "seed") cfg.seed = static_cast<std::uint64_t>(as_int("seed"));
    else throw std::invalid_argument("sweep: unknown parameter '" + name + "'");
}

std::string run_sweep(const SweepSpec& spec, int max_workers) {
    std::string csv = "parameter,value,";
    csv += kMetricsHeader;
    csv += '\n';
    for (double value : spec.values) {
        ExperimentConfig cfg = spec.base;
        set_parameter(cfg, spec.parameter, value);
        cfg.validate();
        const std::string prefix = spec.parameter + ',' + fmt_double(value) + ',';
        for (const TrialRow& r : run_trials(cfg, max_workers)) {
            csv += prefix;
            append_row(csv, r);
        }
    }
    return csv;
}

std::string diagnose(const ExperimentConfig& cfg) {
    cfg.validate();
    const TrialScenario sc = build_trial_scenario(cfg, 0);

    std::string csv = "ap,device_a,device_b,pair_class,matrix_factor,cosine\n";
    for (int m = 0; m < cfg.M; ++m) {
        for (const SimilarityRow& row :
             similarity_diagnostics(sc.stats[static_cast<std::size_t>(m)], sc.S, m)) {
            csv += std::to_string(row.ap);
            csv += ',';
            csv += std::to_string(row.device_a);
            csv += ',';
            csv += std::to_string(row.device_b);
            csv += ',';
            csv += pair_class_label(row.cls);
            csv += ',';
            csv += fmt_double(row.matrix_factor);
            csv += ',';
            csv += fmt_double(row.cosine);
            csv += '\n';
        }
    }
    return csv;
}

std::string overhead_csv(const ExperimentConfig& cfg) {
    cfg.validate();
    const OverheadLedger led = account_overhead(
        static_cast<std::uint64_t>(cfg.M), static_cast<std::uint64_t>(cfg.N),
        static_cast<std::uint64_t>(cfg.L), static_cast<std::uint64_t>(cfg.K),
        static_cast<std::uint64_t>(cfg.outer_iters), static_cast<std::uint64_t>(cfg.bits_dist),
        static_cast<std::uint64_t>(cfg.bits_cent), static_cast<std::uint64_t>(cfg.top_s));

    std::string csv =
        "M,N,L,K,iterations,bits_dist,bits_cent,top_s,dist_downlink_numbers,dist_uplink_numbers,"
        "dist_total_numbers,dist_downlink_bits,dist_uplink_bits,dist_total_bits,cent_numbers,"
        "cent_bits\n";
    csv += std::to_string(cfg.M) + ',' + std::to_string(cfg.N) + ',' + std::to_string(cfg.L) +
           ',' + std::to_string(cfg.K) + ',' + std::to_string(cfg.outer_iters) + ',' +
           std::to_string(cfg.bits_dist) + ',' + std::to_string(cfg.bits_cent) + ',' +
           std::to_string(cfg.top_s) + ',' + std::to_string(led.dist_downlink_numbers) + ',' +
           std::to_string(led.dist_uplink_numbers) + ',' +
           std::to_string(led.dist_total_numbers()) + ',' +
           std::to_string(led.dist_downlink_bits) + ',' + std::to_string(led.dist_uplink_bits) +
           ',' + std::to_string(led.dist_total_bits()) + ',' + std::to_string(led.cent_numbers) +
           ',' + std::to_string(led.cent_bits) + '\n';
    return csv;
}

}  // namespace hyfad
