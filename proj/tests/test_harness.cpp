#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "hyfad/harness.hpp"

using namespace hyfad;
using Catch::Matchers::ContainsSubstring;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.M = 2;
    cfg.K = 4;
    cfg.N = 10;
    cfg.L = 5;
    cfg.L_m = 2;
    cfg.alpha = 0.3;
    cfg.lambda_c = 0.1;
    cfg.side = 60.0;
    cfg.outer_iters = 2;
    cfg.cd_sweeps = 10;
    cfg.tol = 1e-8;
    cfg.trials = 5;
    cfg.seed = 42;
    return cfg;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string field;
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

int column_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {}
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

}  // namespace

TEST_CASE("algorithm labels round trip and reject unknown names", "[harness]") {
    for (Algorithm alg : {Algorithm::Distributed, Algorithm::Centralized, Algorithm::Mismatched})
        REQUIRE(parse_algorithm(algorithm_label(alg)) == alg);
    REQUIRE_THROWS_AS(parse_algorithm("amp"), std::invalid_argument);
}

TEST_CASE("config validation names the offending field", "[harness]") {
    ExperimentConfig cfg = small_config();
    cfg.validate();

    cfg.M = 0;
    REQUIRE_THROWS_WITH(cfg.validate(), ContainsSubstring("M"));
    cfg = small_config();
    cfg.alpha = 1.5;
    REQUIRE_THROWS_WITH(cfg.validate(), ContainsSubstring("alpha"));
    cfg = small_config();
    cfg.tol = 0.0;
    REQUIRE_THROWS_WITH(cfg.validate(), ContainsSubstring("tol"));
    cfg = small_config();
    cfg.top_s = cfg.N + 1;
    REQUIRE_THROWS_WITH(cfg.validate(), ContainsSubstring("top_s"));
    cfg = small_config();
    cfg.trials = 0;
    REQUIRE_THROWS_WITH(cfg.validate(), ContainsSubstring("trials"));
    cfg = small_config();
    cfg.bits_dist = 63;
    REQUIRE_THROWS_WITH(cfg.validate(), ContainsSubstring("bits_dist"));
}

TEST_CASE("config files round trip and fill absent keys with defaults", "[harness]") {
    ExperimentConfig cfg = small_config();
    cfg.algorithm = Algorithm::Centralized;
    cfg.bits_dist = 3;
    cfg.seed = 987654321;

    TempFile file("hyfad_test_config.json");
    save_config(file.path.string(), cfg);
    const ExperimentConfig back = load_config(file.path.string());
    REQUIRE(back.M == cfg.M);
    REQUIRE(back.K == cfg.K);
    REQUIRE(back.N == cfg.N);
    REQUIRE(back.L == cfg.L);
    REQUIRE(back.L_m == cfg.L_m);
    REQUIRE(back.alpha == cfg.alpha);
    REQUIRE(back.lambda_c == cfg.lambda_c);
    REQUIRE(back.side == cfg.side);
    REQUIRE(back.mu == cfg.mu);
    REQUIRE(back.omega == cfg.omega);
    REQUIRE(back.outer_iters == cfg.outer_iters);
    REQUIRE(back.cd_sweeps == cfg.cd_sweeps);
    REQUIRE(back.tol == cfg.tol);
    REQUIRE(back.bits_dist == cfg.bits_dist);
    REQUIRE(back.bits_cent == cfg.bits_cent);
    REQUIRE(back.top_s == cfg.top_s);
    REQUIRE(back.trials == cfg.trials);
    REQUIRE(back.seed == cfg.seed);
    REQUIRE(back.algorithm == cfg.algorithm);

    TempFile partial("hyfad_test_partial.json");
    {
        std::ofstream out(partial.path);
        out << "{\"M\": 2, \"algorithm\": \"centralized\"}\n";
    }
    const ExperimentConfig sparse = load_config(partial.path.string());
    const ExperimentConfig defaults;
    REQUIRE(sparse.M == 2);
    REQUIRE(sparse.algorithm == Algorithm::Centralized);
    REQUIRE(sparse.K == defaults.K);
    REQUIRE(sparse.N == defaults.N);
    REQUIRE(sparse.trials == defaults.trials);

    REQUIRE_THROWS_AS(load_config("/nonexistent/hyfad.json"), std::runtime_error);
}

TEST_CASE("scenario hash ignores the algorithm but tracks the scenario", "[harness]") {
    ExperimentConfig cfg = small_config();
    ExperimentConfig other = cfg;

    other.algorithm = Algorithm::Centralized;
    REQUIRE(scenario_hash(other) == scenario_hash(cfg));
    other = cfg;
    other.trials = cfg.trials + 100;
    REQUIRE(scenario_hash(other) == scenario_hash(cfg));

    other = cfg;
    other.K = cfg.K + 1;
    REQUIRE(scenario_hash(other) != scenario_hash(cfg));
    other = cfg;
    other.seed = cfg.seed + 1;
    REQUIRE(scenario_hash(other) != scenario_hash(cfg));
    other = cfg;
    other.lambda_c = cfg.lambda_c * 2.0;
    REQUIRE(scenario_hash(other) != scenario_hash(cfg));
}

TEST_CASE("trial scenarios are deterministic with the configured shapes", "[harness]") {
    const ExperimentConfig cfg = small_config();
    const TrialScenario sc = build_trial_scenario(cfg, 3);
    const TrialScenario again = build_trial_scenario(cfg, 3);

    REQUIRE(sc.dep.num_aps() == cfg.M);
    REQUIRE(sc.dep.num_devices() == cfg.N);
    REQUIRE(sc.S.rows() == cfg.L);
    REQUIRE(sc.S.cols() == cfg.N);
    REQUIRE(sc.stats.size() == static_cast<std::size_t>(cfg.M));
    for (const auto& row : sc.stats) REQUIRE(row.size() == static_cast<std::size_t>(cfg.N));
    REQUIRE(sc.ys.size() == static_cast<std::size_t>(cfg.M));
    for (const auto& y : sc.ys) REQUIRE(y.size() == cfg.L * cfg.K);

    int active = 0;
    for (auto bit : sc.a_true) active += bit;
    REQUIRE(active == 3);  // round(0.3 * 10)

    REQUIRE((sc.S - again.S).norm() == 0.0);
    REQUIRE(sc.a_true == again.a_true);
    for (int m = 0; m < cfg.M; ++m)
        REQUIRE((sc.ys[static_cast<std::size_t>(m)] - again.ys[static_cast<std::size_t>(m)])
                    .norm() == 0.0);

    // A different trial index reshuffles every stream.
    const TrialScenario other = build_trial_scenario(cfg, 4);
    REQUIRE((sc.S - other.S).norm() > 0.0);
}

TEST_CASE("run_algorithm produces boxed estimates and the configured overhead", "[harness]") {
    ExperimentConfig cfg = small_config();
    const TrialScenario sc = build_trial_scenario(cfg, 0);

    cfg.algorithm = Algorithm::Distributed;
    const AlgorithmOutcome dist = run_algorithm(cfg, sc, 0);
    REQUIRE(dist.a.size() == cfg.N);
    REQUIRE(dist.a.minCoeff() >= 0.0);
    REQUIRE(dist.a.maxCoeff() <= 1.0);
    REQUIRE(dist.iterations == cfg.outer_iters);
    REQUIRE(dist.numbers ==
            2ull * static_cast<std::uint64_t>(cfg.outer_iters) * cfg.M * cfg.N);
    REQUIRE(dist.bits == 0);

    cfg.algorithm = Algorithm::Centralized;
    cfg.bits_cent = 4;
    const AlgorithmOutcome cent = run_algorithm(cfg, sc, 0);
    REQUIRE(cent.a.minCoeff() >= 0.0);
    REQUIRE(cent.a.maxCoeff() <= 1.0);
    REQUIRE(cent.iterations == 1);
    REQUIRE(cent.numbers == 2ull * cfg.M * cfg.L * cfg.K);
    REQUIRE(cent.bits == 2ull * cfg.M * cfg.L * cfg.K * 4);

    cfg.algorithm = Algorithm::Mismatched;
    const AlgorithmOutcome mism = run_algorithm(cfg, sc, 0);
    REQUIRE(mism.a.minCoeff() >= 0.0);
    REQUIRE(mism.a.maxCoeff() <= 1.0);
    REQUIRE(mism.iterations == 1);
    REQUIRE(mism.numbers == 2ull * cfg.M * cfg.L * cfg.K);
}

TEST_CASE("run_trials is reproducible across worker counts", "[harness]") {
    ExperimentConfig cfg = small_config();
    cfg.algorithm = Algorithm::Distributed;

    const std::vector<TrialRow> serial = run_trials(cfg, 1);
    const std::vector<TrialRow> parallel = run_trials(cfg, 3);
    REQUIRE(serial.size() == static_cast<std::size_t>(cfg.trials));
    REQUIRE(metrics_csv(serial) == metrics_csv(parallel));

    const std::uint64_t scen = scenario_hash(cfg);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        REQUIRE(serial[i].trial == static_cast<int>(i));
        REQUIRE(serial[i].algorithm == Algorithm::Distributed);
        REQUIRE(serial[i].scenario == scen);
        REQUIRE(serial[i].iterations == cfg.outer_iters);
    }
}

TEST_CASE("metrics_csv emits the pinned header and one row per trial", "[harness]") {
    ExperimentConfig cfg = small_config();
    cfg.trials = 3;
    cfg.algorithm = Algorithm::Centralized;
    const std::vector<TrialRow> rows = run_trials(cfg, 1);
    const std::vector<std::string> lines = split_lines(metrics_csv(rows));

    REQUIRE(lines.size() == 4);
    REQUIRE(lines[0] ==
            "trial,algorithm,gamma,pm,pf,equal_error_rate,iterations,overhead_numbers,"
            "overhead_bits,scenario_hash");
    const auto fields = split_csv(lines[1]);
    REQUIRE(fields.size() == 10);
    REQUIRE(fields[0] == "0");
    REQUIRE(fields[1] == "centralized");

    // Equal scenarios hash equally across algorithms, so cross-algorithm rows
    // are joinable on the last column.
    ExperimentConfig dist_cfg = cfg;
    dist_cfg.algorithm = Algorithm::Distributed;
    const std::vector<TrialRow> dist_rows = run_trials(dist_cfg, 1);
    REQUIRE(dist_rows[0].scenario == rows[0].scenario);
}

TEST_CASE("set_parameter assigns by name and rejects bad values", "[harness]") {
    ExperimentConfig cfg = small_config();
    set_parameter(cfg, "alpha", 0.35);
    REQUIRE(cfg.alpha == 0.35);
    set_parameter(cfg, "K", 16.0);
    REQUIRE(cfg.K == 16);
    set_parameter(cfg, "seed", 7.0);
    REQUIRE(cfg.seed == 7);

    REQUIRE_THROWS_AS(set_parameter(cfg, "M", 2.5), std::invalid_argument);
    REQUIRE_THROWS_AS(set_parameter(cfg, "bandwidth", 1.0), std::invalid_argument);
}

TEST_CASE("sweep files parse and validate their parameter name", "[harness]") {
    TempFile file("hyfad_test_sweep.json");
    {
        std::ofstream out(file.path);
        out << "{\"parameter\": \"K\", \"values\": [4, 16],"
            << " \"base\": {\"M\": 1, \"N\": 8, \"K\": 4, \"L\": 5, \"trials\": 2}}\n";
    }
    const SweepSpec spec = load_sweep(file.path.string());
    REQUIRE(spec.parameter == "K");
    REQUIRE(spec.values == std::vector<double>{4.0, 16.0});
    REQUIRE(spec.base.M == 1);
    REQUIRE(spec.base.N == 8);
    REQUIRE(spec.base.trials == 2);

    TempFile bad("hyfad_test_sweep_bad.json");
    {
        std::ofstream out(bad.path);
        out << "{\"parameter\": \"bandwidth\", \"values\": [1]}\n";
    }
    REQUIRE_THROWS_AS(load_sweep(bad.path.string()), std::invalid_argument);

    TempFile missing("hyfad_test_sweep_missing.json");
    {
        std::ofstream out(missing.path);
        out << "{\"values\": [1]}\n";
    }
    REQUIRE_THROWS_AS(load_sweep(missing.path.string()), std::invalid_argument);
}

TEST_CASE("an empty sweep yields only the header", "[harness]") {
    SweepSpec spec;
    spec.base = small_config();
    spec.parameter = "K";
    const std::vector<std::string> lines = split_lines(run_sweep(spec, 1));
    REQUIRE(lines.size() == 1);
    REQUIRE(lines[0] ==
            "parameter,value,trial,algorithm,gamma,pm,pf,equal_error_rate,iterations,"
            "overhead_numbers,overhead_bits,scenario_hash");
}

TEST_CASE("detection improves with more antennas in a sweep", "[harness]") {
    SweepSpec spec;
    spec.base = small_config();
    spec.base.N = 12;
    spec.base.M = 1;
    spec.base.L = 4;
    spec.base.alpha = 0.3;
    spec.base.lambda_c = 0.05;
    spec.base.algorithm = Algorithm::Centralized;
    spec.base.cd_sweeps = 30;
    spec.base.tol = 1e-10;
    spec.base.trials = 25;
    spec.base.seed = 11;
    spec.parameter = "K";
    spec.values = {4.0, 16.0};

    const std::string csv = run_sweep(spec, 1);
    const std::vector<std::string> lines = split_lines(csv);
    REQUIRE(lines.size() == 1 + 2 * 25);

    const auto header = split_csv(lines[0]);
    const int value_col = column_index(header, "value");
    const int eer_col = column_index(header, "equal_error_rate");
    REQUIRE(value_col >= 0);
    REQUIRE(eer_col >= 0);

    double sum_small = 0.0, sum_large = 0.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv(lines[i]);
        REQUIRE(fields[0] == "K");
        const double eer = std::stod(fields[static_cast<std::size_t>(eer_col)]);
        if (fields[static_cast<std::size_t>(value_col)] == "4")
            sum_small += eer;
        else
            sum_large += eer;
    }
    REQUIRE(sum_large / 25.0 < sum_small / 25.0);
}

TEST_CASE("diagnose reports every pair at every AP", "[harness]") {
    ExperimentConfig cfg = small_config();
    cfg.N = 8;
    cfg.L = 6;
    cfg.K = 4;
    cfg.lambda_c = 0.01;  // shrinks the near-field zone to nothing
    const std::vector<std::string> lines = split_lines(diagnose(cfg));
    REQUIRE(lines.size() == 1 + static_cast<std::size_t>(cfg.M * (8 * 7 / 2)));
    REQUIRE(lines[0] == "ap,device_a,device_b,pair_class,matrix_factor,cosine");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv(lines[i]);
        REQUIRE(fields.size() == 6);
        REQUIRE(fields[3] == "FF-FF");
        REQUIRE(fields[4] == "1");
        REQUIRE(std::stod(fields[5]) <= 1.0);
    }

    // A longer wavelength at K=8 grows the near zone enough to classify some
    // links as near field.
    ExperimentConfig hybrid = cfg;
    hybrid.K = 8;
    hybrid.lambda_c = 0.5;
    const std::vector<std::string> hlines = split_lines(diagnose(hybrid));
    int near_rows = 0;
    for (std::size_t i = 1; i < hlines.size(); ++i) {
        const auto fields = split_csv(hlines[i]);
        if (fields[3] != "FF-FF") {
            ++near_rows;
            REQUIRE(std::stod(fields[4]) < 1.0);
        }
        REQUIRE(std::stod(fields[4]) <= 1.0 + 1e-12);
    }
    REQUIRE(near_rows > 0);
}

TEST_CASE("overhead_csv reproduces the ledger formulas", "[harness]") {
    ExperimentConfig cfg = small_config();
    cfg.M = 3;
    cfg.N = 100;
    cfg.L = 6;
    cfg.K = 24;
    cfg.outer_iters = 2;
    cfg.bits_dist = 3;
    cfg.bits_cent = 6;
    cfg.top_s = 0;

    const std::vector<std::string> lines = split_lines(overhead_csv(cfg));
    REQUIRE(lines.size() == 2);
    REQUIRE(lines[0] ==
            "M,N,L,K,iterations,bits_dist,bits_cent,top_s,dist_downlink_numbers,"
            "dist_uplink_numbers,dist_total_numbers,dist_downlink_bits,dist_uplink_bits,"
            "dist_total_bits,cent_numbers,cent_bits");
    const auto fields = split_csv(lines[1]);
    const auto header = split_csv(lines[0]);
    REQUIRE(fields.size() == header.size());
    REQUIRE(fields[static_cast<std::size_t>(column_index(header, "dist_total_numbers"))] ==
            "1200");
    REQUIRE(fields[static_cast<std::size_t>(column_index(header, "dist_total_bits"))] == "3600");
    REQUIRE(fields[static_cast<std::size_t>(column_index(header, "cent_numbers"))] == "864");
    REQUIRE(fields[static_cast<std::size_t>(column_index(header, "cent_bits"))] == "5184");
}
