#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "iscm/discovery.hpp"
#include "iscm/generate.hpp"
#include "iscm/graphs.hpp"
#include "iscm/metrics.hpp"

namespace iscm {

// One config drives one command; flags override fields. Every output is a
// pure function of (config, seed, build).
struct ExperimentConfig {
    std::string kind;
    std::vector<std::string> graph_families = {"er"};  // er | usf | chain
    std::vector<int> sizes = {100};
    double degree = 2.0;
    std::string mechanism = "linear";  // linear | rff
    std::vector<std::pair<double, double>> weight_supports = {{0.5, 2.0}};
    NoiseSpec noise = NoiseSpec::gaussian(1.0);
    std::vector<std::string> models = {"iscm"};  // raw | standardized | iscm | mooij | squires
    std::string standardization = "default";     // default | population | empirical
    int replicates = 100;
    int samples = 1000;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::filesystem::path out_dir = ".";
    int workers = 1;
    int rff_features = 100;
    double length_scale_lo = 7.0, length_scale_hi = 10.0;
    double output_scale_lo = 10.0, output_scale_hi = 20.0;
    std::pair<double, double> mooij_support = {0.5, 1.5};
    std::pair<double, double> squires_support = {0.25, 1.0};
    int squires_calibration = 10000;
    std::string suite;  // verify: theorem1 | theorem2 | theorem3 | trek | heuristics
};

ExperimentConfig config_from_json(const nlohmann::json& j);

// Random forest DAG for the verification suites: each vertex attaches to a
// uniform earlier vertex with probability attach_prob, then the skeleton is
// oriented along a random permutation.
Dag sample_forest(int d, double attach_prob, RandomStream& rng);

// Deterministic work queue over [0, count); results must be stored by index.
void parallel_for(int count, int workers, const std::function<void(int)>& body);

// Ground-truth system plus the sampling spec for one benchmark model label.
struct SystemDraw {
    Dag truth;
    GenerativeSpec spec;
};
SystemDraw draw_system(const ExperimentConfig& config, const std::string& family, int d,
                       std::pair<double, double> support, const std::string& model,
                       RandomStream& rng);

struct SortabilityRow {
    std::string family;
    int d = 0;
    std::pair<double, double> support;
    std::string model;
    std::string criterion;
    double mean = 0.0;
    double stddev = 0.0;
};
std::vector<SortabilityRow> run_sortability(const ExperimentConfig& config);
std::string sortability_csv(const std::vector<SortabilityRow>& rows);

struct ChainCorrRow {
    std::string model;
    int pair_first = 0;  // 1-based vertex of the consecutive pair
    double mean_abs_corr = 0.0;
    double stddev = 0.0;
};
std::vector<ChainCorrRow> run_chain_corr(int d, std::pair<double, double> support, int replicates,
                                         std::uint64_t seed, int workers = 1);
std::string chain_corr_csv(const std::vector<ChainCorrRow>& rows);

struct ImpliedNoiseRow {
    int system = 0;
    std::string model;
    int node = 0;  // 1-based
    bool is_root = false;
    double inverse_noise_var = 0.0;
};
std::vector<ImpliedNoiseRow> run_implied_noise(const ExperimentConfig& config);
std::string implied_noise_csv(const std::vector<ImpliedNoiseRow>& rows);
double median_inverse_noise(const std::vector<ImpliedNoiseRow>& rows, const std::string& model);

struct NoiseTransferRow {
    int replicate = 0;
    std::string source;  // which implied model provided the noise variances
    double max_marginal_var_diff = 0.0;
    bool noise_match = false;
};
std::vector<NoiseTransferRow> run_noise_transfer(const ExperimentConfig& config);
std::string noise_transfer_csv(const std::vector<NoiseTransferRow>& rows);

struct BenchmarkRow {
    std::string model;
    std::string criterion;
    int replicate = 0;
    double f1 = 0.0;
    int shd = 0;
};
std::vector<BenchmarkRow> run_benchmark(const ExperimentConfig& config);
std::string benchmark_csv(const std::vector<BenchmarkRow>& rows);
double median_f1(const std::vector<BenchmarkRow>& rows, const std::string& model,
                 const std::string& criterion);

struct VerifyCase {
    std::string name;
    bool pass = false;
    std::string detail;
};
struct VerifyReport {
    std::string suite;
    std::vector<VerifyCase> cases;
    bool all_pass() const {
        for (const auto& c : cases)
            if (!c.pass) return false;
        return true;
    }
};
VerifyReport run_verify(const std::string& suite, std::uint64_t seed, int workers = 1);
nlohmann::json verify_report_json(const VerifyReport& report);

// Writes one dataset CSV plus JSON sidecar per (replicate, model) into
// config.out_dir; returns the file paths.
std::vector<std::filesystem::path> run_generate(const ExperimentConfig& config);

}  // namespace iscm
