#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>

#include "iscm/experiments.hpp"
#include "iscm/serialize.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerifyFailed = 3;

struct CommonFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    int workers = 0;
    int replicates = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--seed", flags.seed, "base seed (required here or in the config)")
        ->each([&](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--workers", flags.workers, "worker thread count");
    cmd->add_option("--replicates", flags.replicates, "replicate count");
}

iscm::ExperimentConfig load_config(const CommonFlags& flags, const std::string& kind) {
    nlohmann::json j = nlohmann::json::object();
    if (!flags.config_path.empty()) {
        std::ifstream file(flags.config_path);
        if (!file) throw std::invalid_argument("cannot open config " + flags.config_path);
        file >> j;
    }
    iscm::ExperimentConfig config = iscm::config_from_json(j);
    config.kind = kind;
    if (flags.seed_set) {
        config.seed = flags.seed;
        config.has_seed = true;
    }
    if (!config.has_seed)
        throw std::invalid_argument("a seed is required (--seed or \"seed\" in the config)");
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (flags.workers > 0) config.workers = flags.workers;
    if (flags.replicates > 0) config.replicates = flags.replicates;
    return config;
}

void write_output(const iscm::ExperimentConfig& config, const std::string& name,
                  const std::string& contents) {
    std::filesystem::create_directories(config.out_dir);
    const auto path = config.out_dir / name;
    iscm::write_text_file(path, contents);
    std::cout << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic SCM benchmark data generator and identifiability checks"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string verify_suite;
    int chain_d = 10;
    std::pair<double, double> chain_support{0.5, 2.0};

    CLI::App* cmd_generate = app.add_subcommand("generate", "emit dataset CSVs with JSON sidecars");
    add_common(cmd_generate, flags);
    CLI::App* cmd_sortability =
        app.add_subcommand("sortability", "Var- and R2-sortability means across systems");
    add_common(cmd_sortability, flags);
    CLI::App* cmd_chain_corr =
        app.add_subcommand("chain-corr", "analytic consecutive-pair correlations on a chain");
    add_common(cmd_chain_corr, flags);
    cmd_chain_corr->add_option("--d", chain_d, "chain length");
    CLI::App* cmd_implied_noise =
        app.add_subcommand("implied-noise", "inverse implied noise variances per node and system");
    add_common(cmd_implied_noise, flags);
    CLI::App* cmd_noise_transfer =
        app.add_subcommand("noise-transfer", "marginal-variance-preserving noise transfer checks");
    add_common(cmd_noise_transfer, flags);
    CLI::App* cmd_benchmark =
        app.add_subcommand("benchmark", "SortnRegress F1/SHD across generating models");
    add_common(cmd_benchmark, flags);
    CLI::App* cmd_verify = app.add_subcommand("verify", "run a property suite");
    add_common(cmd_verify, flags);
    cmd_verify->add_option("suite", verify_suite,
                           "theorem1 | theorem2 | theorem3 | trek | heuristics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (cmd_generate->parsed()) {
            auto config = load_config(flags, "generate");
            for (const auto& path : iscm::run_generate(config)) std::cout << path.string() << "\n";
            return kExitOk;
        }
        if (cmd_sortability->parsed()) {
            auto config = load_config(flags, "sortability");
            write_output(config, "sortability.csv", iscm::sortability_csv(iscm::run_sortability(config)));
            return kExitOk;
        }
        if (cmd_chain_corr->parsed()) {
            auto config = load_config(flags, "chain-corr");
            if (!config.sizes.empty() && cmd_chain_corr->count("--d") == 0) chain_d = config.sizes.front();
            if (!config.weight_supports.empty()) chain_support = config.weight_supports.front();
            const auto rows = iscm::run_chain_corr(chain_d, chain_support, config.replicates,
                                                   config.seed, config.workers);
            write_output(config, "chain_corr.csv", iscm::chain_corr_csv(rows));
            return kExitOk;
        }
        if (cmd_implied_noise->parsed()) {
            auto config = load_config(flags, "implied-noise");
            write_output(config, "implied_noise.csv",
                         iscm::implied_noise_csv(iscm::run_implied_noise(config)));
            return kExitOk;
        }
        if (cmd_noise_transfer->parsed()) {
            auto config = load_config(flags, "noise-transfer");
            write_output(config, "noise_transfer.csv",
                         iscm::noise_transfer_csv(iscm::run_noise_transfer(config)));
            return kExitOk;
        }
        if (cmd_benchmark->parsed()) {
            auto config = load_config(flags, "benchmark");
            if (config.models.size() == 1 && config.models.front() == "iscm")
                config.models = {"raw", "standardized", "iscm"};
            write_output(config, "benchmark.csv", iscm::benchmark_csv(iscm::run_benchmark(config)));
            return kExitOk;
        }
        if (cmd_verify->parsed()) {
            auto config = load_config(flags, "verify");
            if (!verify_suite.empty()) config.suite = verify_suite;
            if (config.suite.empty())
                throw std::invalid_argument("verify needs a suite name");
            const auto report = iscm::run_verify(config.suite, config.seed, config.workers);
            const auto j = iscm::verify_report_json(report);
            write_output(config, "verify_" + config.suite + ".json", j.dump(2) + "\n");
            std::cout << (report.all_pass() ? "PASS" : "FAIL") << " " << config.suite << ": "
                      << (j.at("total").get<std::size_t>() - j.at("failed").get<std::size_t>()) << "/"
                      << j.at("total").get<std::size_t>() << " cases\n";
            return report.all_pass() ? kExitOk : kExitVerifyFailed;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}
