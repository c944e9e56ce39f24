// physec-lab: experiment runner for the PHYSEC simulation toolkit.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "physec/harness.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config_error = 2;
constexpr int exit_runtime_error = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw physec::ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"physec-lab: deterministic PHYSEC simulation experiments"};
    app.require_subcommand(1);

    // run --config <file> --out <dir> [--trials N] [--seed S] [--parallel K]
    auto* run_cmd = app.add_subcommand("run", "run a scenario from a JSON config");
    std::string config_path;
    std::string out_dir = ".";
    std::optional<int> trials_override;
    std::optional<uint64_t> seed_override;
    int parallel = 1;
    run_cmd->add_option("--config", config_path, "scenario config (JSON)")->required();
    run_cmd->add_option("--out", out_dir, "output directory for CSV artifacts");
    run_cmd->add_option("--trials", trials_override, "override the config's trial count");
    run_cmd->add_option("--seed", seed_override, "override the config's master seed");
    run_cmd->add_option("--parallel", parallel, "worker threads (output is order-deterministic)")
        ->check(CLI::PositiveNumber);

    // sweep-moh --l 64 --n-min 64 --n-max 2000 --step 8 [--out dir]
    auto* moh_cmd = app.add_subcommand("sweep-moh", "message-overhead sweep to CSV");
    long l_bits = 64, n_min = 64, n_max = 2000, step = 8;
    std::string moh_out_dir = ".";
    moh_cmd->add_option("--l", l_bits, "MAC tag bits");
    moh_cmd->add_option("--n-min", n_min, "smallest payload (bits)");
    moh_cmd->add_option("--n-max", n_max, "largest payload (bits)");
    moh_cmd->add_option("--step", step, "payload sweep step (bits)");
    moh_cmd->add_option("--out", moh_out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        physec::harness::ExperimentConfig cfg;
        std::filesystem::path dir;
        if (run_cmd->parsed()) {
            cfg = physec::harness::validate_config(read_file(config_path));
            if (trials_override) cfg.trials = *trials_override;
            if (seed_override) cfg.seed = *seed_override;
            if (cfg.trials < 1) throw physec::ConfigError("trials must be positive");
            dir = out_dir;
        } else {
            cfg.scenario = physec::harness::Scenario::overhead_sweep;
            cfg.overhead = {l_bits, n_min, n_max, step};
            if (l_bits < 0 || n_min < 1 || n_max < n_min || step < 1)
                throw physec::ConfigError("sweep-moh: need --l >= 0, 1 <= n-min <= n-max, step >= 1");
            dir = moh_out_dir;
        }
        const auto path = physec::harness::run_to_file(cfg, dir, parallel);
        std::cout << path.string() << "\n";
        return exit_ok;
    } catch (const physec::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime_error;
    }
}
