#include "tdbs/config.hpp"
#include "tdbs/errors.hpp"
#include "tdbs/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"Time-dependent Black-Scholes averaging experiments"};
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::size_t workers = 1;
    std::uint64_t seed = 0;

    app.add_option("--config", config_path, "Experiment config (JSON)")->required();
    app.add_option("--set", overrides, "Override a config field, key=value (repeatable)");
    app.add_option("--out", out_dir, "Output directory (overrides output.dir)");
    app.add_option("--workers", workers, "Worker threads for Monte Carlo batches")
        ->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "Seed (overrides experiment.seed)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? tdbs::exit_pass : tdbs::exit_config;
    }

    if (!out_dir.empty()) overrides.push_back("output.dir=\"" + out_dir + "\"");
    if (*seed_opt) overrides.push_back("experiment.seed=" + std::to_string(seed));

    tdbs::ExperimentConfig cfg;
    try {
        cfg = tdbs::load_config(config_path, overrides);
    } catch (const tdbs::EllipticityError& e) {
        std::cerr << "model error: " << e.what() << " (at market time " << e.time() << ")\n";
        return tdbs::exit_config;
    } catch (const tdbs::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return tdbs::exit_config;
    }

    try {
        return tdbs::run_experiment(cfg, workers, std::cout);
    } catch (const tdbs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return tdbs::exit_config;
    } catch (const tdbs::EllipticityError& e) {
        std::cerr << "model error: " << e.what() << " (at market time " << e.time() << ")\n";
        return tdbs::exit_config;
    } catch (const tdbs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tdbs::exit_fail;
    }
}
