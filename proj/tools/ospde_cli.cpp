#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ospde/config.hpp"
#include "ospde/driver.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Obstacle problems for quasilinear SPDEs"};
    app.require_subcommand(1);
    std::string config_path, out;
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;
    const std::pair<const char*, const char*> commands[] = {
        {"simulate", "write trajectories and obstacles"},
        {"verify", "run the configured checks"},
        {"capacity", "estimate the parabolic capacity of a space-time set"},
        {"convergence", "strong error against an oracle or a fine reference"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "experiment configuration (YAML or manifest)")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--paths", paths, "number of Monte Carlo paths");
        sub->add_option("--seed", seed, "64-bit seed");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    const std::string subcommand = app.get_subcommands().front()->get_name();
    ospde::ExperimentConfig config;
    try {
        config = ospde::parse_config(config_path);
    } catch (const ospde::ConfigError& e) {
        for (const auto& m : e.messages()) std::cerr << "config error: " << m << '\n';
        return 2;
    }
    if (!out.empty()) config.out = out;
    if (paths) {
        if (*paths < 1) {
            std::cerr << "--paths must be at least 1\n";
            return 2;
        }
        config.paths = *paths;
    }
    if (seed) config.seed = *seed;
    return ospde::run(config, subcommand, std::cerr);
}
