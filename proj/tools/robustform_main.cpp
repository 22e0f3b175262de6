#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "robustform/commands.hpp"
#include "robustform/errors.hpp"

namespace {

int run(const std::string& command, const std::string& config_path,
        const robustform::CommandOptions& options) {
    using namespace robustform;
    try {
        const RunConfig config = parse_config_file(config_path);
        if (command == "price") return cmd_price(config, options, std::cout);
        if (command == "superhedge") return cmd_superhedge(config, options, std::cout);
        if (command == "verify") return cmd_verify(config, options, std::cout);
        if (command == "simulate") return cmd_simulate(config, options, std::cout);
        std::cerr << "unknown command: " << command << '\n';
        return kExitConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumericalError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robustform: defaultable payment streams under nondominated model uncertainty"};
    app.require_subcommand(1);

    std::string config_path;
    robustform::CommandOptions options;
    if (const char* env = std::getenv("ROBUSTFORM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) options.threads = n;
    }

    for (const char* name : {"price", "superhedge", "verify", "simulate"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "configuration file (JSON)")->required();
        sub->add_option("--out", options.out_dir, "output directory");
        sub->add_option_function<std::uint64_t>(
               "--seed",
               [&options](std::uint64_t seed) {
                   options.seed = seed;
                   options.seed_given = true;
               },
               "RNG seed");
        sub->add_option("--mode", options.mode, "saturated|product")
            ->check(CLI::IsMember({"saturated", "product"}));
    }

    CLI11_PARSE(app, argc, argv);
    return run(app.get_subcommands().front()->get_name(), config_path, options);
}
