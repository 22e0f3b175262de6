#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "robustform/config.hpp"

namespace robustform {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

struct CommandOptions {
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string mode = "saturated";  // saturated | product
    int threads = 1;
};

int cmd_price(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_superhedge(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_verify(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_simulate(const RunConfig& config, const CommandOptions& options, std::ostream& log);

}  // namespace robustform
