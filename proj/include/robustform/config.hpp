#pragma once

#include <optional>
#include <string>
#include <vector>

#include "robustform/products.hpp"
#include "robustform/superhedging.hpp"

namespace robustform {

struct AmbiguityConfig {
    enum class Kind { Kernels, Polytope };
    Kind kind = Kind::Kernels;
    std::vector<Kernel> kernels;      // Kernels: shared by every node
    std::optional<BoxBounds> box;     // Polytope: optional bounds, shared
};

/// Scalar payoff recipes the config file can express.
struct PayoffSpec {
    enum class Kind { Const, Call, Put, AssetFraction, LinearInTime };
    Kind kind = Kind::Const;
    double value = 0.0;    // Const
    double strike = 0.0;   // Call / Put on the terminal asset
    double fraction = 0.0; // AssetFraction: value = fraction * S(node)
    double rate = 0.0;     // LinearInTime: value = rate * t
};

struct ProductConfig {
    std::string name;
    Product::Kind kind = Product::Kind::Survival;
    PayoffSpec payoff;
};

struct SuperhedgeConfig {
    enum class MarketKind { Reference, Enlarged };
    MarketKind market = MarketKind::Reference;
    bool stream_is_product = false;
    std::string stream_product;         // name into products[]
    PayoffSpec terminal_payoff;         // used when the stream is terminal
    int sigma_time = 0;
    int tau_time = -1;                  // -1: horizon
    std::vector<StoppingRule> barriers; // extra verification rules
};

struct SimulateConfig {
    int samples = 1000;
    int kernel_index = -1;  // chosen prior; -1 means "must be unambiguous"
};

struct RunConfig {
    TreeConfig tree;
    AmbiguityConfig ambiguity;
    std::vector<ProductConfig> products;
    std::vector<int> price_times;  // empty: every grid time
    int s_time = 0;
    int t_time = -1;               // -1: horizon
    std::optional<SuperhedgeConfig> superhedge;
    SimulateConfig simulate;
    double counterexample_strike = -1.0;  // <0: use s0
};

/// Parses and schema-validates a UTF-8 JSON config. Rejects unknown keys;
/// error messages carry the file position (line/column for syntax errors,
/// JSON path otherwise).
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

/// Materialization helpers.
AmbiguitySet make_ambiguity(const ScenarioTree& tree, const AmbiguityConfig& config);
Product make_product(const CreditModel& model, const ProductConfig& config);
TerminalClaim make_terminal_payoff(const ScenarioTree& tree, const PayoffSpec& spec);

}  // namespace robustform
