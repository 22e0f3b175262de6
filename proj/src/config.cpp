#include "robustform/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "robustform/errors.hpp"

namespace robustform {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError("config error at " + path + ": " + message);
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) fail(path, "unknown key '" + key + "'");
    }
}

double require_number(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) fail(path, "missing key '" + key + "'");
    if (!obj[key].is_number()) fail(path + "." + key, "expected a number");
    return obj[key].get<double>();
}

int require_int(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) fail(path, "missing key '" + key + "'");
    if (!obj[key].is_number_integer()) fail(path + "." + key, "expected an integer");
    return obj[key].get<int>();
}

std::string require_string(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) fail(path, "missing key '" + key + "'");
    if (!obj[key].is_string()) fail(path + "." + key, "expected a string");
    return obj[key].get<std::string>();
}

std::vector<double> number_list(const json& arr, const std::string& path) {
    if (!arr.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : arr) {
        if (!v.is_number()) fail(path, "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

TreeConfig parse_tree(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path, {"times", "steps", "dt", "s0", "branching", "factors"});
    TreeConfig tree;

    if (obj.contains("times")) {
        if (obj.contains("steps") || obj.contains("dt"))
            fail(path, "'times' excludes 'steps'/'dt'");
        tree.times = number_list(obj["times"], path + ".times");
    } else {
        const int steps = require_int(obj, path, "steps");
        const double dt = require_number(obj, path, "dt");
        if (steps < 1) fail(path + ".steps", "must be >= 1");
        if (dt <= 0.0) fail(path + ".dt", "must be > 0");
        for (int k = 0; k <= steps; ++k) tree.times.push_back(k * dt);
    }
    const int K = static_cast<int>(tree.times.size()) - 1;

    tree.s0 = require_number(obj, path, "s0");

    if (!obj.contains("branching")) fail(path, "missing key 'branching'");
    if (obj["branching"].is_number_integer()) {
        tree.branching.assign(static_cast<std::size_t>(K), obj["branching"].get<int>());
    } else if (obj["branching"].is_array()) {
        for (const auto& v : obj["branching"]) {
            if (!v.is_number_integer()) fail(path + ".branching", "expected integers");
            tree.branching.push_back(v.get<int>());
        }
    } else {
        fail(path + ".branching", "expected an integer or an array");
    }

    if (!obj.contains("factors")) fail(path, "missing key 'factors'");
    const json& factors = obj["factors"];
    if (!factors.is_array() || factors.empty()) fail(path + ".factors", "expected an array");
    if (factors[0].is_array()) {
        for (std::size_t k = 0; k < factors.size(); ++k)
            tree.factors.push_back(
                number_list(factors[k], path + ".factors[" + std::to_string(k) + "]"));
    } else {
        const auto shared = number_list(factors, path + ".factors");
        tree.factors.assign(static_cast<std::size_t>(K), shared);
    }
    return tree;
}

IntensitySpec parse_intensity(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path, {"kind", "value", "values", "a", "b"});
    const std::string kind = require_string(obj, path, "kind");
    if (kind == "constant") return IntensitySpec::constant(require_number(obj, path, "value"));
    if (kind == "table") {
        if (!obj.contains("values")) fail(path, "missing key 'values'");
        return IntensitySpec::level_table(number_list(obj["values"], path + ".values"));
    }
    if (kind == "affine_log_asset")
        return IntensitySpec::affine_log_asset(require_number(obj, path, "a"),
                                               require_number(obj, path, "b"));
    fail(path + ".kind", "expected constant|table|affine_log_asset");
}

AmbiguityConfig parse_ambiguity(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path, {"kind", "kernels", "lo", "hi"});
    AmbiguityConfig out;
    const std::string kind = require_string(obj, path, "kind");
    if (kind == "kernels") {
        out.kind = AmbiguityConfig::Kind::Kernels;
        if (!obj.contains("kernels")) fail(path, "missing key 'kernels'");
        if (!obj["kernels"].is_array() || obj["kernels"].empty())
            fail(path + ".kernels", "expected a nonempty array of kernels");
        for (std::size_t i = 0; i < obj["kernels"].size(); ++i)
            out.kernels.push_back(
                number_list(obj["kernels"][i], path + ".kernels[" + std::to_string(i) + "]"));
        return out;
    }
    if (kind == "polytope") {
        out.kind = AmbiguityConfig::Kind::Polytope;
        if (obj.contains("lo") != obj.contains("hi"))
            fail(path, "'lo' and 'hi' must appear together");
        if (obj.contains("lo")) {
            BoxBounds box;
            box.lo = number_list(obj["lo"], path + ".lo");
            box.hi = number_list(obj["hi"], path + ".hi");
            out.box = std::move(box);
        }
        return out;
    }
    fail(path + ".kind", "expected kernels|polytope");
}

PayoffSpec parse_payoff(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path, {"kind", "value", "strike", "fraction", "rate"});
    PayoffSpec spec;
    const std::string kind = require_string(obj, path, "kind");
    if (kind == "const") {
        spec.kind = PayoffSpec::Kind::Const;
        spec.value = require_number(obj, path, "value");
    } else if (kind == "call") {
        spec.kind = PayoffSpec::Kind::Call;
        spec.strike = require_number(obj, path, "strike");
    } else if (kind == "put") {
        spec.kind = PayoffSpec::Kind::Put;
        spec.strike = require_number(obj, path, "strike");
    } else if (kind == "asset_fraction") {
        spec.kind = PayoffSpec::Kind::AssetFraction;
        spec.fraction = require_number(obj, path, "fraction");
    } else if (kind == "linear_in_time") {
        spec.kind = PayoffSpec::Kind::LinearInTime;
        spec.rate = require_number(obj, path, "rate");
    } else {
        fail(path + ".kind", "expected const|call|put|asset_fraction|linear_in_time");
    }
    return spec;
}

ProductConfig parse_product(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path, {"name", "type", "payoff"});
    ProductConfig out;
    out.name = require_string(obj, path, "name");
    const std::string type = require_string(obj, path, "type");
    if (type == "survival")
        out.kind = Product::Kind::Survival;
    else if (type == "recovery")
        out.kind = Product::Kind::Recovery;
    else if (type == "annuity")
        out.kind = Product::Kind::Annuity;
    else
        fail(path + ".type", "expected survival|recovery|annuity");
    if (!obj.contains("payoff")) fail(path, "missing key 'payoff'");
    out.payoff = parse_payoff(obj["payoff"], path + ".payoff");
    return out;
}

StoppingRule parse_stopping(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path, {"kind", "t", "level"});
    const std::string kind = require_string(obj, path, "kind");
    if (kind == "time") return StoppingRule::at_time(require_int(obj, path, "t"));
    if (kind == "barrier_up") return StoppingRule::barrier_up(require_number(obj, path, "level"));
    if (kind == "barrier_down")
        return StoppingRule::barrier_down(require_number(obj, path, "level"));
    fail(path + ".kind", "expected time|barrier_up|barrier_down");
}

SuperhedgeConfig parse_superhedge(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path, {"market", "stream", "sigma", "tau", "barriers"});
    SuperhedgeConfig out;
    const std::string market = require_string(obj, path, "market");
    if (market == "reference")
        out.market = SuperhedgeConfig::MarketKind::Reference;
    else if (market == "enlarged")
        out.market = SuperhedgeConfig::MarketKind::Enlarged;
    else
        fail(path + ".market", "expected reference|enlarged");

    if (!obj.contains("stream")) fail(path, "missing key 'stream'");
    const json& stream = obj["stream"];
    reject_unknown_keys(stream, path + ".stream", {"kind", "name", "payoff"});
    const std::string stream_kind = require_string(stream, path + ".stream", "kind");
    if (stream_kind == "product") {
        out.stream_is_product = true;
        out.stream_product = require_string(stream, path + ".stream", "name");
    } else if (stream_kind == "terminal") {
        if (!stream.contains("payoff")) fail(path + ".stream", "missing key 'payoff'");
        out.terminal_payoff = parse_payoff(stream["payoff"], path + ".stream.payoff");
    } else {
        fail(path + ".stream.kind", "expected product|terminal");
    }

    if (obj.contains("sigma")) out.sigma_time = require_int(obj, path, "sigma");
    if (obj.contains("tau")) out.tau_time = require_int(obj, path, "tau");
    if (obj.contains("barriers")) {
        const json& rules = obj["barriers"];
        if (!rules.is_array()) fail(path + ".barriers", "expected an array");
        for (std::size_t i = 0; i < rules.size(); ++i)
            out.barriers.push_back(
                parse_stopping(rules[i], path + ".barriers[" + std::to_string(i) + "]"));
    }
    return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into a line/column position.
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(column) +
                          ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");

    reject_unknown_keys(root, "$",
                        {"schema_version", "tree", "intensity", "ambiguity", "products",
                         "price_times", "times", "superhedge", "simulate", "counterexample"});

    const int version = require_int(root, "$", "schema_version");
    if (version != 1) fail("$.schema_version", "unsupported version");

    RunConfig config;
    if (!root.contains("tree")) fail("$", "missing key 'tree'");
    config.tree = parse_tree(root["tree"], "$.tree");
    if (!root.contains("intensity")) fail("$", "missing key 'intensity'");
    config.tree.intensity = parse_intensity(root["intensity"], "$.intensity");
    if (!root.contains("ambiguity")) fail("$", "missing key 'ambiguity'");
    config.ambiguity = parse_ambiguity(root["ambiguity"], "$.ambiguity");

    if (root.contains("products")) {
        const json& products = root["products"];
        if (!products.is_array()) fail("$.products", "expected an array");
        for (std::size_t i = 0; i < products.size(); ++i)
            config.products.push_back(
                parse_product(products[i], "$.products[" + std::to_string(i) + "]"));
    }

    if (root.contains("price_times")) {
        for (const auto& v : root["price_times"]) {
            if (!v.is_number_integer()) fail("$.price_times", "expected integers");
            config.price_times.push_back(v.get<int>());
        }
    }

    if (root.contains("times")) {
        const json& times = root["times"];
        reject_unknown_keys(times, "$.times", {"s", "t"});
        if (times.contains("s")) config.s_time = require_int(times, "$.times", "s");
        if (times.contains("t")) config.t_time = require_int(times, "$.times", "t");
    }

    if (root.contains("superhedge"))
        config.superhedge = parse_superhedge(root["superhedge"], "$.superhedge");

    if (root.contains("simulate")) {
        const json& sim = root["simulate"];
        reject_unknown_keys(sim, "$.simulate", {"samples", "kernel_index"});
        if (sim.contains("samples")) config.simulate.samples = require_int(sim, "$.simulate", "samples");
        if (sim.contains("kernel_index"))
            config.simulate.kernel_index = require_int(sim, "$.simulate", "kernel_index");
        if (config.simulate.samples < 1) fail("$.simulate.samples", "must be >= 1");
    }

    if (root.contains("counterexample")) {
        const json& ce = root["counterexample"];
        reject_unknown_keys(ce, "$.counterexample", {"strike"});
        config.counterexample_strike = require_number(ce, "$.counterexample", "strike");
    }
    return config;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

AmbiguitySet make_ambiguity(const ScenarioTree& tree, const AmbiguityConfig& config) {
    if (config.kind == AmbiguityConfig::Kind::Kernels)
        return AmbiguitySet::uniform_kernels(tree, config.kernels);
    if (!config.box) return AmbiguitySet::martingale_polytope(tree);
    std::vector<std::optional<BoxBounds>> boxes(tree.size());
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id)
        if (!tree.node(id).children.empty()) boxes[static_cast<std::size_t>(id)] = config.box;
    return AmbiguitySet::martingale_polytope(tree, std::move(boxes));
}

TerminalClaim make_terminal_payoff(const ScenarioTree& tree, const PayoffSpec& spec) {
    TerminalClaim claim(tree.leaf_count(), 0.0);
    for (NodeId leaf : tree.leaves()) {
        const std::size_t ord = static_cast<std::size_t>(tree.node(leaf).leaf_ordinal);
        const double s = tree.node(leaf).asset;
        switch (spec.kind) {
            case PayoffSpec::Kind::Const:
                claim[ord] = spec.value;
                break;
            case PayoffSpec::Kind::Call:
                claim[ord] = std::max(s - spec.strike, 0.0);
                break;
            case PayoffSpec::Kind::Put:
                claim[ord] = std::max(spec.strike - s, 0.0);
                break;
            case PayoffSpec::Kind::AssetFraction:
                claim[ord] = spec.fraction * s;
                break;
            case PayoffSpec::Kind::LinearInTime:
                throw ConfigError("linear_in_time is an annuity payoff, not a terminal one");
        }
    }
    return claim;
}

Product make_product(const CreditModel& model, const ProductConfig& config) {
    Product product;
    product.kind = config.kind;
    product.name = config.name;
    const ScenarioTree& tree = model.tree;

    switch (config.kind) {
        case Product::Kind::Survival:
            product.survival.payoff = make_terminal_payoff(tree, config.payoff);
            break;
        case Product::Kind::Recovery: {
            product.recovery.value.assign(tree.size(), 0.0);
            for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
                const auto& n = tree.node(id);
                switch (config.payoff.kind) {
                    case PayoffSpec::Kind::Const:
                        product.recovery.value[static_cast<std::size_t>(id)] = config.payoff.value;
                        break;
                    case PayoffSpec::Kind::AssetFraction:
                        product.recovery.value[static_cast<std::size_t>(id)] =
                            config.payoff.fraction * n.asset;
                        break;
                    default:
                        throw ConfigError("recovery payoff must be const or asset_fraction");
                }
            }
            break;
        }
        case Product::Kind::Annuity: {
            product.annuity.cumulative.assign(tree.size(), 0.0);
            for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
                const auto& n = tree.node(id);
                switch (config.payoff.kind) {
                    case PayoffSpec::Kind::LinearInTime:
                        product.annuity.cumulative[static_cast<std::size_t>(id)] =
                            config.payoff.rate * tree.grid().time(n.level);
                        break;
                    default:
                        throw ConfigError("annuity payoff must be linear_in_time");
                }
            }
            break;
        }
    }
    validate_product(model, product);
    return product;
}

}  // namespace robustform
