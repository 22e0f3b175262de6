#include "robustform/scenario_tree.hpp"

#include <cmath>
#include <string>

namespace robustform {

ScenarioTree::ScenarioTree(TimeGrid grid, std::vector<TreeNode> nodes,
                           std::vector<std::vector<NodeId>> levels)
    : grid_(std::move(grid)), nodes_(std::move(nodes)), levels_(std::move(levels)) {}

NodeId ScenarioTree::ancestor_at(NodeId id, int level) const {
    NodeId cur = id;
    while (node(cur).level > level) cur = node(cur).parent;
    if (node(cur).level != level)
        throw std::invalid_argument("ancestor_at: node is above the requested level");
    return cur;
}

std::vector<NodeId> ScenarioTree::path(NodeId leaf) const {
    std::vector<NodeId> out(static_cast<std::size_t>(node(leaf).level) + 1);
    NodeId cur = leaf;
    for (int k = node(leaf).level; k >= 0; --k) {
        out[static_cast<std::size_t>(k)] = cur;
        cur = node(cur).parent;
    }
    return out;
}

namespace {

double intensity_at(const IntensitySpec& spec, int level, double asset, double s0) {
    switch (spec.kind) {
        case IntensitySpec::Kind::Constant:
            return spec.value;
        case IntensitySpec::Kind::LevelTable:
            if (static_cast<std::size_t>(level) >= spec.per_level.size())
                throw ConfigError("intensity table too short for level " + std::to_string(level));
            return spec.per_level[static_cast<std::size_t>(level)];
        case IntensitySpec::Kind::AffineLogAsset:
            return spec.affine_a + spec.affine_b * std::log(asset / s0);
    }
    throw ConfigError("unknown intensity kind");
}

}  // namespace

ScenarioTree build_tree(const TreeConfig& config) {
    TimeGrid grid(config.times);  // validates monotone times
    const int K = grid.steps();

    if (static_cast<int>(config.branching.size()) != K)
        throw ConfigError("branching must have one entry per step");
    if (static_cast<int>(config.factors.size()) != K)
        throw ConfigError("factors must have one entry per step");
    if (config.s0 <= 0.0) throw ConfigError("s0 must be positive");

    for (int k = 0; k < K; ++k) {
        const int b = config.branching[static_cast<std::size_t>(k)];
        if (b < 2 || b > 4)
            throw ConfigError("branching must lie in [2,4] at step " + std::to_string(k));
        const auto& f = config.factors[static_cast<std::size_t>(k)];
        if (static_cast<int>(f.size()) != b)
            throw ConfigError("factors/branching mismatch at step " + std::to_string(k));
        for (double x : f)
            if (x <= 0.0) throw ConfigError("asset factors must be positive");
    }

    std::vector<TreeNode> nodes;
    std::vector<std::vector<NodeId>> levels(static_cast<std::size_t>(K) + 1);

    TreeNode root;
    root.level = 0;
    root.asset = config.s0;
    nodes.push_back(root);
    levels[0].push_back(0);

    for (int k = 0; k < K; ++k) {
        const auto& f = config.factors[static_cast<std::size_t>(k)];
        for (NodeId pid : levels[static_cast<std::size_t>(k)]) {
            for (int j = 0; j < static_cast<int>(f.size()); ++j) {
                TreeNode child;
                child.parent = pid;
                child.level = k + 1;
                child.branch = j;
                child.asset = nodes[static_cast<std::size_t>(pid)].asset *
                              f[static_cast<std::size_t>(j)];
                const NodeId cid = static_cast<NodeId>(nodes.size());
                nodes.push_back(child);
                nodes[static_cast<std::size_t>(pid)].children.push_back(cid);
                levels[static_cast<std::size_t>(k) + 1].push_back(cid);
            }
        }
    }

    for (auto& n : nodes) {
        n.intensity = intensity_at(config.intensity, n.level, n.asset, config.s0);
        if (n.intensity < 0.0)
            throw ConfigError("intensity must be nonnegative at every node");
    }

    auto& leaf_level = levels[static_cast<std::size_t>(K)];
    for (std::size_t i = 0; i < leaf_level.size(); ++i)
        nodes[static_cast<std::size_t>(leaf_level[i])].leaf_ordinal = static_cast<int>(i);

    return ScenarioTree(std::move(grid), std::move(nodes), std::move(levels));
}

}  // namespace robustform
