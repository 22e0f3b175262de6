#pragma once

#include <cstdint>
#include <vector>

#include "robustform/errors.hpp"
#include "robustform/time_grid.hpp"

namespace robustform {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

/// How the default intensity is attached to tree nodes.
struct IntensitySpec {
    enum class Kind { Constant, LevelTable, AffineLogAsset };

    Kind kind = Kind::Constant;
    double value = 0.0;                // Constant
    std::vector<double> per_level;     // LevelTable, one value per level 0..K
    double affine_a = 0.0;             // AffineLogAsset: mu = a + b * ln(S / s0)
    double affine_b = 0.0;

    static IntensitySpec constant(double v) {
        IntensitySpec s;
        s.kind = Kind::Constant;
        s.value = v;
        return s;
    }
    static IntensitySpec level_table(std::vector<double> v) {
        IntensitySpec s;
        s.kind = Kind::LevelTable;
        s.per_level = std::move(v);
        return s;
    }
    static IntensitySpec affine_log_asset(double a, double b) {
        IntensitySpec s;
        s.kind = Kind::AffineLogAsset;
        s.affine_a = a;
        s.affine_b = b;
        return s;
    }
};

/// Everything needed to build a scenario tree deterministically.
/// factors[k] holds the multiplicative asset moves for step k and must have
/// branching[k] entries; branching is limited to [2, 4].
struct TreeConfig {
    std::vector<double> times;                  // K+1 grid times, t0 = 0
    std::vector<int> branching;                 // size K
    double s0 = 100.0;
    std::vector<std::vector<double>> factors;   // size K
    IntensitySpec intensity;
};

struct TreeNode {
    NodeId parent = kNoNode;
    std::vector<NodeId> children;
    int level = 0;
    int branch = 0;          // index of this node among its siblings
    int leaf_ordinal = -1;   // position in the terminal slice, -1 if internal
    double asset = 0.0;      // S, currency
    double intensity = 0.0;  // mu, 1/year, >= 0
};

/// Finite non-recombining event tree. Node ids are dense and level-ordered:
/// a node's id identifies its full path from the root, so every path
/// functional is a function of the terminal node alone.
class ScenarioTree {
public:
    ScenarioTree(TimeGrid grid, std::vector<TreeNode> nodes,
                 std::vector<std::vector<NodeId>> levels);

    const TimeGrid& grid() const { return grid_; }
    int steps() const { return grid_.steps(); }

    NodeId root() const { return 0; }
    std::size_t size() const { return nodes_.size(); }
    const TreeNode& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const std::vector<NodeId>& level_nodes(int k) const {
        return levels_[static_cast<std::size_t>(k)];
    }
    const std::vector<NodeId>& leaves() const { return levels_.back(); }
    std::size_t leaf_count() const { return leaves().size(); }
    bool is_leaf(NodeId id) const { return node(id).leaf_ordinal >= 0; }

    /// Ancestor of `id` at `level` (walks parents; `id` itself if levels match).
    NodeId ancestor_at(NodeId id, int level) const;

    /// Node ids along the root -> leaf path, one per level.
    std::vector<NodeId> path(NodeId leaf) const;

private:
    TimeGrid grid_;
    std::vector<TreeNode> nodes_;
    std::vector<std::vector<NodeId>> levels_;
};

/// Deterministic construction from a validated config.
/// Throws ConfigError on a non-increasing grid, branching outside [2,4],
/// nonpositive asset factors or negative intensities.
ScenarioTree build_tree(const TreeConfig& config);

}  // namespace robustform
