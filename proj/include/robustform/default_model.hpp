#pragma once

#include <cstdint>
#include <vector>

#include "robustform/ambiguity.hpp"
#include "robustform/scenario_tree.hpp"

namespace robustform {

/// Accumulated hazard per node: gamma(root) = 0 and
/// gamma(child) = gamma(node) + mu(node) * dt_k (left-endpoint sum, so the
/// one-step survival factor is known at the start of the interval).
struct HazardField {
    std::vector<double> gamma;  // per node, nondecreasing along every path
    double at(NodeId id) const { return gamma[static_cast<std::size_t>(id)]; }
};

HazardField build_hazard(const ScenarioTree& tree);

/// Law of the default bucket along one full path: weight of bucket k is
/// exp(-gamma(t_k)) - exp(-gamma(t_{k+1})), survival weight exp(-gamma(t_K)).
struct BucketLaw {
    std::vector<double> bucket;  // size K
    double survival = 0.0;
};

BucketLaw bucket_weights(const ScenarioTree& tree, NodeId leaf, const HazardField& hazard);

/// Outcome of threshold sampling: the bucket containing the default time, or
/// survival past the horizon.
struct DefaultDraw {
    bool survived = false;
    int bucket = -1;
};

/// Default bucket along `leaf`'s path for threshold xi in [0,1):
/// bucket k iff exp(-gamma(t_{k+1})) <= xi < exp(-gamma(t_k)), survival iff
/// xi < exp(-gamma(t_K)).
DefaultDraw sample_default(const ScenarioTree& tree, NodeId leaf, const HazardField& hazard,
                           double xi);

/// Max over enumerated/sampled prior selections and nodes of the difference
/// between the subtree-aggregated survival probability and exp(-gamma(node)).
double verify_hazard_aggregation(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                 const HazardField& hazard);

using GNodeId = std::int32_t;
inline constexpr int kAlive = -1;

/// Node of the progressively enlarged tree: a reference-tree node paired
/// with a default status. status == kAlive, or the frozen bucket index.
struct GNode {
    NodeId f_node = kNoNode;
    int status = kAlive;
    int level = 0;
    GNodeId parent = -1;
    std::vector<GNodeId> children;
};

/// Scenario tree enlarged by the default indicator. From an alive node the
/// one-step mass splits each reference kernel weight kappa(c) into
/// kappa(c) * s (stay alive) and kappa(c) * (1 - s) (default in the current
/// bucket), with s = exp(-mu(node) * dt). Defaulted statuses are absorbing.
class GTree {
public:
    GTree(const ScenarioTree& tree, const HazardField& hazard);

    std::size_t size() const { return nodes_.size(); }
    const GNode& node(GNodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const std::vector<GNodeId>& level_nodes(int k) const {
        return levels_[static_cast<std::size_t>(k)];
    }

    /// Id of (f_node, status); status must exist at the node's level.
    GNodeId id_of(NodeId f_node, int status) const;
    GNodeId alive_id(NodeId f_node) const { return id_of(f_node, kAlive); }

    /// One-step survival factor exp(-mu(f_node) * dt) of a non-terminal node.
    double survive_factor(NodeId f_node) const {
        return survive_[static_cast<std::size_t>(f_node)];
    }

private:
    std::vector<GNode> nodes_;
    std::vector<std::vector<GNodeId>> levels_;
    std::vector<GNodeId> block_;     // first g-node id per reference node
    std::vector<int> f_level_;       // level per reference node
    std::vector<double> survive_;    // per reference node
};

inline GTree extend_tree(const ScenarioTree& tree, const HazardField& hazard) {
    return GTree(tree, hazard);
}

/// Reference tree plus its hazard field and enlarged tree, built once.
struct CreditModel {
    ScenarioTree tree;
    HazardField hazard;
    GTree gtree;

    static CreditModel build(ScenarioTree t) {
        HazardField h = build_hazard(t);
        GTree g(t, h);
        return CreditModel{std::move(t), std::move(h), std::move(g)};
    }
};

}  // namespace robustform
