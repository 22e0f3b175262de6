#include "robustform/default_model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "robustform/errors.hpp"

namespace robustform {

HazardField build_hazard(const ScenarioTree& tree) {
    HazardField h;
    h.gamma.assign(tree.size(), 0.0);
    for (int k = 0; k < tree.steps(); ++k) {
        const double dt = tree.grid().step(k);
        for (NodeId id : tree.level_nodes(k)) {
            const auto& n = tree.node(id);
            const double child_gamma = h.gamma[static_cast<std::size_t>(id)] + n.intensity * dt;
            for (NodeId c : n.children) h.gamma[static_cast<std::size_t>(c)] = child_gamma;
        }
    }
    return h;
}

BucketLaw bucket_weights(const ScenarioTree& tree, NodeId leaf, const HazardField& hazard) {
    if (!tree.is_leaf(leaf)) throw ConfigError("bucket_weights: node is not a leaf");
    const auto path = tree.path(leaf);
    const int K = tree.steps();
    BucketLaw law;
    law.bucket.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const double a = std::exp(-hazard.at(path[static_cast<std::size_t>(k)]));
        const double b = std::exp(-hazard.at(path[static_cast<std::size_t>(k) + 1]));
        law.bucket[static_cast<std::size_t>(k)] = a - b;
    }
    law.survival = std::exp(-hazard.at(leaf));
    return law;
}

DefaultDraw sample_default(const ScenarioTree& tree, NodeId leaf, const HazardField& hazard,
                           double xi) {
    if (!(xi >= 0.0 && xi < 1.0)) throw ConfigError("sample_default: xi must lie in [0,1)");
    const auto path = tree.path(leaf);
    DefaultDraw draw;
    if (xi < std::exp(-hazard.at(leaf))) {
        draw.survived = true;
        return draw;
    }
    for (int k = 0; k < tree.steps(); ++k) {
        const double upper = std::exp(-hazard.at(path[static_cast<std::size_t>(k)]));
        const double lower = std::exp(-hazard.at(path[static_cast<std::size_t>(k) + 1]));
        if (lower <= xi && xi < upper) {
            draw.bucket = k;
            return draw;
        }
    }
    // xi >= exp(-gamma(t_K)) guarantees some bucket matched above.
    throw NumericalError("sample_default: no bucket matched");
}

namespace {

// Classical leaf probabilities of the subtree under one prior selection.
void subtree_leaf_probs(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                        const std::vector<int>& selection, NodeId top, double mass,
                        std::vector<std::pair<NodeId, double>>& out) {
    const auto& n = tree.node(top);
    if (n.children.empty()) {
        out.emplace_back(top, mass);
        return;
    }
    const auto& kernel =
        ambiguity.extreme_kernels(top)[static_cast<std::size_t>(selection[static_cast<std::size_t>(top)])];
    for (std::size_t i = 0; i < n.children.size(); ++i)
        if (kernel[i] > 0.0)
            subtree_leaf_probs(tree, ambiguity, selection, n.children[i], mass * kernel[i], out);
}

}  // namespace

double verify_hazard_aggregation(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                 const HazardField& hazard) {
    // Enumerate selections when few, otherwise sample with a fixed seed.
    std::size_t total = 1;
    bool overflow = false;
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()) && !overflow; ++id) {
        if (tree.node(id).children.empty()) continue;
        total *= ambiguity.extreme_kernels(id).size();
        if (total > 64) overflow = true;
    }

    std::vector<std::vector<int>> selections;
    if (!overflow) {
        selections.assign(1, std::vector<int>(tree.size(), 0));
        for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
            if (tree.node(id).children.empty()) continue;
            const std::size_t count = ambiguity.extreme_kernels(id).size();
            if (count == 1) continue;
            std::vector<std::vector<int>> expanded;
            expanded.reserve(selections.size() * count);
            for (const auto& sel : selections)
                for (std::size_t i = 0; i < count; ++i) {
                    expanded.push_back(sel);
                    expanded.back()[static_cast<std::size_t>(id)] = static_cast<int>(i);
                }
            selections = std::move(expanded);
        }
    } else {
        std::mt19937_64 rng(7u);
        for (int draw = 0; draw < 64; ++draw) {
            std::vector<int> sel(tree.size(), 0);
            for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
                if (tree.node(id).children.empty()) continue;
                const std::size_t count = ambiguity.extreme_kernels(id).size();
                sel[static_cast<std::size_t>(id)] =
                    static_cast<int>(rng() % static_cast<std::uint64_t>(count));
            }
            selections.push_back(std::move(sel));
        }
    }

    double max_error = 0.0;
    std::vector<std::pair<NodeId, double>> leaf_probs;
    for (const auto& sel : selections) {
        for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
            const int k = tree.node(id).level;
            leaf_probs.clear();
            subtree_leaf_probs(tree, ambiguity, sel, id, 1.0, leaf_probs);
            double survival_to_node = 0.0;
            for (const auto& [leaf, p] : leaf_probs) {
                const BucketLaw law = bucket_weights(tree, leaf, hazard);
                double tail = law.survival;
                for (int j = k; j < tree.steps(); ++j)
                    tail += law.bucket[static_cast<std::size_t>(j)];
                survival_to_node += p * tail;
            }
            max_error =
                std::max(max_error, std::abs(survival_to_node - std::exp(-hazard.at(id))));
        }
    }
    return max_error;
}

GTree::GTree(const ScenarioTree& tree, const HazardField& hazard) {
    (void)hazard;  // the enlarged tree only needs the one-step factors
    const int K = tree.steps();
    levels_.resize(static_cast<std::size_t>(K) + 1);
    block_.assign(tree.size(), -1);
    f_level_.assign(tree.size(), 0);
    survive_.assign(tree.size(), 1.0);

    for (int k = 0; k <= K; ++k) {
        for (NodeId id : tree.level_nodes(k)) {
            f_level_[static_cast<std::size_t>(id)] = k;
            block_[static_cast<std::size_t>(id)] = static_cast<GNodeId>(nodes_.size());
            // Status order inside a block: alive, then defaulted buckets 0..k-1.
            for (int status = kAlive; status < k; ++status) {
                GNode g;
                g.f_node = id;
                g.status = status;
                g.level = k;
                nodes_.push_back(std::move(g));
                levels_[static_cast<std::size_t>(k)].push_back(
                    static_cast<GNodeId>(nodes_.size() - 1));
            }
            if (k < K) {
                const double dt = tree.grid().step(k);
                survive_[static_cast<std::size_t>(id)] =
                    std::exp(-tree.node(id).intensity * dt);
            }
        }
    }

    // Wire children: alive -> (child alive, child defaulted-now); defaulted
    // statuses propagate unchanged (absorbing, frozen bucket).
    for (std::size_t gid = 0; gid < nodes_.size(); ++gid) {
        GNode& g = nodes_[gid];
        const auto& fn = tree.node(g.f_node);
        if (fn.children.empty()) continue;
        for (NodeId c : fn.children) {
            if (g.status == kAlive) {
                const GNodeId ca = id_of(c, kAlive);
                const GNodeId cd = id_of(c, g.level);  // default in bucket = current step
                g.children.push_back(ca);
                g.children.push_back(cd);
                nodes_[static_cast<std::size_t>(ca)].parent = static_cast<GNodeId>(gid);
                nodes_[static_cast<std::size_t>(cd)].parent = static_cast<GNodeId>(gid);
            } else {
                const GNodeId cd = id_of(c, g.status);
                g.children.push_back(cd);
                nodes_[static_cast<std::size_t>(cd)].parent = static_cast<GNodeId>(gid);
            }
        }
    }
}

GNodeId GTree::id_of(NodeId f_node, int status) const {
    const int level = f_level_[static_cast<std::size_t>(f_node)];
    if (status != kAlive && (status < 0 || status >= level))
        throw ConfigError("GTree: status " + std::to_string(status) +
                          " does not exist at level " + std::to_string(level));
    const GNodeId base = block_[static_cast<std::size_t>(f_node)];
    return status == kAlive ? base : base + 1 + static_cast<GNodeId>(status);
}

}  // namespace robustform
