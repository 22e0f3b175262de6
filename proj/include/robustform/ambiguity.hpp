#pragma once

#include <optional>
#include <vector>

#include "robustform/scenario_tree.hpp"

namespace robustform {

/// One-step transition law over a node's children.
using Kernel = std::vector<double>;

/// Per-child probability bounds for a martingale polytope node.
struct BoxBounds {
    std::vector<double> lo;
    std::vector<double> hi;
};

/// Per-node family of one-step kernels. Two representations:
///   - FiniteKernels: an explicit list of probability vectors;
///   - MartingalePolytope: every p >= 0 with sum(p) = 1 and
///     sum(p_i * S_child_i) = S_node, optionally boxed to lo <= p <= hi.
/// Polytope nodes are stored through their vertex list (enumerated at
/// construction, lexicographically ordered), so the sup of any linear
/// functional over the family is the max over extreme_kernels().
///
/// Storage is strictly per node: the family at a node never references
/// kernels chosen elsewhere (rectangularity is structural).
class AmbiguitySet {
public:
    enum class Kind { FiniteKernels, MartingalePolytope };

    /// One kernel list per non-terminal node, in level order of the tree.
    static AmbiguitySet finite_kernels(const ScenarioTree& tree,
                                       std::vector<std::vector<Kernel>> kernels_per_node);

    /// The same kernel list at every non-terminal node (sizes must match
    /// the branching, which this constructor checks per node).
    static AmbiguitySet uniform_kernels(const ScenarioTree& tree,
                                        const std::vector<Kernel>& kernels);

    /// Martingale polytope at every non-terminal node; `boxes` may be empty
    /// (no bounds) or hold one entry per non-terminal node.
    static AmbiguitySet martingale_polytope(const ScenarioTree& tree,
                                            std::vector<std::optional<BoxBounds>> boxes = {});

    Kind kind(NodeId node) const { return kinds_[slot(node)]; }
    bool all_polytope() const;
    bool any_box() const;

    /// Extreme kernels at a node: the finite list, or the polytope vertices.
    const std::vector<Kernel>& extreme_kernels(NodeId node) const {
        return kernels_[slot(node)];
    }

    /// Children a kernel in the family can reach with positive mass.
    const std::vector<int>& support(NodeId node) const { return support_[slot(node)]; }

    std::size_t tree_size() const { return kinds_.size(); }

private:
    AmbiguitySet() = default;
    std::size_t slot(NodeId node) const { return static_cast<std::size_t>(node); }

    std::vector<Kind> kinds_;                 // per node (leaves unused)
    std::vector<std::vector<Kernel>> kernels_;
    std::vector<std::vector<int>> support_;
    bool boxed_ = false;
};

/// Vertices of {p >= 0, sum p = 1, sum p_i S_i = s0, lo <= p <= hi} in
/// lexicographic order. Throws NumericalError when the polytope is empty.
std::vector<Kernel> enumerate_martingale_vertices(const std::vector<double>& child_assets,
                                                  double parent_asset,
                                                  const std::optional<BoxBounds>& box);

/// polytope_vertices: vertex list of the node's martingale polytope.
/// Requires the node to use the MartingalePolytope representation.
const std::vector<Kernel>& polytope_vertices(NodeId node, const AmbiguitySet& ambiguity);

struct MartingaleReport {
    double max_error = 0.0;  // max over nodes/kernels of |sum p_i S_i - S_node|
    bool ok = true;          // true iff max_error <= 1e-10
};

/// Reports how far the per-node kernels are from the one-step martingale
/// property of the asset. Polytope nodes pass by construction.
MartingaleReport validate_martingale(const ScenarioTree& tree, const AmbiguitySet& ambiguity);

/// One chosen kernel per non-terminal node, stored as an index into that
/// node's extreme_kernels() list.
struct PriorSelection {
    std::vector<int> kernel_index;  // per node id; -1 at leaves

    const Kernel& kernel(const AmbiguitySet& ambiguity, NodeId node) const {
        return ambiguity.extreme_kernels(node)[static_cast<std::size_t>(
            kernel_index[static_cast<std::size_t>(node)])];
    }
};

}  // namespace robustform
