#include "robustform/f_expectation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "robustform/errors.hpp"

namespace robustform {

namespace {

void check_finite(const TerminalClaim& claim, std::size_t leaves) {
    if (claim.size() != leaves)
        throw ConfigError("claim must have one value per leaf");
    for (double v : claim)
        if (!std::isfinite(v)) throw ConfigError("claim values must be finite");
}

double one_step(const Kernel& kernel, const std::vector<NodeId>& children,
                const ValueField& field) {
    double e = 0.0;
    for (std::size_t i = 0; i < children.size(); ++i)
        e += kernel[i] * field[static_cast<std::size_t>(children[i])];
    return e;
}

}  // namespace

ValueField sublinear_from_slice(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                int t, const std::vector<double>& slice) {
    const auto& slice_nodes = tree.level_nodes(t);
    if (slice.size() != slice_nodes.size())
        throw ConfigError("slice must have one value per level-" + std::to_string(t) + " node");

    ValueField field(tree.size(), 0.0);
    for (std::size_t i = 0; i < slice_nodes.size(); ++i)
        field[static_cast<std::size_t>(slice_nodes[i])] = slice[i];

    for (int k = t - 1; k >= 0; --k) {
        for (NodeId id : tree.level_nodes(k)) {
            const auto& children = tree.node(id).children;
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& kernel : ambiguity.extreme_kernels(id))
                best = std::max(best, one_step(kernel, children, field));
            field[static_cast<std::size_t>(id)] = best;
        }
    }
    return field;
}

ValueField sublinear_expectation(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                 const TerminalClaim& claim) {
    check_finite(claim, tree.leaf_count());
    return sublinear_from_slice(tree, ambiguity, tree.steps(), claim);
}

ValueField conditional_under_prior(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                   const PriorSelection& selection, const TerminalClaim& claim) {
    check_finite(claim, tree.leaf_count());
    if (selection.kernel_index.size() != tree.size())
        throw ConfigError("prior selection must cover every node");

    ValueField field(tree.size(), 0.0);
    for (NodeId leaf : tree.leaves())
        field[static_cast<std::size_t>(leaf)] =
            claim[static_cast<std::size_t>(tree.node(leaf).leaf_ordinal)];

    for (int k = tree.steps() - 1; k >= 0; --k)
        for (NodeId id : tree.level_nodes(k))
            field[static_cast<std::size_t>(id)] =
                one_step(selection.kernel(ambiguity, id), tree.node(id).children, field);
    return field;
}

PriorSelection maximizing_selection(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                    const TerminalClaim& claim) {
    check_finite(claim, tree.leaf_count());

    PriorSelection selection;
    selection.kernel_index.assign(tree.size(), -1);

    ValueField field(tree.size(), 0.0);
    for (NodeId leaf : tree.leaves())
        field[static_cast<std::size_t>(leaf)] =
            claim[static_cast<std::size_t>(tree.node(leaf).leaf_ordinal)];

    for (int k = tree.steps() - 1; k >= 0; --k) {
        for (NodeId id : tree.level_nodes(k)) {
            const auto& kernels = ambiguity.extreme_kernels(id);
            double best = -std::numeric_limits<double>::infinity();
            int best_index = 0;
            for (std::size_t i = 0; i < kernels.size(); ++i) {
                const double e = one_step(kernels[i], tree.node(id).children, field);
                if (e > best) {
                    best = e;
                    best_index = static_cast<int>(i);
                }
            }
            field[static_cast<std::size_t>(id)] = best;
            selection.kernel_index[static_cast<std::size_t>(id)] = best_index;
        }
    }
    return selection;
}

double check_tower(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                   const TerminalClaim& claim, int s, int t) {
    if (s > t) throw ConfigError("check_tower: requires s <= t");

    const ValueField direct = sublinear_expectation(tree, ambiguity, claim);

    const auto& t_nodes = tree.level_nodes(t);
    std::vector<double> inner(t_nodes.size());
    for (std::size_t i = 0; i < t_nodes.size(); ++i)
        inner[i] = direct[static_cast<std::size_t>(t_nodes[i])];

    const ValueField nested = sublinear_from_slice(tree, ambiguity, t, inner);

    double gap = 0.0;
    for (NodeId id : tree.level_nodes(s))
        gap = std::max(gap, std::abs(nested[static_cast<std::size_t>(id)] -
                                     direct[static_cast<std::size_t>(id)]));
    return gap;
}

}  // namespace robustform
