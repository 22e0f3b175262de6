#pragma once

#include <vector>

#include "robustform/ambiguity.hpp"
#include "robustform/scenario_tree.hpp"

namespace robustform {

/// One real value per tree node (payoff currency).
using ValueField = std::vector<double>;

/// One real value per leaf, indexed by leaf ordinal.
using TerminalClaim = std::vector<double>;

/// Backward sup-recursion: V(leaf) = claim, V(node) = max over the node's
/// extreme kernels of the one-step expectation of V. The returned field is
/// the sublinear conditional expectation of the claim at every time slice.
ValueField sublinear_expectation(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                 const TerminalClaim& claim);

/// Same recursion started from an intermediate slice: `slice` holds one value
/// per node of level `t` (in level_nodes(t) order); levels above t are 0.
ValueField sublinear_from_slice(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                int t, const std::vector<double>& slice);

/// Classical backward expectation under a single prior selection.
ValueField conditional_under_prior(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                   const PriorSelection& selection, const TerminalClaim& claim);

/// Greedy argmax kernel per node from the backward pass; ties break to the
/// lowest kernel index. Reproduces sublinear_expectation exactly when fed
/// back through conditional_under_prior.
PriorSelection maximizing_selection(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                    const TerminalClaim& claim);

/// Max over time-s nodes of |E_s(E_t(claim)) - E_s(claim)|; certifies the
/// dynamic-programming consistency of the recursion for s <= t.
double check_tower(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                   const TerminalClaim& claim, int s, int t);

}  // namespace robustform
