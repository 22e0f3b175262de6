#pragma once

#include <cstddef>
#include <vector>

#include "robustform/g_expectation.hpp"
#include "robustform/superhedging.hpp"

namespace robustform {

/// Every rectangular prior selection (one extreme kernel per non-terminal
/// node). Enumerated eagerly; construction refuses above the cap.
struct PriorEnumeration {
    std::vector<PriorSelection> selections;

    static PriorEnumeration enumerate(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                      std::size_t cap = 1000000);
    std::size_t count() const { return selections.size(); }
};

/// Ground truth for the reference-filtration operator: max over enumerated
/// priors of the classical conditional expectation, evaluated by forward
/// path sums (no shared recursion with the engine). Returns the values at
/// the time-t nodes (level order).
std::vector<double> brute_expectation(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                      const TerminalClaim& claim, int t,
                                      std::size_t cap = 1000000);

/// Ground truth for the enlarged-filtration operator: per (node, status) at
/// time t, max over enumerated priors of the forward sum over (leaf, bucket)
/// scenarios with exact threshold masses.
GValueField brute_g_expectation(const CreditModel& model, const AmbiguitySet& ambiguity,
                                const MarkedClaim& claim, int t, std::size_t cap = 1000000);

/// Minimal superhedging capital at the root by linear programming over all
/// (path, stopping date) constraints; exact up to simplex roundoff.
/// Refuses markets deeper than 5 steps.
double brute_superhedge(const Market& market, const MarketStream& stream,
                        const StoppingRule& sigma, const StoppingRule& tau);

/// Dense two-phase simplex for min c.x subject to A x >= b, x free.
/// Returns the optimal objective; throws NumericalError when infeasible or
/// unbounded. Exposed for the oracle's tests.
double solve_linear_program(const std::vector<std::vector<double>>& a,
                            const std::vector<double>& b, const std::vector<double>& c);

}  // namespace robustform
