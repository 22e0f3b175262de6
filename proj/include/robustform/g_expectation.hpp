#pragma once

#include <vector>

#include "robustform/default_model.hpp"
#include "robustform/f_expectation.hpp"

namespace robustform {

/// Payoff of a defaultable claim written as phi(default bucket, leaf):
/// one leaf field per bucket 0..K-1 plus one for survival past the horizon.
/// Two claims inducing the same payoff on the product space have identical
/// tables, so the representation is unique by construction.
struct MarkedClaim {
    std::vector<std::vector<double>> by_bucket;  // [K][leaf]
    std::vector<double> survival;                // [leaf]
    bool nonnegative = false;

    int buckets() const { return static_cast<int>(by_bucket.size()); }

    double value(int bucket, std::size_t leaf_ordinal) const {
        return bucket < 0 ? survival[leaf_ordinal]
                          : by_bucket[static_cast<std::size_t>(bucket)][leaf_ordinal];
    }

    /// All-zero claim of matching shape.
    static MarkedClaim zeros(int num_buckets, std::size_t leaves);

    /// Claim that ignores the default bucket entirely.
    static MarkedClaim from_terminal(int num_buckets, const TerminalClaim& x);

    void validate(const CreditModel& model) const;
    bool check_nonnegative() const;
};

/// One value per node of the enlarged tree.
using GValueField = std::vector<double>;

/// Expectation of the claim over the default threshold only, restricted to
/// defaults after time index from_t, along the path of `leaf`:
/// sum of phi(k, leaf) * w_k for k >= from_t plus phi(survival) * w_surv.
double hat_expectation(const CreditModel& model, const MarkedClaim& claim, NodeId leaf,
                       int from_t);

/// Sublinear conditional expectation of a marked claim on the enlarged tree,
/// at time index t. Defaulted statuses carry the reference-tree expectation
/// of their frozen mark; alive statuses carry exp(gamma) times the
/// expectation of the threshold-integrated tail. Only the time-t slice of
/// the returned field is populated.
GValueField g_conditional(const CreditModel& model, const AmbiguitySet& ambiguity,
                          const MarkedClaim& claim, int t);

/// Same operator evaluated through the enlarged tree's one-step masses:
/// survival/default factors are accumulated stepwise along each path instead
/// of through hazard exponentials, one backward pass per evaluation time.
/// Populates every (node, status, t).
GValueField g_conditional_via_gtree(const CreditModel& model, const AmbiguitySet& ambiguity,
                                    const MarkedClaim& claim);

/// Per-node gap E~_s(E~_t(claim)) - E~_s(claim) on the time-s slice.
/// Nonnegative (up to roundoff) for nonnegative claims; strictly positive
/// gaps witness the failure of the classic tower property.
GValueField weak_tower_gap(const CreditModel& model, const AmbiguitySet& ambiguity,
                           const MarkedClaim& claim, int s, int t);

/// Re-marking of the time-t conditional value as a claim of its own: buckets
/// before t keep their frozen defaulted value, later buckets and survival
/// share the alive value. Used by the weak tower evaluation and the product
/// tower checks.
MarkedClaim remark_at(const CreditModel& model, const AmbiguitySet& ambiguity,
                      const MarkedClaim& claim, int t);

struct CounterexampleResult {
    MarkedClaim claim;
    int s = 0, r = 0, t = 0, l = 0;
    NodeId witness = kNoNode;          // time-t node with strict sublinearity
    double sublinearity_gap = 0.0;     // E_t(X) + E_t(Y) - E_t(X+Y) at witness
    double max_tower_gap = 0.0;        // max over time-s alive nodes
    GValueField gap_field;             // weak_tower_gap at s
};

/// Builds the explicit claim for which the classic tower property fails:
/// X = call and Y = put on the terminal asset, scaled by hazard factors and
/// attached to disjoint default events. Requires a constant intensity > 0
/// and kernels whose argmax differs between X and Y somewhere; throws
/// NumericalError("no sublinearity available") otherwise.
CounterexampleResult build_counterexample(const CreditModel& model,
                                          const AmbiguitySet& ambiguity, double strike);

/// Max over time-t nodes of |E_t(Ehat[1{tau>s} X]) - Ehat[E_t(1{tau>s} X)]|,
/// the commutation of the sup with the threshold integral. A zero gap
/// certifies the classic tower property for the claim.
double check_yan_commutation(const CreditModel& model, const AmbiguitySet& ambiguity,
                             const MarkedClaim& claim, int s, int t);

}  // namespace robustform
