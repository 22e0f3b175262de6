#include "robustform/g_expectation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "robustform/errors.hpp"

namespace robustform {

MarkedClaim MarkedClaim::zeros(int num_buckets, std::size_t leaves) {
    MarkedClaim c;
    c.by_bucket.assign(static_cast<std::size_t>(num_buckets), std::vector<double>(leaves, 0.0));
    c.survival.assign(leaves, 0.0);
    c.nonnegative = true;
    return c;
}

MarkedClaim MarkedClaim::from_terminal(int num_buckets, const TerminalClaim& x) {
    MarkedClaim c;
    c.by_bucket.assign(static_cast<std::size_t>(num_buckets), x);
    c.survival = x;
    c.nonnegative = true;
    for (double v : x)
        if (v < 0.0) c.nonnegative = false;
    return c;
}

void MarkedClaim::validate(const CreditModel& model) const {
    const std::size_t leaves = model.tree.leaf_count();
    if (buckets() != model.tree.steps())
        throw ConfigError("marked claim must have one bucket field per step");
    if (survival.size() != leaves)
        throw ConfigError("marked claim survival field has wrong size");
    for (const auto& field : by_bucket)
        if (field.size() != leaves) throw ConfigError("marked claim bucket field has wrong size");
    for (const auto& field : by_bucket)
        for (double v : field)
            if (!std::isfinite(v)) throw ConfigError("marked claim values must be finite");
    for (double v : survival)
        if (!std::isfinite(v)) throw ConfigError("marked claim values must be finite");
}

bool MarkedClaim::check_nonnegative() const {
    for (const auto& field : by_bucket)
        for (double v : field)
            if (v < 0.0) return false;
    for (double v : survival)
        if (v < 0.0) return false;
    return true;
}

double hat_expectation(const CreditModel& model, const MarkedClaim& claim, NodeId leaf,
                       int from_t) {
    const BucketLaw law = bucket_weights(model.tree, leaf, model.hazard);
    const std::size_t ord = static_cast<std::size_t>(model.tree.node(leaf).leaf_ordinal);
    double value = claim.survival[ord] * law.survival;
    for (int k = from_t; k < claim.buckets(); ++k)
        value += claim.value(k, ord) * law.bucket[static_cast<std::size_t>(k)];
    return value;
}

namespace {

// Reference-tree expectation fields of each frozen bucket mark.
std::vector<ValueField> defaulted_fields(const CreditModel& model, const AmbiguitySet& ambiguity,
                                         const MarkedClaim& claim, int up_to_bucket) {
    std::vector<ValueField> out;
    out.reserve(static_cast<std::size_t>(up_to_bucket));
    for (int j = 0; j < up_to_bucket; ++j)
        out.push_back(sublinear_expectation(model.tree, ambiguity,
                                            claim.by_bucket[static_cast<std::size_t>(j)]));
    return out;
}

// Alive values at time t through the hazard-exponential route:
// exp(gamma(n)) * E_n of the integrated tail field.
ValueField alive_values_at(const CreditModel& model, const AmbiguitySet& ambiguity,
                           const MarkedClaim& claim, int t) {
    const std::size_t leaves = model.tree.leaf_count();
    TerminalClaim tail(leaves);
    for (NodeId leaf : model.tree.leaves())
        tail[static_cast<std::size_t>(model.tree.node(leaf).leaf_ordinal)] =
            hat_expectation(model, claim, leaf, t);
    ValueField dp = sublinear_expectation(model.tree, ambiguity, tail);
    ValueField out(model.tree.size(), 0.0);
    for (NodeId n : model.tree.level_nodes(t))
        out[static_cast<std::size_t>(n)] =
            std::exp(model.hazard.at(n)) * dp[static_cast<std::size_t>(n)];
    return out;
}

}  // namespace

GValueField g_conditional(const CreditModel& model, const AmbiguitySet& ambiguity,
                          const MarkedClaim& claim, int t) {
    claim.validate(model);
    if (t < 0 || t > model.tree.steps())
        throw ConfigError("g_conditional: time index out of range");

    GValueField field(model.gtree.size(), 0.0);

    const auto frozen = defaulted_fields(model, ambiguity, claim, t);
    const ValueField alive = alive_values_at(model, ambiguity, claim, t);

    for (NodeId n : model.tree.level_nodes(t)) {
        field[static_cast<std::size_t>(model.gtree.alive_id(n))] =
            alive[static_cast<std::size_t>(n)];
        for (int j = 0; j < t; ++j)
            field[static_cast<std::size_t>(model.gtree.id_of(n, j))] =
                frozen[static_cast<std::size_t>(j)][static_cast<std::size_t>(n)];
    }
    return field;
}

GValueField g_conditional_via_gtree(const CreditModel& model, const AmbiguitySet& ambiguity,
                                    const MarkedClaim& claim) {
    claim.validate(model);
    const int K = model.tree.steps();
    const std::size_t leaves = model.tree.leaf_count();

    GValueField field(model.gtree.size(), 0.0);

    // Defaulted statuses: frozen mark, plain sup-recursion per bucket.
    const auto frozen = defaulted_fields(model, ambiguity, claim, K);
    for (int t = 1; t <= K; ++t)
        for (NodeId n : model.tree.level_nodes(t))
            for (int j = 0; j < t; ++j)
                field[static_cast<std::size_t>(model.gtree.id_of(n, j))] =
                    frozen[static_cast<std::size_t>(j)][static_cast<std::size_t>(n)];

    // Alive statuses: aggregate the default scenarios with the stepwise
    // one-step masses of the enlarged tree, then run one sup-recursion per
    // evaluation time. There is no single backward pass across t: the
    // operator is only weakly time-consistent on the enlarged filtration.
    std::vector<std::vector<NodeId>> paths(leaves);
    for (NodeId leaf : model.tree.leaves())
        paths[static_cast<std::size_t>(model.tree.node(leaf).leaf_ordinal)] =
            model.tree.path(leaf);

    std::vector<double> aggregated(leaves);
    for (std::size_t i = 0; i < leaves; ++i) aggregated[i] = claim.survival[i];
    {
        // t = K: an alive terminal node pays the survival mark.
        for (NodeId n : model.tree.level_nodes(K))
            field[static_cast<std::size_t>(model.gtree.alive_id(n))] =
                claim.survival[static_cast<std::size_t>(model.tree.node(n).leaf_ordinal)];
    }
    for (int t = K - 1; t >= 0; --t) {
        for (std::size_t i = 0; i < leaves; ++i) {
            const NodeId step_node = paths[i][static_cast<std::size_t>(t)];
            const double s = model.gtree.survive_factor(step_node);
            aggregated[i] = (1.0 - s) * claim.value(t, i) + s * aggregated[i];
        }
        const ValueField dp = sublinear_expectation(model.tree, ambiguity, aggregated);
        for (NodeId n : model.tree.level_nodes(t))
            field[static_cast<std::size_t>(model.gtree.alive_id(n))] =
                dp[static_cast<std::size_t>(n)];
    }
    return field;
}

MarkedClaim remark_at(const CreditModel& model, const AmbiguitySet& ambiguity,
                      const MarkedClaim& claim, int t) {
    claim.validate(model);
    const int K = model.tree.steps();
    const std::size_t leaves = model.tree.leaf_count();

    const auto frozen = defaulted_fields(model, ambiguity, claim, t);
    const ValueField alive = alive_values_at(model, ambiguity, claim, t);

    MarkedClaim out = MarkedClaim::zeros(K, leaves);
    for (NodeId leaf : model.tree.leaves()) {
        const std::size_t ord = static_cast<std::size_t>(model.tree.node(leaf).leaf_ordinal);
        const NodeId anc = model.tree.ancestor_at(leaf, t);
        const double alive_value = alive[static_cast<std::size_t>(anc)];
        for (int j = 0; j < K; ++j)
            out.by_bucket[static_cast<std::size_t>(j)][ord] =
                j < t ? frozen[static_cast<std::size_t>(j)][static_cast<std::size_t>(anc)]
                      : alive_value;
        out.survival[ord] = alive_value;
    }
    out.nonnegative = claim.nonnegative;
    return out;
}

GValueField weak_tower_gap(const CreditModel& model, const AmbiguitySet& ambiguity,
                           const MarkedClaim& claim, int s, int t) {
    if (s > t) throw ConfigError("weak_tower_gap: requires s <= t");
    if (!claim.nonnegative)
        throw ConfigError("weak_tower_gap: claim must carry the nonnegativity flag");

    const MarkedClaim inner = remark_at(model, ambiguity, claim, t);
    const GValueField nested = g_conditional(model, ambiguity, inner, s);
    const GValueField direct = g_conditional(model, ambiguity, claim, s);

    GValueField gap(model.gtree.size(), 0.0);
    for (GNodeId g : model.gtree.level_nodes(s))
        gap[static_cast<std::size_t>(g)] =
            nested[static_cast<std::size_t>(g)] - direct[static_cast<std::size_t>(g)];
    return gap;
}

CounterexampleResult build_counterexample(const CreditModel& model,
                                          const AmbiguitySet& ambiguity, double strike) {
    const ScenarioTree& tree = model.tree;
    const int K = tree.steps();

    const double mu = tree.node(tree.root()).intensity;
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id)
        if (tree.node(id).intensity != mu)
            throw ConfigError("counterexample requires a constant intensity");
    if (mu <= 0.0) throw ConfigError("counterexample requires a positive intensity");

    bool ambiguous = false;
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id)
        if (!tree.node(id).children.empty() && ambiguity.extreme_kernels(id).size() > 1)
            ambiguous = true;
    if (!ambiguous) throw NumericalError("no sublinearity available");

    const std::size_t leaves = tree.leaf_count();
    TerminalClaim call(leaves), put(leaves), straddle(leaves);
    for (NodeId leaf : tree.leaves()) {
        const std::size_t ord = static_cast<std::size_t>(tree.node(leaf).leaf_ordinal);
        const double sT = tree.node(leaf).asset;
        call[ord] = std::max(sT - strike, 0.0);
        put[ord] = std::max(strike - sT, 0.0);
        straddle[ord] = call[ord] + put[ord];
    }

    const ValueField ex = sublinear_expectation(tree, ambiguity, call);
    const ValueField ey = sublinear_expectation(tree, ambiguity, put);
    const ValueField exy = sublinear_expectation(tree, ambiguity, straddle);

    // First time slice carrying a strict sublinearity witness; the operator
    // needs s = t - 1 >= 0, so the scan starts at t = 1.
    CounterexampleResult result;
    constexpr double kStrictTol = 1e-9;
    for (int t = 1; t <= K && result.witness == kNoNode; ++t) {
        for (NodeId n : tree.level_nodes(t)) {
            const double gap = ex[static_cast<std::size_t>(n)] + ey[static_cast<std::size_t>(n)] -
                               exy[static_cast<std::size_t>(n)];
            if (gap > kStrictTol && gap > result.sublinearity_gap) {
                result.witness = n;
                result.sublinearity_gap = gap;
                result.t = t;
            }
        }
    }
    if (result.witness == kNoNode)
        throw NumericalError("no strict sublinearity found for the call/put pair");

    result.s = result.t - 1;
    result.r = result.t;
    result.l = result.t;

    // Constant intensity makes the hazard deterministic per level, so the
    // scalings below are plain constants.
    const double gamma_s = model.hazard.at(tree.level_nodes(result.s).front());
    const double gamma_r = model.hazard.at(tree.level_nodes(result.r).front());
    const double gamma_l = gamma_r;  // l == r == t
    const double denom_x = std::exp(-gamma_s) - std::exp(-gamma_r);
    const double denom_y = std::exp(-gamma_l);

    MarkedClaim claim = MarkedClaim::zeros(K, leaves);
    for (std::size_t ord = 0; ord < leaves; ++ord) {
        const double xbar = call[ord] / denom_x;
        const double ybar = put[ord] / denom_y;
        for (int j = 0; j < K; ++j)
            claim.by_bucket[static_cast<std::size_t>(j)][ord] =
                j <= result.r - 1 ? xbar : (j >= result.l ? ybar : 0.0);
        claim.survival[ord] = ybar;
    }
    claim.nonnegative = true;

    result.gap_field = weak_tower_gap(model, ambiguity, claim, result.s, result.t);
    for (NodeId n : tree.level_nodes(result.s)) {
        const GNodeId g = model.gtree.alive_id(n);
        result.max_tower_gap =
            std::max(result.max_tower_gap, result.gap_field[static_cast<std::size_t>(g)]);
    }
    result.claim = std::move(claim);
    return result;
}

double check_yan_commutation(const CreditModel& model, const AmbiguitySet& ambiguity,
                             const MarkedClaim& claim, int s, int t) {
    if (s > t) throw ConfigError("check_yan_commutation: requires s <= t");
    claim.validate(model);
    const ScenarioTree& tree = model.tree;
    const std::size_t leaves = tree.leaf_count();

    // Left side: sup of the threshold-integrated field.
    TerminalClaim integrated(leaves);
    for (NodeId leaf : tree.leaves())
        integrated[static_cast<std::size_t>(tree.node(leaf).leaf_ordinal)] =
            hat_expectation(model, claim, leaf, s);
    const ValueField lhs = sublinear_expectation(tree, ambiguity, integrated);

    // Right side: integrate the sup over threshold sections. The section
    // field is constant between consecutive survival levels exp(-gamma), so
    // the integral over [0,1) is an exact finite sum.
    std::set<double> cuts{0.0, 1.0};
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id)
        cuts.insert(std::exp(-model.hazard.at(id)));

    ValueField rhs(tree.size(), 0.0);
    TerminalClaim section(leaves);
    auto it = cuts.begin();
    double lo = *it;
    for (++it; it != cuts.end(); ++it) {
        const double hi = *it;
        if (!(hi > lo)) continue;
        const double xi = 0.5 * (lo + hi);
        for (NodeId leaf : tree.leaves()) {
            const std::size_t ord = static_cast<std::size_t>(tree.node(leaf).leaf_ordinal);
            const DefaultDraw draw = sample_default(tree, leaf, model.hazard, xi);
            double v = 0.0;
            if (draw.survived)
                v = claim.survival[ord];
            else if (draw.bucket >= s)
                v = claim.value(draw.bucket, ord);
            section[ord] = v;
        }
        const ValueField dp = sublinear_expectation(tree, ambiguity, section);
        const double weight = hi - lo;
        for (NodeId n : tree.level_nodes(t))
            rhs[static_cast<std::size_t>(n)] += weight * dp[static_cast<std::size_t>(n)];
        lo = hi;
    }

    double gap = 0.0;
    for (NodeId n : tree.level_nodes(t))
        gap = std::max(gap, std::abs(lhs[static_cast<std::size_t>(n)] -
                                     rhs[static_cast<std::size_t>(n)]));
    return gap;
}

}  // namespace robustform
