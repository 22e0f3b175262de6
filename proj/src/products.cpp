#include "robustform/products.hpp"

#include <cmath>

#include "robustform/errors.hpp"

namespace robustform {

namespace {

void require_per_leaf(const CreditModel& model, const std::vector<double>& v, const char* what) {
    if (v.size() != model.tree.leaf_count())
        throw ConfigError(std::string(what) + " must have one value per leaf");
    for (double x : v)
        if (!std::isfinite(x)) throw ConfigError(std::string(what) + " must be finite");
}

void require_per_node(const CreditModel& model, const std::vector<double>& v, const char* what) {
    if (v.size() != model.tree.size())
        throw ConfigError(std::string(what) + " must have one value per node");
    for (double x : v)
        if (!std::isfinite(x)) throw ConfigError(std::string(what) + " must be finite");
}

}  // namespace

void validate_product(const CreditModel& model, const Product& product) {
    switch (product.kind) {
        case Product::Kind::Survival:
            require_per_leaf(model, product.survival.payoff, "survival payoff");
            for (double x : product.survival.payoff)
                if (x < 0.0) throw ConfigError("survival payoff must be nonnegative");
            return;
        case Product::Kind::Recovery:
            require_per_node(model, product.recovery.value, "recovery process");
            for (double x : product.recovery.value)
                if (x < 0.0) throw ConfigError("recovery process must be nonnegative");
            return;
        case Product::Kind::Annuity: {
            const auto& c = product.annuity.cumulative;
            require_per_node(model, c, "annuity process");
            if (c[static_cast<std::size_t>(model.tree.root())] != 0.0)
                throw ConfigError("annuity must start at 0");
            for (NodeId id = 0; id < static_cast<NodeId>(model.tree.size()); ++id)
                for (NodeId child : model.tree.node(id).children)
                    if (c[static_cast<std::size_t>(child)] < c[static_cast<std::size_t>(id)])
                        throw ConfigError("annuity must be nondecreasing along every path");
            return;
        }
    }
    throw ConfigError("unknown product kind");
}

MarkedClaim survival_marked_claim(const CreditModel& model, const SurvivalClaim& claim) {
    require_per_leaf(model, claim.payoff, "survival payoff");
    MarkedClaim out = MarkedClaim::zeros(model.tree.steps(), model.tree.leaf_count());
    out.survival = claim.payoff;
    return out;
}

MarkedClaim recovery_marked_claim(const CreditModel& model, const RecoveryProcess& z, int s,
                                  int t) {
    require_per_node(model, z.value, "recovery process");
    if (s < 0 || t > model.tree.steps() || s > t)
        throw ConfigError("price_recovery: requires 0 <= s <= t <= horizon");
    MarkedClaim out = MarkedClaim::zeros(model.tree.steps(), model.tree.leaf_count());
    for (NodeId leaf : model.tree.leaves()) {
        const std::size_t ord = static_cast<std::size_t>(model.tree.node(leaf).leaf_ordinal);
        const auto path = model.tree.path(leaf);
        for (int j = s; j < t; ++j)
            out.by_bucket[static_cast<std::size_t>(j)][ord] =
                z.value[static_cast<std::size_t>(path[static_cast<std::size_t>(j)])];
    }
    return out;
}

MarkedClaim annuity_marked_claim(const CreditModel& model, const AnnuityProcess& c, int s,
                                 int t) {
    require_per_node(model, c.cumulative, "annuity process");
    if (s < 0 || t > model.tree.steps() || s > t)
        throw ConfigError("price_annuity: requires 0 <= s <= t <= horizon");
    const int K = model.tree.steps();
    MarkedClaim out = MarkedClaim::zeros(K, model.tree.leaf_count());
    for (NodeId leaf : model.tree.leaves()) {
        const std::size_t ord = static_cast<std::size_t>(model.tree.node(leaf).leaf_ordinal);
        const auto path = model.tree.path(leaf);
        const double settled_at_t =
            c.cumulative[static_cast<std::size_t>(path[static_cast<std::size_t>(t)])];
        for (int j = 0; j < K; ++j) {
            double v = 0.0;
            if (j >= s && j < t)
                v = c.cumulative[static_cast<std::size_t>(path[static_cast<std::size_t>(j)])];
            else if (j >= t)
                v = settled_at_t;
            out.by_bucket[static_cast<std::size_t>(j)][ord] = v;
        }
        out.survival[ord] = settled_at_t;
    }
    return out;
}

MarkedClaim product_marked_claim(const CreditModel& model, const Product& product) {
    validate_product(model, product);
    switch (product.kind) {
        case Product::Kind::Survival:
            return survival_marked_claim(model, product.survival);
        case Product::Kind::Recovery:
            return recovery_marked_claim(model, product.recovery, 0, model.tree.steps());
        case Product::Kind::Annuity:
            return annuity_marked_claim(model, product.annuity, 0, model.tree.steps());
    }
    throw ConfigError("unknown product kind");
}

GValueField price_survival_claim(const CreditModel& model, const AmbiguitySet& ambiguity,
                                 const SurvivalClaim& claim, int t) {
    require_per_leaf(model, claim.payoff, "survival payoff");
    if (t < 0 || t > model.tree.steps())
        throw ConfigError("price_survival_claim: time index out of range");
    const ScenarioTree& tree = model.tree;

    TerminalClaim discounted(tree.leaf_count());
    for (NodeId leaf : tree.leaves())
        discounted[static_cast<std::size_t>(tree.node(leaf).leaf_ordinal)] =
            claim.payoff[static_cast<std::size_t>(tree.node(leaf).leaf_ordinal)] *
            std::exp(-model.hazard.at(leaf));
    const ValueField dp = sublinear_expectation(tree, ambiguity, discounted);

    GValueField out(model.gtree.size(), 0.0);
    for (NodeId n : tree.level_nodes(t))
        out[static_cast<std::size_t>(model.gtree.alive_id(n))] =
            std::exp(model.hazard.at(n)) * dp[static_cast<std::size_t>(n)];
    return out;  // defaulted statuses stay at 0
}

GValueField price_recovery(const CreditModel& model, const AmbiguitySet& ambiguity,
                           const RecoveryProcess& z, int s, int t) {
    require_per_node(model, z.value, "recovery process");
    if (s < 0 || t > model.tree.steps() || s > t)
        throw ConfigError("price_recovery: requires 0 <= s <= t <= horizon");
    const ScenarioTree& tree = model.tree;

    // Per-leaf accumulated default leg: sum over buckets in [s, t) of
    // Z(left endpoint) * exp(-gamma_k) * (1 - exp(-mu_k dt_k)).
    TerminalClaim leg(tree.leaf_count(), 0.0);
    for (NodeId leaf : tree.leaves()) {
        const std::size_t ord = static_cast<std::size_t>(tree.node(leaf).leaf_ordinal);
        const auto path = tree.path(leaf);
        double acc = 0.0;
        for (int k = s; k < t; ++k) {
            const NodeId m = path[static_cast<std::size_t>(k)];
            const NodeId next = path[static_cast<std::size_t>(k) + 1];
            acc += z.value[static_cast<std::size_t>(m)] *
                   (std::exp(-model.hazard.at(m)) - std::exp(-model.hazard.at(next)));
        }
        leg[ord] = acc;
    }
    const ValueField dp = sublinear_expectation(tree, ambiguity, leg);

    GValueField out(model.gtree.size(), 0.0);
    for (NodeId n : tree.level_nodes(s))
        out[static_cast<std::size_t>(model.gtree.alive_id(n))] =
            std::exp(model.hazard.at(n)) * dp[static_cast<std::size_t>(n)];
    return out;
}

GValueField price_annuity(const CreditModel& model, const AmbiguitySet& ambiguity,
                          const AnnuityProcess& c, int s, int t) {
    Product p;
    p.kind = Product::Kind::Annuity;
    p.annuity = c;
    validate_product(model, p);  // rejects non-monotone C
    if (s < 0 || t > model.tree.steps() || s > t)
        throw ConfigError("price_annuity: requires 0 <= s <= t <= horizon");
    const ScenarioTree& tree = model.tree;

    TerminalClaim leg(tree.leaf_count(), 0.0);
    for (NodeId leaf : tree.leaves()) {
        const std::size_t ord = static_cast<std::size_t>(tree.node(leaf).leaf_ordinal);
        const auto path = tree.path(leaf);
        double acc = 0.0;
        for (int k = s; k < t; ++k) {
            const NodeId m = path[static_cast<std::size_t>(k)];
            const NodeId next = path[static_cast<std::size_t>(k) + 1];
            acc += c.cumulative[static_cast<std::size_t>(m)] *
                   (std::exp(-model.hazard.at(m)) - std::exp(-model.hazard.at(next)));
        }
        const NodeId at_t = path[static_cast<std::size_t>(t)];
        acc += c.cumulative[static_cast<std::size_t>(at_t)] * std::exp(-model.hazard.at(at_t));
        leg[ord] = acc;
    }
    const ValueField dp = sublinear_expectation(tree, ambiguity, leg);

    GValueField out(model.gtree.size(), 0.0);
    for (NodeId n : tree.level_nodes(s))
        out[static_cast<std::size_t>(model.gtree.alive_id(n))] =
            std::exp(model.hazard.at(n)) * dp[static_cast<std::size_t>(n)];
    return out;
}

double tower_check_products(const CreditModel& model, const AmbiguitySet& ambiguity,
                            const MarkedClaim& product_claim, int s, int t) {
    const GValueField gap = weak_tower_gap(model, ambiguity, product_claim, s, t);
    double worst = 0.0;
    for (GNodeId g : model.gtree.level_nodes(s))
        worst = std::max(worst, std::abs(gap[static_cast<std::size_t>(g)]));
    return worst;
}

GPaymentStream as_payment_stream(const CreditModel& model, const Product& product) {
    validate_product(model, product);
    const GTree& gtree = model.gtree;
    const ScenarioTree& tree = model.tree;
    const int K = tree.steps();

    GPaymentStream stream;
    stream.cumulative.assign(gtree.size(), 0.0);

    for (GNodeId g = 0; g < static_cast<GNodeId>(gtree.size()); ++g) {
        const GNode& gn = gtree.node(g);
        double a = 0.0;
        switch (product.kind) {
            case Product::Kind::Survival:
                if (gn.level == K && gn.status == kAlive)
                    a = product.survival.payoff[static_cast<std::size_t>(
                        tree.node(gn.f_node).leaf_ordinal)];
                break;
            case Product::Kind::Recovery:
                if (gn.status != kAlive) {
                    const NodeId at_default = tree.ancestor_at(gn.f_node, gn.status);
                    a = product.recovery.value[static_cast<std::size_t>(at_default)];
                }
                break;
            case Product::Kind::Annuity:
                if (gn.status == kAlive) {
                    a = product.annuity.cumulative[static_cast<std::size_t>(gn.f_node)];
                } else {
                    const NodeId at_default = tree.ancestor_at(gn.f_node, gn.status);
                    a = product.annuity.cumulative[static_cast<std::size_t>(at_default)];
                }
                break;
        }
        stream.cumulative[static_cast<std::size_t>(g)] = a;
    }

    // Contract: cumulative payments start at zero and never decrease.
    if (stream.cumulative[static_cast<std::size_t>(gtree.alive_id(tree.root()))] != 0.0)
        throw NumericalError("payment stream must start at 0");
    for (GNodeId g = 0; g < static_cast<GNodeId>(gtree.size()); ++g)
        for (GNodeId child : gtree.node(g).children)
            if (stream.cumulative[static_cast<std::size_t>(child)] <
                stream.cumulative[static_cast<std::size_t>(g)] - 1e-12)
                throw NumericalError("payment stream must be nondecreasing along paths");
    return stream;
}

}  // namespace robustform
