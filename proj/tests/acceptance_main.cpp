// Acceptance suite: one line per criterion, desk-scale randomized corpora
// with fixed seeds. Exit code is the number of failed criteria.

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "robustform/oracle.hpp"
#include "robustform/products.hpp"
#include "test_support.hpp"

using namespace robustform;
namespace rt = robustform::testing;

namespace {

int failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("criterion %2d %-24s %s (%s)\n", index, name.c_str(), pass ? "PASS" : "FAIL",
                detail.c_str());
    if (!pass) ++failures;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", x);
    return buf;
}

// --- criterion 1: reference-filtration tower -------------------------------

void criterion_tower() {
    std::mt19937_64 rng(101u);
    double worst = 0.0;
    const int instances = 220;
    for (int i = 0; i < instances; ++i) {
        const auto inst = rt::random_instance(rng, i % 2 == 0, 5, 3);
        const TerminalClaim claim = rt::random_claim(inst.model.tree, rng);
        const int K = inst.model.tree.steps();
        const int t = static_cast<int>(rng() % static_cast<std::uint64_t>(K + 1));
        const int s = static_cast<int>(rng() % static_cast<std::uint64_t>(t + 1));
        worst = std::max(worst, check_tower(inst.model.tree, inst.ambiguity, claim, s, t));
    }
    report(1, "f_tower", worst <= 1e-12,
           "max_gap=" + fmt(worst) + " over " + std::to_string(instances) + " instances");
}

// --- criterion 2: consistency of the maximizing selection ------------------

void criterion_consistency() {
    std::mt19937_64 rng(102u);
    double reproduce = 0.0;
    double dominance = 0.0;
    for (int i = 0; i < 80; ++i) {
        const auto inst = rt::random_instance(rng, i % 3 == 0, 3, 2);
        const ScenarioTree& tree = inst.model.tree;
        const TerminalClaim claim = rt::random_claim(tree, rng);
        const ValueField sup = sublinear_expectation(tree, inst.ambiguity, claim);
        const PriorSelection best = maximizing_selection(tree, inst.ambiguity, claim);
        const ValueField attained = conditional_under_prior(tree, inst.ambiguity, best, claim);
        for (std::size_t n = 0; n < sup.size(); ++n)
            reproduce = std::max(reproduce, std::abs(sup[n] - attained[n]));

        const PriorEnumeration priors = PriorEnumeration::enumerate(tree, inst.ambiguity, 10000);
        for (const auto& sel : priors.selections) {
            const ValueField under = conditional_under_prior(tree, inst.ambiguity, sel, claim);
            for (std::size_t n = 0; n < sup.size(); ++n)
                dominance = std::max(dominance, under[n] - sup[n]);
        }
    }
    report(2, "consistency", reproduce <= 1e-12 && dominance <= 1e-12,
           "attainment_gap=" + fmt(reproduce) + " dominance_excess=" + fmt(dominance));
}

// --- criterion 3: hazard aggregation ----------------------------------------

void criterion_hazard() {
    std::mt19937_64 rng(103u);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto inst = rt::random_instance(rng, i % 2 == 0, 5, 3);
        worst = std::max(
            worst, verify_hazard_aggregation(inst.model.tree, inst.ambiguity, inst.model.hazard));
    }
    report(3, "hazard_aggregation", worst <= 1e-12, "max_error=" + fmt(worst));
}

// --- criterion 4: enlarged-filtration operator consistency ------------------

void criterion_g_consistency() {
    std::mt19937_64 rng(104u);
    double worst = 0.0;
    for (int i = 0; i < 30; ++i) {
        const auto inst = rt::random_instance(rng, i % 2 == 0, 3, 2);
        const MarkedClaim claim = rt::random_marked_claim(inst.model, rng);
        const GValueField stepwise = g_conditional_via_gtree(inst.model, inst.ambiguity, claim);
        for (int t = 0; t <= inst.model.tree.steps(); ++t) {
            const GValueField direct = g_conditional(inst.model, inst.ambiguity, claim, t);
            const GValueField oracle =
                brute_g_expectation(inst.model, inst.ambiguity, claim, t, 10000);
            for (GNodeId g : inst.model.gtree.level_nodes(t)) {
                const auto s = static_cast<std::size_t>(g);
                worst = std::max(worst, std::abs(direct[s] - stepwise[s]));
                worst = std::max(worst, std::abs(direct[s] - oracle[s]));
            }
        }
    }
    report(4, "g_consistency", worst <= 1e-12, "max_gap=" + fmt(worst));
}

// --- criterion 5: weak tower + strict counterexample ------------------------

void criterion_weak_tower() {
    std::mt19937_64 rng(105u);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto inst = rt::random_instance(rng, i % 2 == 0, 4, 3);
        const int K = inst.model.tree.steps();
        const MarkedClaim claim = rt::random_marked_claim(inst.model, rng);
        const int t = static_cast<int>(rng() % static_cast<std::uint64_t>(K + 1));
        const int s = static_cast<int>(rng() % static_cast<std::uint64_t>(t + 1));
        const GValueField gap = weak_tower_gap(inst.model, inst.ambiguity, claim, s, t);
        for (GNodeId g : inst.model.gtree.level_nodes(s))
            worst = std::min(worst, gap[static_cast<std::size_t>(g)]);
    }

    // Shipped counterexample fixture: 3-step binary tree, factors 1.1/0.9,
    // s0 = strike = 100, kernels (0.6,0.4)/(0.4,0.6). The tower gap is
    // independent of the (positive, constant) intensity because the claim
    // scalings cancel it; the frozen value comes from the forward
    // enumeration oracle at fixture-generation time.
    const double frozen_gap = 1.924;
    const CreditModel model =
        CreditModel::build(build_tree(rt::binary_config(3, 100.0, 0.2)));
    const AmbiguitySet ambiguity = rt::drift_kernels(model.tree);
    const CounterexampleResult ce = build_counterexample(model, ambiguity, 100.0);

    const bool pass = worst >= -1e-12 && ce.max_tower_gap > 1e-6 &&
                      std::abs(ce.max_tower_gap - frozen_gap) <= 1e-9;
    report(5, "weak_tower", pass,
           "min_gap=" + fmt(worst) + " strict_gap=" + fmt(ce.max_tower_gap) + " frozen=" +
               fmt(frozen_gap));
}

// --- criterion 6: product-class tower and commutation -----------------------

void criterion_products_tower() {
    std::mt19937_64 rng(106u);
    double tower = 0.0;
    double yan = 0.0;
    for (int i = 0; i < 12; ++i) {
        const auto inst = rt::random_instance(rng, i % 2 == 0, 4, 2);
        const CreditModel& model = inst.model;
        const int K = model.tree.steps();

        // General product-class claim: state-dependent recovery until the
        // horizon plus a terminal survival payoff.
        RecoveryProcess z;
        z.value.assign(model.tree.size(), 0.0);
        for (auto& v : z.value) v = 40.0 * rt::uniform01(rng);
        MarkedClaim mixed = recovery_marked_claim(model, z, 0, K);
        mixed.survival = rt::random_claim(model.tree, rng);
        mixed.nonnegative = true;

        for (int t = 0; t <= K; ++t)
            for (int s = 0; s <= t; ++s)
                tower = std::max(tower, tower_check_products(model, inst.ambiguity, mixed, s, t));
    }

    // Commutation certificate on its provable subclass: deterministic hazard
    // with single-mark or flat-mark claims.
    for (int i = 0; i < 6; ++i) {
        const CreditModel model = CreditModel::build(
            build_tree(rt::binary_config(3, 100.0, 0.05 + 0.4 * rt::uniform01(rng))));
        const AmbiguitySet ambiguity = i % 2 == 0
                                           ? rt::drift_kernels(model.tree)
                                           : AmbiguitySet::martingale_polytope(model.tree);
        SurvivalClaim y{rt::random_claim(model.tree, rng)};
        const MarkedClaim survival = survival_marked_claim(model, y);
        RecoveryProcess z{std::vector<double>(model.tree.size(), 0.4)};
        MarkedClaim flat = recovery_marked_claim(model, z, 0, 3);
        for (auto& v : flat.survival) v = 1.0;
        flat.nonnegative = true;
        for (int t = 0; t <= 3; ++t)
            for (int s = 0; s <= t; ++s) {
                yan = std::max(yan, check_yan_commutation(model, ambiguity, survival, s, t));
                yan = std::max(yan, check_yan_commutation(model, ambiguity, flat, s, t));
            }
    }
    report(6, "product_tower_yan", tower <= 1e-10 && yan <= 1e-10,
           "tower_gap=" + fmt(tower) + " yan_gap=" + fmt(yan));
}

// --- criterion 7: reduced-form pricing identities ----------------------------

void criterion_pricing() {
    std::mt19937_64 rng(107u);
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
        const auto inst = rt::random_instance(rng, i % 2 == 0, 4, 3);
        const CreditModel& model = inst.model;
        const int K = model.tree.steps();

        SurvivalClaim y{rt::random_claim(model.tree, rng)};
        RecoveryProcess z;
        z.value.assign(model.tree.size(), 0.0);
        for (auto& v : z.value) v = 50.0 * rt::uniform01(rng);
        AnnuityProcess c;
        c.cumulative.assign(model.tree.size(), 0.0);
        for (NodeId id = 1; id < static_cast<NodeId>(model.tree.size()); ++id)
            c.cumulative[static_cast<std::size_t>(id)] =
                c.cumulative[static_cast<std::size_t>(model.tree.node(id).parent)] +
                rt::uniform01(rng);

        for (int t = 0; t <= K; ++t) {
            const GValueField ps = price_survival_claim(model, inst.ambiguity, y, t);
            const GValueField gs =
                g_conditional(model, inst.ambiguity, survival_marked_claim(model, y), t);
            const GValueField pr = price_recovery(model, inst.ambiguity, z, t, K);
            const GValueField gr =
                g_conditional(model, inst.ambiguity, recovery_marked_claim(model, z, t, K), t);
            const GValueField pa = price_annuity(model, inst.ambiguity, c, t, K);
            const GValueField ga =
                g_conditional(model, inst.ambiguity, annuity_marked_claim(model, c, t, K), t);
            for (GNodeId g : model.gtree.level_nodes(t)) {
                const auto s = static_cast<std::size_t>(g);
                worst = std::max(worst, std::abs(ps[s] - gs[s]));
                worst = std::max(worst, std::abs(pr[s] - gr[s]));
                worst = std::max(worst, std::abs(pa[s] - ga[s]));
            }
        }
    }
    report(7, "pricing_identities", worst <= 1e-12, "max_gap=" + fmt(worst));
}

// --- criterion 8: superhedging duality on the reference market ---------------

void criterion_superhedging() {
    std::mt19937_64 rng(108u);
    double duality = 0.0;
    double violation = 0.0;
    double slack_increase = 0.0;
    for (int i = 0; i < 15; ++i) {
        const auto inst = rt::random_instance(rng, true, 4, 3);
        const Market market = Market::reference(inst.model.tree, inst.ambiguity);
        TerminalClaim claim;
        for (int id : market.terminals()) {
            const double s = market.node(id).asset;
            claim.push_back(i % 2 == 0 ? std::max(s - 100.0, 0.0) : std::max(100.0 - s, 0.0));
        }
        const MarketStream stream = stream_from_terminal(market, claim);
        const StoppingRule horizon = StoppingRule::at_time(market.steps());

        const std::vector<double> envelope = robust_envelope(market, stream, horizon);
        const double lp = brute_superhedge(market, stream, StoppingRule::at_time(0), horizon);
        duality = std::max(duality, std::abs(envelope[0] - lp));

        const SuperhedgeResult result = extract_strategy(market, envelope, horizon);
        const std::vector<StoppingRule> barriers{
            StoppingRule::barrier_up(105.0), StoppingRule::barrier_up(115.0),
            StoppingRule::barrier_up(130.0), StoppingRule::barrier_down(95.0),
            StoppingRule::barrier_down(85.0)};
        const VerifyReport report_ = verify_superhedge(market, stream, result, barriers);
        violation = std::min(violation, report_.worst_violation);

        for (int k = 1; k <= market.steps(); ++k)
            for (int id : market.level_nodes(k)) {
                if (!market.reachable(id)) continue;
                const int p = market.node(id).parent;
                slack_increase = std::max(
                    slack_increase, result.slack[static_cast<std::size_t>(id)] -
                                        result.slack[static_cast<std::size_t>(p)]);
            }
    }
    report(8, "superhedging_duality",
           duality <= 1e-9 && violation >= -1e-12 && slack_increase <= 1e-12,
           "lp_gap=" + fmt(duality) + " worst_violation=" + fmt(violation) +
               " slack_increase=" + fmt(slack_increase));
}

// --- criterion 9: enlarged-market duality ------------------------------------

void criterion_g_market() {
    std::mt19937_64 rng(109u);
    double saturated_gap = 0.0;
    double weak_min = 0.0;
    for (int i = 0; i < 10; ++i) {
        const auto inst = rt::random_instance(rng, true, 3, 2);
        const CreditModel& model = inst.model;
        const StoppingRule horizon = StoppingRule::at_time(model.tree.steps());

        Product product;
        if (i % 2 == 0) {
            product.kind = Product::Kind::Recovery;
            product.recovery.value.assign(model.tree.size(), 0.0);
            for (NodeId id = 0; id < static_cast<NodeId>(model.tree.size()); ++id)
                product.recovery.value[static_cast<std::size_t>(id)] =
                    0.4 * model.tree.node(id).asset;
        } else {
            product.kind = Product::Kind::Survival;
            product.survival.payoff.assign(model.tree.leaf_count(), 0.0);
            for (NodeId leaf : model.tree.leaves())
                product.survival.payoff[static_cast<std::size_t>(
                    model.tree.node(leaf).leaf_ordinal)] =
                    std::max(model.tree.node(leaf).asset - 100.0, 0.0);
        }

        const Market saturated = Market::g_saturated(model);
        const MarketStream stream = stream_from_product(saturated, model, product);
        const std::vector<double> envelope = robust_envelope(saturated, stream, horizon);
        const double lp =
            brute_superhedge(saturated, stream, StoppingRule::at_time(0), horizon);
        saturated_gap = std::max(saturated_gap, std::abs(envelope[0] - lp));
        const DualityReport sat_report =
            duality_gap(saturated, stream, StoppingRule::at_time(0), horizon);
        saturated_gap = std::max(saturated_gap, std::abs(sat_report.max_gap));

        const Market product_market = Market::g_product(model, inst.ambiguity);
        const MarketStream product_stream =
            stream_from_product(product_market, model, product);
        const DualityReport weak_report =
            duality_gap_product(product_market, model, inst.ambiguity, product_stream,
                                StoppingRule::at_time(0), horizon);
        weak_min = std::min(weak_min, weak_report.min_gap);
    }
    report(9, "g_market_duality", saturated_gap <= 1e-9 && weak_min >= -1e-12,
           "saturated_gap=" + fmt(saturated_gap) + " weak_min_gap=" + fmt(weak_min));
}

// --- criterion 10: degenerate classical reduction ----------------------------

double classical_binomial(int steps, double s0, double u, double d, double strike, bool call) {
    const double p = (1.0 - d) / (u - d);
    double value = 0.0;
    double binom = 1.0;
    for (int k = 0; k <= steps; ++k) {
        if (k > 0) binom = binom * (steps - k + 1) / k;
        const double prob = binom * std::pow(p, k) * std::pow(1.0 - p, steps - k);
        const double asset = s0 * std::pow(u, k) * std::pow(d, steps - k);
        value += prob * (call ? std::max(asset - strike, 0.0) : std::max(strike - asset, 0.0));
    }
    return value;
}

void criterion_degenerate() {
    double worst = 0.0;
    for (const int steps : {3, 5}) {
        const CreditModel model =
            CreditModel::build(build_tree(rt::binary_config(steps, 100.0, 0.0)));
        const AmbiguitySet polytope = AmbiguitySet::martingale_polytope(model.tree);
        const Market market = Market::reference(model.tree, polytope);
        for (const double strike : {90.0, 100.0, 110.0}) {
            for (const bool call : {true, false}) {
                TerminalClaim claim;
                for (int id : market.terminals()) {
                    const double s = market.node(id).asset;
                    claim.push_back(call ? std::max(s - strike, 0.0)
                                         : std::max(strike - s, 0.0));
                }
                const MarketStream stream = stream_from_terminal(market, claim);
                const double engine = global_price(market, stream);
                const double closed =
                    classical_binomial(steps, 100.0, 1.1, 0.9, strike, call);
                worst = std::max(worst, std::abs(engine - closed));

                // Zero intensity: survival pricing must agree as well.
                SurvivalClaim survival{claim};
                const GValueField priced = price_survival_claim(model, polytope, survival, 0);
                worst = std::max(
                    worst,
                    std::abs(priced[static_cast<std::size_t>(
                                 model.gtree.alive_id(model.tree.root()))] -
                             closed));
            }
        }
    }
    report(10, "degenerate_reduction", worst <= 1e-12, "max_gap=" + fmt(worst));
}

}  // namespace

int main() {
    criterion_tower();
    criterion_consistency();
    criterion_hazard();
    criterion_g_consistency();
    criterion_weak_tower();
    criterion_products_tower();
    criterion_pricing();
    criterion_superhedging();
    criterion_g_market();
    criterion_degenerate();
    if (failures) std::printf("%d criterion(s) FAILED\n", failures);
    else std::printf("all criteria passed\n");
    return failures;
}
