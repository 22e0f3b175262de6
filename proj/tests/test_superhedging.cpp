#include <doctest.h>

#include <cmath>

#include "robustform/oracle.hpp"
#include "robustform/superhedging.hpp"
#include "test_support.hpp"

using namespace robustform;
namespace rt = robustform::testing;

namespace {

Market binary_market(int steps, double mu = 0.0) {
    const ScenarioTree tree = build_tree(rt::binary_config(steps, 100.0, mu));
    return Market::reference(tree, AmbiguitySet::martingale_polytope(tree));
}

Market trinomial_market(int steps, double mu = 0.0) {
    const ScenarioTree tree = build_tree(rt::trinomial_config(steps, 100.0, mu));
    return Market::reference(tree, AmbiguitySet::martingale_polytope(tree));
}

MarketStream call_stream(const Market& market, double strike) {
    TerminalClaim claim;
    for (int id : market.terminals())
        claim.push_back(std::max(market.node(id).asset - strike, 0.0));
    return stream_from_terminal(market, claim);
}

double classical_binomial_call(int steps, double s0, double u, double d, double strike) {
    const double p = (1.0 - d) / (u - d);
    double value = 0.0;
    double binom = 1.0;
    for (int k = 0; k <= steps; ++k) {
        if (k > 0) binom = binom * (steps - k + 1) / k;
        const double prob = binom * std::pow(p, k) * std::pow(1.0 - p, steps - k);
        const double asset = s0 * std::pow(u, k) * std::pow(d, steps - k);
        value += prob * std::max(asset - strike, 0.0);
    }
    return value;
}

}  // namespace

TEST_CASE("stop masks follow the first-hit convention") {
    const Market market = trinomial_market(3);
    const auto mask = stop_mask(market, StoppingRule::barrier_up(115.0));
    int count_per_path = 0;
    for (int id : market.terminals()) {
        int hits = 0;
        int cur = id;
        while (cur >= 0) {
            hits += mask[static_cast<std::size_t>(cur)];
            cur = market.node(cur).parent;
        }
        CHECK(hits == 1);  // every path freezes exactly once
        count_per_path += hits;
    }
    CHECK(count_per_path == static_cast<int>(market.terminals().size()));

    // The barrier never fires below a stopped ancestor.
    for (std::size_t n = 0; n < market.size(); ++n) {
        if (!mask[n]) continue;
        int up = market.node(static_cast<int>(n)).parent;
        while (up >= 0) {
            CHECK(!mask[static_cast<std::size_t>(up)]);
            up = market.node(up).parent;
        }
    }
}

TEST_CASE("constant terminal stream prices to the constant") {
    const Market market = trinomial_market(3);
    TerminalClaim claim(market.terminals().size(), 4.5);
    const MarketStream stream = stream_from_terminal(market, claim);
    const auto y = robust_envelope(market, stream, StoppingRule::at_time(3));
    for (int k = 0; k <= 3; ++k)
        for (int id : market.level_nodes(k))
            CHECK(y[static_cast<std::size_t>(id)] == doctest::Approx(4.5).epsilon(1e-14));
}

TEST_CASE("complete binomial market reproduces the textbook call value and delta") {
    const Market market = binary_market(3);
    const MarketStream stream = call_stream(market, 100.0);
    const auto y = robust_envelope(market, stream, StoppingRule::at_time(3));
    CHECK(y[0] == doctest::Approx(classical_binomial_call(3, 100.0, 1.1, 0.9, 100.0))
                      .epsilon(1e-13));

    const SuperhedgeResult result = extract_strategy(market, y, StoppingRule::at_time(3));
    for (int k = 0; k < 3; ++k) {
        for (int id : market.level_nodes(k)) {
            const MarketNode& n = market.node(id);
            const double vu = y[static_cast<std::size_t>(n.succ[0])];
            const double vd = y[static_cast<std::size_t>(n.succ[1])];
            const double su = market.node(n.succ[0]).asset;
            const double sd = market.node(n.succ[1]).asset;
            CHECK(result.delta[static_cast<std::size_t>(id)] ==
                  doctest::Approx((vu - vd) / (su - sd)).epsilon(1e-12));
        }
    }
    for (double d : result.slack) CHECK(std::abs(d) <= 1e-12);  // replication
}

TEST_CASE("deterministic asset needs no hedge") {
    TreeConfig config = rt::binary_config(2, 100.0, 0.0);
    config.factors = {{1.0, 1.0}, {1.0, 1.0}};
    const ScenarioTree tree = build_tree(config);
    const Market market = Market::reference(tree, AmbiguitySet::martingale_polytope(tree));
    TerminalClaim claim(market.terminals().size(), 3.0);
    const MarketStream stream = stream_from_terminal(market, claim);
    const auto y = robust_envelope(market, stream, StoppingRule::at_time(2));
    const SuperhedgeResult result = extract_strategy(market, y, StoppingRule::at_time(2));
    for (double d : result.delta) CHECK(d == 0.0);
    for (double d : result.slack) CHECK(d == 0.0);
}

TEST_CASE("saturated trinomial call: duality, strategy, slack") {
    const Market market = trinomial_market(3);
    const MarketStream stream = call_stream(market, 100.0);
    const StoppingRule horizon = StoppingRule::at_time(3);

    const auto y = robust_envelope(market, stream, horizon);
    const double lp = brute_superhedge(market, stream, StoppingRule::at_time(0), horizon);
    CHECK(std::abs(y[0] - lp) <= 1e-9);

    const DualityReport duality = duality_gap(market, stream, StoppingRule::at_time(0), horizon);
    CHECK(std::abs(duality.max_gap) <= 1e-9);
    CHECK(!duality.weak_only);

    const SuperhedgeResult result = extract_strategy(market, y, horizon);
    const std::vector<StoppingRule> barriers{
        StoppingRule::barrier_up(105.0), StoppingRule::barrier_up(115.0),
        StoppingRule::barrier_up(125.0), StoppingRule::barrier_down(95.0),
        StoppingRule::barrier_down(85.0)};
    const VerifyReport report = verify_superhedge(market, stream, result, barriers);
    CHECK(report.ok);
    CHECK(report.worst_violation >= -1e-12);
    CHECK(report.nested_worst >= -1e-12);

    // Slack is nonincreasing along every path, strictly negative somewhere
    // (the middle branch is not an extreme move of the call envelope).
    bool strictly_negative = false;
    for (int k = 1; k <= 3; ++k)
        for (int id : market.level_nodes(k)) {
            const int p = market.node(id).parent;
            CHECK(result.slack[static_cast<std::size_t>(id)] <=
                  result.slack[static_cast<std::size_t>(p)] + 1e-12);
            if (result.slack[static_cast<std::size_t>(id)] < -1e-9) strictly_negative = true;
        }
    CHECK(strictly_negative);
}

TEST_CASE("underfunded capital fails verification on some path") {
    const Market market = trinomial_market(3);
    const MarketStream stream = call_stream(market, 100.0);
    const StoppingRule horizon = StoppingRule::at_time(3);
    const auto y = robust_envelope(market, stream, horizon);
    SuperhedgeResult result = extract_strategy(market, y, horizon);
    result.price *= 0.99;
    const VerifyReport report = verify_superhedge(market, stream, result);
    CHECK(report.worst_violation < -1e-9);
    CHECK(!report.ok);
}

TEST_CASE("local price interpolates between zero and the global price") {
    const Market market = trinomial_market(3);
    const MarketStream stream = call_stream(market, 100.0);

    const auto same = local_price(market, stream, StoppingRule::at_time(2),
                                  StoppingRule::at_time(2));
    for (int id : market.level_nodes(2))
        CHECK(same[static_cast<std::size_t>(id)] == doctest::Approx(0.0).epsilon(1e-14));

    const auto global = local_price(market, stream, StoppingRule::at_time(0),
                                    StoppingRule::at_time(3));
    CHECK(global[0] == doctest::Approx(global_price(market, stream)).epsilon(1e-13));

    CHECK_THROWS_AS(local_price(market, stream, StoppingRule::at_time(2),
                                StoppingRule::at_time(1)),
                    ConfigError);
}

TEST_CASE("local price at an intermediate date matches the oracle increment") {
    std::mt19937_64 rng(61u);
    for (int i = 0; i < 5; ++i) {
        const auto inst = rt::random_instance(rng, true, 3, 3);
        const Market market = Market::reference(inst.model.tree, inst.ambiguity);
        const MarketStream stream = call_stream(market, 100.0);
        const int K = market.steps();
        const auto field =
            local_price(market, stream, StoppingRule::at_time(1), StoppingRule::at_time(K));

        // Oracle: ess-sup over enumerated priors of E[A_K - A_1 | node].
        TerminalClaim increment;
        for (int id : market.terminals())
            increment.push_back(stream.cumulative[static_cast<std::size_t>(id)]);
        const auto sup = brute_expectation(inst.model.tree, inst.ambiguity, increment, 1, 100000);
        const auto& slice = inst.model.tree.level_nodes(1);
        for (std::size_t j = 0; j < slice.size(); ++j) {
            const double expected =
                sup[j] - stream.cumulative[static_cast<std::size_t>(slice[j])];
            CHECK(field[static_cast<std::size_t>(slice[j])] ==
                  doctest::Approx(expected).epsilon(1e-11));
        }
    }
}

TEST_CASE("running-max and plain recursions coincide for nondecreasing streams") {
    std::mt19937_64 rng(62u);
    for (int i = 0; i < 8; ++i) {
        const auto inst = rt::random_instance(rng, true, 4, 3);
        const CreditModel& model = inst.model;
        const Market market = Market::g_saturated(model);

        Product annuity;
        annuity.kind = Product::Kind::Annuity;
        annuity.annuity.cumulative.assign(model.tree.size(), 0.0);
        for (NodeId id = 1; id < static_cast<NodeId>(model.tree.size()); ++id)
            annuity.annuity.cumulative[static_cast<std::size_t>(id)] =
                annuity.annuity.cumulative[static_cast<std::size_t>(
                    model.tree.node(id).parent)] +
                rt::uniform01(rng);
        const MarketStream stream = stream_from_product(market, model, annuity);

        const StoppingRule tau = StoppingRule::at_time(market.steps());
        const auto plain = robust_envelope(market, stream, tau);
        const auto snell = snell_envelope(market, stream, tau);
        for (std::size_t n = 0; n < market.size(); ++n)
            CHECK(std::abs(plain[n] - snell[n]) <= 1e-12);
    }
}

TEST_CASE("doubling the stream doubles prices, strategies and slack") {
    const Market market = trinomial_market(3);
    const MarketStream stream = call_stream(market, 100.0);
    MarketStream doubled = stream;
    for (auto& a : doubled.cumulative) a *= 2.0;

    const StoppingRule horizon = StoppingRule::at_time(3);
    const auto y1 = robust_envelope(market, stream, horizon);
    const auto y2 = robust_envelope(market, doubled, horizon);
    const SuperhedgeResult r1 = extract_strategy(market, y1, horizon);
    const SuperhedgeResult r2 = extract_strategy(market, y2, horizon);
    for (std::size_t n = 0; n < market.size(); ++n) {
        CHECK(y2[n] == 2.0 * y1[n]);
        CHECK(r2.delta[n] == doctest::Approx(2.0 * r1.delta[n]).epsilon(1e-14));
        CHECK(r2.slack[n] == doctest::Approx(2.0 * r1.slack[n]).epsilon(1e-14));
    }
}

TEST_CASE("box-constrained polytopes surface the decomposition failure") {
    TreeConfig config = rt::trinomial_config(1, 100.0, 0.0);
    const ScenarioTree tree = build_tree(config);
    BoxBounds box;
    box.lo = {0.0, 0.9, 0.0};
    box.hi = {0.05, 1.0, 0.05};
    std::vector<std::optional<BoxBounds>> boxes(tree.size());
    boxes[0] = box;
    const AmbiguitySet boxed = AmbiguitySet::martingale_polytope(tree, boxes);
    const Market market = Market::reference(tree, boxed);
    CHECK(!market.saturated());

    const MarketStream stream = call_stream(market, 100.0);
    const StoppingRule horizon = StoppingRule::at_time(1);
    const auto y = robust_envelope(market, stream, horizon);
    CHECK_THROWS_AS(extract_strategy(market, y, horizon), NumericalError);

    // Weak duality still holds and the gap is reported, not hidden.
    const DualityReport duality =
        duality_gap(market, stream, StoppingRule::at_time(0), horizon);
    CHECK(duality.weak_only);
    CHECK(duality.min_gap >= -1e-12);
    CHECK(duality.max_gap > 1e-3);
}

TEST_CASE("saturated enlarged market attains exact duality") {
    std::mt19937_64 rng(63u);
    for (int i = 0; i < 5; ++i) {
        const auto inst = rt::random_instance(rng, true, 3, 2);
        const CreditModel& model = inst.model;
        const Market market = Market::g_saturated(model);

        Product protection;
        protection.kind = Product::Kind::Recovery;
        protection.recovery.value.assign(model.tree.size(), 0.0);
        for (NodeId id = 0; id < static_cast<NodeId>(model.tree.size()); ++id)
            protection.recovery.value[static_cast<std::size_t>(id)] =
                0.4 * model.tree.node(id).asset;
        const MarketStream stream = stream_from_product(market, model, protection);

        const StoppingRule horizon = StoppingRule::at_time(market.steps());
        const auto y = robust_envelope(market, stream, horizon);
        const double lp = brute_superhedge(market, stream, StoppingRule::at_time(0), horizon);
        CHECK(std::abs(y[0] - lp) <= 1e-9);

        const DualityReport duality =
            duality_gap(market, stream, StoppingRule::at_time(0), horizon);
        CHECK(std::abs(duality.max_gap) <= 1e-9);

        const SuperhedgeResult result = extract_strategy(market, y, horizon);
        const VerifyReport report = verify_superhedge(market, stream, result);
        CHECK(report.ok);
    }
}

TEST_CASE("product-prior enlarged market reports a nonnegative duality gap") {
    const CreditModel model = CreditModel::build(build_tree(rt::binary_config(3, 100.0, 0.25)));
    const AmbiguitySet polytope = AmbiguitySet::martingale_polytope(model.tree);
    const Market market = Market::g_product(model, polytope);
    CHECK(!market.saturated());

    Product protection;
    protection.kind = Product::Kind::Recovery;
    protection.recovery.value.assign(model.tree.size(), 40.0);
    const MarketStream stream = stream_from_product(market, model, protection);

    const DualityReport duality =
        duality_gap_product(market, model, polytope, stream, StoppingRule::at_time(0),
                            StoppingRule::at_time(3));
    CHECK(duality.weak_only);
    CHECK(duality.min_gap >= -1e-12);
    // Hedging the default branch pathwise costs strictly more than the
    // product-prior value: the gap is genuinely positive here.
    CHECK(duality.max_gap > 1e-3);

    CHECK_THROWS_AS(duality_gap(market, stream, StoppingRule::at_time(0),
                                StoppingRule::at_time(3)),
                    ConfigError);
}

TEST_CASE("desk-scale depth stays fast") {
    // Depth 6, branching 3 on the reference market; depth 6 binary enlarged.
    const ScenarioTree wide = build_tree(rt::trinomial_config(6, 100.0, 0.1));
    const Market market = Market::reference(wide, AmbiguitySet::martingale_polytope(wide));
    const MarketStream stream = call_stream(market, 100.0);
    const double price = global_price(market, stream);
    CHECK(price > 0.0);

    const CreditModel model =
        CreditModel::build(build_tree(rt::binary_config(6, 100.0, 0.15)));
    const AmbiguitySet ambiguity = rt::drift_kernels(model.tree);
    std::mt19937_64 rng(64u);
    const MarkedClaim claim = rt::random_marked_claim(model, rng);
    const GValueField stepwise = g_conditional_via_gtree(model, ambiguity, claim);
    const GValueField direct = g_conditional(model, ambiguity, claim, 3);
    for (GNodeId g : model.gtree.level_nodes(3))
        CHECK(std::abs(direct[static_cast<std::size_t>(g)] -
                       stepwise[static_cast<std::size_t>(g)]) <= 1e-12);
}

TEST_CASE("superhedging rejects non-polytope ambiguity") {
    const ScenarioTree tree = build_tree(rt::binary_config(2, 100.0, 0.0));
    const AmbiguitySet kernels = rt::drift_kernels(tree);
    CHECK_THROWS_AS(Market::reference(tree, kernels), ConfigError);
}

TEST_CASE("streams must be nondecreasing, nonnegative and start at zero") {
    const Market market = binary_market(2);
    MarketStream bad;
    bad.cumulative.assign(market.size(), 0.0);
    bad.cumulative[0] = 1.0;
    CHECK_THROWS_AS(validate_stream(market, bad), ConfigError);

    bad.cumulative.assign(market.size(), 0.0);
    bad.cumulative[1] = 2.0;  // decreases towards its children
    CHECK_THROWS_AS(validate_stream(market, bad), ConfigError);
}
