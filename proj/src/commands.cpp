#include "robustform/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <random>

#include "robustform/csv.hpp"
#include "robustform/errors.hpp"
#include "robustform/oracle.hpp"

namespace robustform {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int resolve_time(int configured, int horizon, const char* what) {
    const int t = configured < 0 ? horizon : configured;
    if (t < 0 || t > horizon)
        throw ConfigError(std::string(what) + " index outside the grid");
    return t;
}

std::string out_path(const CommandOptions& options, const std::string& file) {
    std::filesystem::create_directories(options.out_dir);
    return (std::filesystem::path(options.out_dir) / file).string();
}

void write_g_field_csv(const std::string& path, const CreditModel& model,
                       const std::vector<std::pair<int, GValueField>>& slices) {
    CsvWriter csv(path, {"time", "node", "status", "bucket", "value"});
    for (const auto& [t, field] : slices) {
        for (GNodeId g : model.gtree.level_nodes(t)) {
            const GNode& gn = model.gtree.node(g);
            csv.cell(t);
            csv.cell(static_cast<int>(gn.f_node));
            csv.cell(std::string(gn.status == kAlive ? "alive" : "defaulted"));
            csv.cell(gn.status);
            csv.cell(field[static_cast<std::size_t>(g)]);
            csv.end_row();
        }
    }
    csv.close();
}

struct Instance {
    CreditModel model;
    AmbiguitySet ambiguity;
};

Instance materialize(const RunConfig& config) {
    ScenarioTree tree = build_tree(config.tree);
    AmbiguitySet ambiguity = make_ambiguity(tree, config.ambiguity);
    return Instance{CreditModel::build(std::move(tree)), std::move(ambiguity)};
}

MarkedClaim random_marked_claim(const CreditModel& model, std::mt19937_64& rng, double scale) {
    MarkedClaim claim = MarkedClaim::zeros(model.tree.steps(), model.tree.leaf_count());
    for (auto& field : claim.by_bucket)
        for (auto& v : field) v = scale * uniform01(rng);
    for (auto& v : claim.survival) v = scale * uniform01(rng);
    claim.nonnegative = true;
    return claim;
}

struct CheckLine {
    std::string name;
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

void print_line(std::ostream& log, const CheckLine& line) {
    log << line.name << ' ' << line.detail << ' '
        << (line.skipped ? "SKIPPED" : (line.pass ? "PASS" : "FAIL")) << '\n';
}

}  // namespace

int cmd_price(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
    const Instance inst = materialize(config);
    const CreditModel& model = inst.model;

    if (config.products.empty()) {
        log << "warning: empty product list, nothing to price\n";
        return kExitOk;
    }

    std::vector<int> times = config.price_times;
    if (times.empty())
        for (int t = 0; t <= model.tree.steps(); ++t) times.push_back(t);
    for (int t : times)
        if (t < 0 || t > model.tree.steps())
            throw ConfigError("price time index outside the grid: " + std::to_string(t));

    auto price_one = [&](const ProductConfig& pc) {
        const Product product = make_product(model, pc);
        std::vector<std::pair<int, GValueField>> slices;
        for (int t : times) {
            GValueField field;
            switch (product.kind) {
                case Product::Kind::Survival:
                    field = price_survival_claim(model, inst.ambiguity, product.survival, t);
                    break;
                case Product::Kind::Recovery:
                    field = price_recovery(model, inst.ambiguity, product.recovery, t,
                                           model.tree.steps());
                    break;
                case Product::Kind::Annuity:
                    field = price_annuity(model, inst.ambiguity, product.annuity, t,
                                          model.tree.steps());
                    break;
            }
            // Cross-check against the marked-claim operator before emitting.
            MarkedClaim claim;
            switch (product.kind) {
                case Product::Kind::Survival:
                    claim = survival_marked_claim(model, product.survival);
                    break;
                case Product::Kind::Recovery:
                    claim = recovery_marked_claim(model, product.recovery, t, model.tree.steps());
                    break;
                case Product::Kind::Annuity:
                    claim = annuity_marked_claim(model, product.annuity, t, model.tree.steps());
                    break;
            }
            const GValueField reference = g_conditional(model, inst.ambiguity, claim, t);
            for (GNodeId g : model.gtree.level_nodes(t))
                if (std::abs(field[static_cast<std::size_t>(g)] -
                             reference[static_cast<std::size_t>(g)]) > 1e-9)
                    throw NumericalError("pricing identity violated for product " + pc.name);
            slices.emplace_back(t, std::move(field));
        }
        write_g_field_csv(out_path(options, pc.name + ".csv"), model, slices);
    };

    if (options.threads > 1) {
        std::vector<std::future<void>> jobs;
        for (const auto& pc : config.products)
            jobs.push_back(std::async(std::launch::async, price_one, pc));
        for (auto& j : jobs) j.get();
    } else {
        for (const auto& pc : config.products) price_one(pc);
    }
    log << "priced " << config.products.size() << " products at " << times.size()
        << " times\n";
    return kExitOk;
}

int cmd_superhedge(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
    if (!config.superhedge) throw ConfigError("config has no 'superhedge' section");
    const SuperhedgeConfig& sh = *config.superhedge;
    const Instance inst = materialize(config);
    const CreditModel& model = inst.model;
    const int horizon = model.tree.steps();

    Market market = sh.market == SuperhedgeConfig::MarketKind::Reference
                        ? Market::reference(model.tree, inst.ambiguity)
                        : (options.mode == "product" ? Market::g_product(model, inst.ambiguity)
                                                     : Market::g_saturated(model));

    MarketStream stream;
    if (sh.stream_is_product) {
        const ProductConfig* pc = nullptr;
        for (const auto& p : config.products)
            if (p.name == sh.stream_product) pc = &p;
        if (!pc) throw ConfigError("superhedge stream references unknown product '" +
                                   sh.stream_product + "'");
        stream = stream_from_product(market, model, make_product(model, *pc));
    } else {
        TerminalClaim payoff = make_terminal_payoff(model.tree, sh.terminal_payoff);
        if (market.mode() == Market::Mode::Reference) {
            stream = stream_from_terminal(market, payoff);
        } else {
            Product p;
            p.kind = Product::Kind::Survival;
            p.name = "terminal";
            p.survival.payoff = std::move(payoff);
            stream = stream_from_product(market, model, p);
        }
    }

    const StoppingRule sigma = StoppingRule::at_time(resolve_time(sh.sigma_time, horizon, "sigma"));
    const StoppingRule tau = StoppingRule::at_time(resolve_time(sh.tau_time, horizon, "tau"));

    // The strategy decomposes the minimal pathwise capital; in saturated
    // modes that field coincides with the envelope, in weak modes it is the
    // honest superhedging price above the ambiguity value.
    const std::vector<double> envelope = robust_envelope(market, stream, tau);
    const std::vector<double> capital = minmax_capital(market, stream, tau);
    const SuperhedgeResult result = extract_strategy(market, capital, tau);
    const VerifyReport verify = verify_superhedge(market, stream, result, sh.barriers);

    DualityReport duality;
    if (market.mode() == Market::Mode::GProduct)
        duality = duality_gap_product(market, model, inst.ambiguity, stream, sigma, tau);
    else
        duality = duality_gap(market, stream, sigma, tau);

    {
        CsvWriter csv(out_path(options, "superhedge_price.csv"),
                      {"time", "node", "status", "value", "capital"});
        for (int k = 0; k <= horizon; ++k) {
            for (int id : market.level_nodes(k)) {
                csv.cell(k);
                csv.cell(static_cast<int>(market.node(id).f_node));
                csv.cell(std::string(market.node(id).status == kAlive ? "alive" : "defaulted"));
                csv.cell(envelope[static_cast<std::size_t>(id)]);
                csv.cell(capital[static_cast<std::size_t>(id)]);
                csv.end_row();
            }
        }
    }
    {
        CsvWriter csv(out_path(options, "superhedge_strategy.csv"),
                      {"time", "node", "status", "delta"});
        for (int k = 0; k < horizon; ++k) {
            for (int id : market.level_nodes(k)) {
                csv.cell(k);
                csv.cell(static_cast<int>(market.node(id).f_node));
                csv.cell(std::string(market.node(id).status == kAlive ? "alive" : "defaulted"));
                csv.cell(result.delta[static_cast<std::size_t>(id)]);
                csv.end_row();
            }
        }
    }
    {
        std::ofstream report(out_path(options, "superhedge_report.txt"), std::ios::binary);
        report << "price=" << CsvWriter::format(result.price) << '\n';
        report << "mode=" << duality.mode_label << '\n';
        report << "worst_violation=" << CsvWriter::format(verify.worst_violation) << '\n';
        report << "nested_worst=" << CsvWriter::format(verify.nested_worst) << '\n';
        report << "duality_gap=" << CsvWriter::format(duality.max_gap) << '\n';
        report << "duality_gap_min=" << CsvWriter::format(duality.min_gap) << '\n';
    }

    log << "price=" << CsvWriter::format(result.price) << '\n';
    log << "mode=" << duality.mode_label << '\n';
    log << "worst_violation=" << CsvWriter::format(verify.worst_violation) << '\n';
    log << "duality_gap=" << CsvWriter::format(duality.max_gap) << '\n';

    if (!verify.ok) throw NumericalError("superhedge verification failed");
    if (market.saturated() && std::abs(duality.max_gap) > 1e-9)
        throw NumericalError("duality gap exceeds tolerance in saturated mode");
    if (!market.saturated() && duality.min_gap < -1e-12)
        throw NumericalError("weak duality violated");
    return kExitOk;
}

int cmd_verify(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
    (void)options;
    const Instance inst = materialize(config);
    const CreditModel& model = inst.model;
    const AmbiguitySet& ambiguity = inst.ambiguity;
    const int K = model.tree.steps();
    std::mt19937_64 rng(options.seed_given ? options.seed : 20240811u);

    std::vector<CheckLine> lines;
    auto add = [&](const std::string& name, bool pass, double gap, const char* rel,
                   double bound) {
        CheckLine line;
        line.name = name;
        line.pass = pass;
        line.detail = "gap=" + CsvWriter::format(gap) + " bound" + rel + CsvWriter::format(bound);
        lines.push_back(line);
        print_line(log, lines.back());
    };

    // Reference-filtration tower property over random claims and times.
    {
        double worst = 0.0;
        for (int draw = 0; draw < 50; ++draw) {
            TerminalClaim claim(model.tree.leaf_count());
            for (auto& v : claim) v = 100.0 * uniform01(rng);
            const int t = static_cast<int>(rng() % static_cast<std::uint64_t>(K + 1));
            const int s = static_cast<int>(rng() % static_cast<std::uint64_t>(t + 1));
            worst = std::max(worst, check_tower(model.tree, ambiguity, claim, s, t));
        }
        add("f_tower", worst <= 1e-12, worst, "<=", 1e-12);
    }

    // Maximizing selection reproduces the sup; all priors are dominated.
    {
        double worst = 0.0;
        double dominance = 0.0;
        for (int draw = 0; draw < 20; ++draw) {
            TerminalClaim claim(model.tree.leaf_count());
            for (auto& v : claim) v = 100.0 * uniform01(rng);
            const ValueField sup = sublinear_expectation(model.tree, ambiguity, claim);
            const PriorSelection best = maximizing_selection(model.tree, ambiguity, claim);
            const ValueField under =
                conditional_under_prior(model.tree, ambiguity, best, claim);
            for (std::size_t i = 0; i < sup.size(); ++i)
                worst = std::max(worst, std::abs(sup[i] - under[i]));

            PriorSelection probe;
            probe.kernel_index.assign(model.tree.size(), -1);
            for (NodeId id = 0; id < static_cast<NodeId>(model.tree.size()); ++id)
                if (!model.tree.node(id).children.empty())
                    probe.kernel_index[static_cast<std::size_t>(id)] = static_cast<int>(
                        rng() % ambiguity.extreme_kernels(id).size());
            const ValueField dominated =
                conditional_under_prior(model.tree, ambiguity, probe, claim);
            for (std::size_t i = 0; i < sup.size(); ++i)
                dominance = std::max(dominance, dominated[i] - sup[i]);
        }
        add("consistency_maximizer", worst <= 1e-12, worst, "<=", 1e-12);
        add("consistency_dominance", dominance <= 1e-12, dominance, "<=", 1e-12);
    }

    {
        const double gap = verify_hazard_aggregation(model.tree, ambiguity, model.hazard);
        add("hazard_aggregation", gap <= 1e-12, gap, "<=", 1e-12);
    }

    // Enlarged-filtration operator: decomposition route vs stepwise route.
    {
        double worst = 0.0;
        for (int draw = 0; draw < 10; ++draw) {
            const MarkedClaim claim = random_marked_claim(model, rng, 100.0);
            const GValueField stepwise = g_conditional_via_gtree(model, ambiguity, claim);
            for (int t = 0; t <= K; ++t) {
                const GValueField direct = g_conditional(model, ambiguity, claim, t);
                for (GNodeId g : model.gtree.level_nodes(t))
                    worst = std::max(worst,
                                     std::abs(direct[static_cast<std::size_t>(g)] -
                                              stepwise[static_cast<std::size_t>(g)]));
            }
        }
        add("g_consistency", worst <= 1e-12, worst, "<=", 1e-12);
    }

    // Weak tower inequality for nonnegative claims.
    {
        double worst = 0.0;
        for (int draw = 0; draw < 10; ++draw) {
            const MarkedClaim claim = random_marked_claim(model, rng, 100.0);
            const int t = static_cast<int>(rng() % static_cast<std::uint64_t>(K + 1));
            const int s = static_cast<int>(rng() % static_cast<std::uint64_t>(t + 1));
            const GValueField gap = weak_tower_gap(model, ambiguity, claim, s, t);
            for (GNodeId g : model.gtree.level_nodes(s))
                worst = std::min(worst, gap[static_cast<std::size_t>(g)]);
        }
        add("weak_tower", worst >= -1e-12, worst, ">=", -1e-12);
    }

    // Product-class claims: classic tower always; the commutation condition
    // is certified only where it provably holds (deterministic hazard and
    // marks that cannot prefer different kernels per bucket: any survival
    // payoff, or flat recovery/annuity marks). Outside that class the swap
    // can be strictly positive while the tower still holds.
    {
        const bool deterministic_hazard =
            config.tree.intensity.kind != IntensitySpec::Kind::AffineLogAsset;
        double tower = 0.0, yan = 0.0;
        bool any_yan = false;
        for (const auto& pc : config.products) {
            const Product product = make_product(model, pc);
            const MarkedClaim claim = product_marked_claim(model, product);
            const bool certifiable =
                deterministic_hazard &&
                (pc.kind == Product::Kind::Survival ||
                 pc.payoff.kind == PayoffSpec::Kind::Const ||
                 pc.payoff.kind == PayoffSpec::Kind::LinearInTime);
            for (int t = 0; t <= K; ++t)
                for (int s = 0; s <= t; ++s) {
                    tower = std::max(tower, tower_check_products(model, ambiguity, claim, s, t));
                    if (certifiable) {
                        yan = std::max(yan, check_yan_commutation(model, ambiguity, claim, s, t));
                        any_yan = true;
                    }
                }
        }
        if (config.products.empty()) {
            CheckLine line;
            line.name = "product_tower";
            line.skipped = true;
            line.detail = "skipped: no products configured";
            lines.push_back(line);
            print_line(log, lines.back());
        } else {
            add("product_tower", tower <= 1e-10, tower, "<=", 1e-10);
            if (any_yan) {
                add("yan_condition2", yan <= 1e-10, yan, "<=", 1e-10);
            } else {
                CheckLine line;
                line.name = "yan_condition2";
                line.skipped = true;
                line.detail = "skipped: no certifiable product under this hazard";
                lines.push_back(line);
                print_line(log, lines.back());
            }
        }
    }

    // Pricing formulas against the marked-claim operator.
    {
        double worst = 0.0;
        for (const auto& pc : config.products) {
            const Product product = make_product(model, pc);
            for (int t = 0; t <= K; ++t) {
                MarkedClaim claim;
                GValueField priced;
                switch (product.kind) {
                    case Product::Kind::Survival:
                        claim = survival_marked_claim(model, product.survival);
                        priced = price_survival_claim(model, ambiguity, product.survival, t);
                        break;
                    case Product::Kind::Recovery:
                        claim = recovery_marked_claim(model, product.recovery, t, K);
                        priced = price_recovery(model, ambiguity, product.recovery, t, K);
                        break;
                    case Product::Kind::Annuity:
                        claim = annuity_marked_claim(model, product.annuity, t, K);
                        priced = price_annuity(model, ambiguity, product.annuity, t, K);
                        break;
                }
                const GValueField reference = g_conditional(model, ambiguity, claim, t);
                for (GNodeId g : model.gtree.level_nodes(t))
                    worst = std::max(worst, std::abs(priced[static_cast<std::size_t>(g)] -
                                                     reference[static_cast<std::size_t>(g)]));
            }
        }
        if (!config.products.empty()) add("pricing_identities", worst <= 1e-12, worst, "<=", 1e-12);
    }

    // Tower-property counterexample: a strictly positive gap is the pass.
    {
        bool single_prior = true;
        for (NodeId id = 0; id < static_cast<NodeId>(model.tree.size()); ++id)
            if (!model.tree.node(id).children.empty() &&
                ambiguity.extreme_kernels(id).size() > 1)
                single_prior = false;
        CheckLine line;
        line.name = "weak_tower_strict_gap>0";
        if (single_prior) {
            line.skipped = true;
            line.detail = "skipped: no sublinearity";
        } else {
            try {
                const double strike = config.counterexample_strike > 0.0
                                          ? config.counterexample_strike
                                          : config.tree.s0;
                const CounterexampleResult ce = build_counterexample(model, ambiguity, strike);
                line.pass = ce.max_tower_gap > 0.0;
                line.detail = "gap=" + CsvWriter::format(ce.max_tower_gap) +
                              " at s=" + std::to_string(ce.s) + " t=" + std::to_string(ce.t);
            } catch (const NumericalError& e) {
                line.pass = false;
                line.detail = std::string("failed: ") + e.what();
            }
        }
        lines.push_back(line);
        print_line(log, lines.back());
    }

    // Superhedging duality on the configured market, when in polytope mode.
    {
        CheckLine line;
        line.name = "superhedge_duality";
        if (!ambiguity.all_polytope()) {
            line.skipped = true;
            line.detail = "skipped: kernels mode";
        } else {
            const Market market = Market::reference(model.tree, ambiguity);
            TerminalClaim payoff(model.tree.leaf_count());
            for (NodeId leaf : model.tree.leaves())
                payoff[static_cast<std::size_t>(model.tree.node(leaf).leaf_ordinal)] =
                    std::max(model.tree.node(leaf).asset - config.tree.s0, 0.0);
            const MarketStream stream = stream_from_terminal(market, payoff);
            const DualityReport duality = duality_gap(market, stream, StoppingRule::at_time(0),
                                                      StoppingRule::at_time(K));
            const double gap = std::max(std::abs(duality.max_gap), std::abs(duality.min_gap));
            line.pass = market.saturated() ? gap <= 1e-9 : duality.min_gap >= -1e-12;
            line.detail = "gap=" + CsvWriter::format(gap);
        }
        lines.push_back(line);
        print_line(log, lines.back());
    }

    for (const auto& line : lines)
        if (!line.skipped && !line.pass) return kExitNumericalError;
    return kExitOk;
}

int cmd_simulate(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
    if (!options.seed_given) throw ConfigError("simulate requires --seed");
    const Instance inst = materialize(config);
    const CreditModel& model = inst.model;
    const AmbiguitySet& ambiguity = inst.ambiguity;

    bool ambiguous = false;
    for (NodeId id = 0; id < static_cast<NodeId>(model.tree.size()); ++id)
        if (!model.tree.node(id).children.empty() && ambiguity.extreme_kernels(id).size() > 1)
            ambiguous = true;
    int kernel_index = config.simulate.kernel_index;
    if (kernel_index < 0) {
        if (ambiguous)
            throw ConfigError("ambiguous config: simulate needs simulate.kernel_index");
        kernel_index = 0;
    }
    for (NodeId id = 0; id < static_cast<NodeId>(model.tree.size()); ++id)
        if (!model.tree.node(id).children.empty() &&
            static_cast<std::size_t>(kernel_index) >= ambiguity.extreme_kernels(id).size())
            throw ConfigError("simulate.kernel_index out of range at node " + std::to_string(id));

    std::vector<Product> products;
    for (const auto& pc : config.products) products.push_back(make_product(model, pc));

    std::vector<std::string> header{"sample", "path", "bucket", "outcome"};
    for (const auto& p : products) header.push_back(p.name);
    CsvWriter csv(out_path(options, "simulation.csv"), header);

    std::mt19937_64 rng(options.seed);
    for (int sample = 0; sample < config.simulate.samples; ++sample) {
        NodeId node = model.tree.root();
        while (!model.tree.node(node).children.empty()) {
            const Kernel& kernel =
                ambiguity.extreme_kernels(node)[static_cast<std::size_t>(kernel_index)];
            const double u = uniform01(rng);
            double acc = 0.0;
            NodeId next = model.tree.node(node).children.back();
            for (std::size_t i = 0; i < kernel.size(); ++i) {
                acc += kernel[i];
                if (u < acc) {
                    next = model.tree.node(node).children[i];
                    break;
                }
            }
            node = next;
        }
        const double xi = uniform01(rng);
        const DefaultDraw draw = sample_default(model.tree, node, model.hazard, xi);

        csv.cell(sample);
        csv.cell(static_cast<int>(node));
        csv.cell(draw.survived ? -1 : draw.bucket);
        csv.cell(std::string(draw.survived ? "survival" : "default"));
        for (const auto& p : products) {
            double payoff = 0.0;
            const std::size_t ord = static_cast<std::size_t>(model.tree.node(node).leaf_ordinal);
            switch (p.kind) {
                case Product::Kind::Survival:
                    payoff = draw.survived ? p.survival.payoff[ord] : 0.0;
                    break;
                case Product::Kind::Recovery:
                    payoff = draw.survived
                                 ? 0.0
                                 : p.recovery.value[static_cast<std::size_t>(
                                       model.tree.ancestor_at(node, draw.bucket))];
                    break;
                case Product::Kind::Annuity:
                    payoff = draw.survived
                                 ? p.annuity.cumulative[static_cast<std::size_t>(node)]
                                 : p.annuity.cumulative[static_cast<std::size_t>(
                                       model.tree.ancestor_at(node, draw.bucket))];
                    break;
            }
            csv.cell(payoff);
        }
        csv.end_row();
    }
    csv.close();
    log << "wrote " << config.simulate.samples << " samples\n";
    return kExitOk;
}

}  // namespace robustform
