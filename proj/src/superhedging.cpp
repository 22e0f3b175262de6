#include "robustform/superhedging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "robustform/errors.hpp"

namespace robustform {

namespace {

constexpr double kResidualTol = 1e-10;

std::vector<int> support_from_kernels(const std::vector<Kernel>& kernels, std::size_t fanout) {
    std::vector<int> out;
    for (std::size_t i = 0; i < fanout; ++i)
        for (const auto& k : kernels)
            if (k[i] > 1e-12) {
                out.push_back(static_cast<int>(i));
                break;
            }
    return out;
}

void require_polytope(const AmbiguitySet& ambiguity) {
    if (!ambiguity.all_polytope())
        throw ConfigError("superhedging requires the martingale polytope representation");
}

}  // namespace

Market Market::reference(const ScenarioTree& tree, const AmbiguitySet& ambiguity) {
    require_polytope(ambiguity);
    Market m;
    m.mode_ = Mode::Reference;
    m.saturated_ = !ambiguity.any_box();
    m.steps_ = tree.steps();
    m.nodes_.resize(tree.size());
    m.levels_.resize(static_cast<std::size_t>(tree.steps()) + 1);
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
        const auto& n = tree.node(id);
        MarketNode& mn = m.nodes_[static_cast<std::size_t>(id)];
        mn.level = n.level;
        mn.asset = n.asset;
        mn.parent = n.parent;
        mn.f_node = id;
        mn.status = kAlive;
        mn.succ.assign(n.children.begin(), n.children.end());
        if (!n.children.empty()) {
            mn.kernels = ambiguity.extreme_kernels(id);
            mn.support = support_from_kernels(mn.kernels, mn.succ.size());
        }
        m.levels_[static_cast<std::size_t>(n.level)].push_back(id);
    }
    m.compute_reachability();
    return m;
}

void Market::compute_reachability() {
    reachable_.assign(nodes_.size(), 0);
    reachable_[static_cast<std::size_t>(root())] = 1;
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        if (!reachable_[id]) continue;
        const MarketNode& n = nodes_[id];
        for (int i : n.support)
            reachable_[static_cast<std::size_t>(n.succ[static_cast<std::size_t>(i)])] = 1;
    }
}

Market Market::g_saturated(const CreditModel& model) {
    const GTree& gtree = model.gtree;
    const ScenarioTree& tree = model.tree;
    Market m;
    m.mode_ = Mode::GSaturated;
    m.saturated_ = true;
    m.steps_ = tree.steps();
    m.nodes_.resize(gtree.size());
    m.levels_.resize(static_cast<std::size_t>(tree.steps()) + 1);
    for (GNodeId g = 0; g < static_cast<GNodeId>(gtree.size()); ++g) {
        const GNode& gn = gtree.node(g);
        MarketNode& mn = m.nodes_[static_cast<std::size_t>(g)];
        mn.level = gn.level;
        mn.asset = tree.node(gn.f_node).asset;
        mn.parent = gn.parent;
        mn.f_node = gn.f_node;
        mn.status = gn.status;
        mn.succ.assign(gn.children.begin(), gn.children.end());
        if (!mn.succ.empty()) {
            std::vector<double> succ_assets;
            succ_assets.reserve(mn.succ.size());
            for (int c : mn.succ)
                succ_assets.push_back(tree.node(gtree.node(c).f_node).asset);
            mn.kernels = enumerate_martingale_vertices(succ_assets, mn.asset, std::nullopt);
            mn.support = support_from_kernels(mn.kernels, mn.succ.size());
        }
        m.levels_[static_cast<std::size_t>(gn.level)].push_back(static_cast<int>(g));
    }
    m.compute_reachability();
    return m;
}

Market Market::g_product(const CreditModel& model, const AmbiguitySet& ambiguity) {
    require_polytope(ambiguity);
    const GTree& gtree = model.gtree;
    const ScenarioTree& tree = model.tree;
    Market m;
    m.mode_ = Mode::GProduct;
    m.saturated_ = false;
    m.steps_ = tree.steps();
    m.nodes_.resize(gtree.size());
    m.levels_.resize(static_cast<std::size_t>(tree.steps()) + 1);
    for (GNodeId g = 0; g < static_cast<GNodeId>(gtree.size()); ++g) {
        const GNode& gn = gtree.node(g);
        MarketNode& mn = m.nodes_[static_cast<std::size_t>(g)];
        mn.level = gn.level;
        mn.asset = tree.node(gn.f_node).asset;
        mn.parent = gn.parent;
        mn.f_node = gn.f_node;
        mn.status = gn.status;
        mn.succ.assign(gn.children.begin(), gn.children.end());
        if (!mn.succ.empty()) {
            const auto& base = ambiguity.extreme_kernels(gn.f_node);
            if (gn.status == kAlive) {
                // Successor order from the enlarged tree: (alive, defaulted)
                // per reference child.
                const double s = gtree.survive_factor(gn.f_node);
                for (const auto& kappa : base) {
                    Kernel q(mn.succ.size(), 0.0);
                    for (std::size_t i = 0; i < kappa.size(); ++i) {
                        q[2 * i] = kappa[i] * s;
                        q[2 * i + 1] = kappa[i] * (1.0 - s);
                    }
                    mn.kernels.push_back(std::move(q));
                }
            } else {
                mn.kernels = base;
            }
            mn.support = support_from_kernels(mn.kernels, mn.succ.size());
        }
        m.levels_[static_cast<std::size_t>(gn.level)].push_back(static_cast<int>(g));
    }
    m.compute_reachability();
    return m;
}

MarketStream stream_from_terminal(const Market& market, const TerminalClaim& claim) {
    MarketStream stream;
    stream.cumulative.assign(market.size(), 0.0);
    std::size_t i = 0;
    for (int id : market.terminals()) {
        if (i >= claim.size()) throw ConfigError("terminal claim too short for market");
        stream.cumulative[static_cast<std::size_t>(id)] = claim[i++];
    }
    if (i != claim.size()) throw ConfigError("terminal claim size does not match market");
    validate_stream(market, stream);
    return stream;
}

MarketStream stream_from_product(const Market& market, const CreditModel& model,
                                 const Product& product) {
    if (market.mode() == Market::Mode::Reference)
        throw ConfigError("defaultable products live on the enlarged market");
    const GPaymentStream g = as_payment_stream(model, product);
    MarketStream stream;
    stream.cumulative = g.cumulative;  // market node ids equal g-node ids
    validate_stream(market, stream);
    return stream;
}

void validate_stream(const Market& market, const MarketStream& stream) {
    if (stream.cumulative.size() != market.size())
        throw ConfigError("stream must have one value per market node");
    if (stream.cumulative[static_cast<std::size_t>(market.root())] != 0.0)
        throw ConfigError("stream must start at 0");
    for (std::size_t n = 0; n < market.size(); ++n) {
        const double a = stream.cumulative[n];
        if (!std::isfinite(a) || a < 0.0)
            throw ConfigError("stream values must be finite and nonnegative");
        for (int c : market.node(static_cast<int>(n)).succ)
            if (stream.cumulative[static_cast<std::size_t>(c)] < a - 1e-12)
                throw ConfigError("stream must be nondecreasing along every path");
    }
}

StoppingRule StoppingRule::at_time(int t) {
    StoppingRule r;
    r.kind = Kind::DeterministicTime;
    r.time = t;
    r.name = "t=" + std::to_string(t);
    return r;
}

StoppingRule StoppingRule::barrier_up(double level) {
    StoppingRule r;
    r.kind = Kind::BarrierUp;
    r.level = level;
    r.name = "S>=" + std::to_string(level);
    return r;
}

StoppingRule StoppingRule::barrier_down(double level) {
    StoppingRule r;
    r.kind = Kind::BarrierDown;
    r.level = level;
    r.name = "S<=" + std::to_string(level);
    return r;
}

std::vector<char> stop_mask(const Market& market, const StoppingRule& rule) {
    if (rule.kind == StoppingRule::Kind::DeterministicTime &&
        (rule.time < 0 || rule.time > market.steps()))
        throw ConfigError("stopping time outside the grid");

    auto fires = [&](const MarketNode& n) {
        switch (rule.kind) {
            case StoppingRule::Kind::DeterministicTime:
                return n.level == rule.time;
            case StoppingRule::Kind::BarrierUp:
                return n.asset >= rule.level;
            case StoppingRule::Kind::BarrierDown:
                return n.asset <= rule.level;
        }
        return false;
    };

    std::vector<char> mask(market.size(), 0);
    std::vector<char> stopped_above(market.size(), 0);
    for (int k = 0; k <= market.steps(); ++k) {
        for (int id : market.level_nodes(k)) {
            const MarketNode& n = market.node(id);
            const bool above =
                n.parent >= 0 && (stopped_above[static_cast<std::size_t>(n.parent)] ||
                                  mask[static_cast<std::size_t>(n.parent)] != 0);
            stopped_above[static_cast<std::size_t>(id)] = above ? 1 : 0;
            if (!above && (fires(n) || n.succ.empty())) mask[static_cast<std::size_t>(id)] = 1;
        }
    }
    return mask;
}

void require_ordered(const Market& market, const std::vector<char>& sigma_mask,
                     const std::vector<char>& tau_mask) {
    // sigma <= tau pathwise iff no tau stop sits strictly above a sigma stop.
    for (std::size_t n = 0; n < market.size(); ++n) {
        if (!sigma_mask[n]) continue;
        int up = market.node(static_cast<int>(n)).parent;
        while (up >= 0) {
            if (tau_mask[static_cast<std::size_t>(up)])
                throw ConfigError("stopping rules are not ordered: sigma > tau on some path");
            up = market.node(up).parent;
        }
    }
}

namespace {

double one_step_sup(const MarketNode& n, const std::vector<double>& field) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& q : n.kernels) {
        double e = 0.0;
        for (std::size_t i = 0; i < n.succ.size(); ++i)
            e += q[i] * field[static_cast<std::size_t>(n.succ[i])];
        best = std::max(best, e);
    }
    return best;
}

struct MinMaxSolution {
    double value = 0.0;
    double delta = 0.0;
};

/// Exact scalar min-max over the successor support: the upper envelope of
/// the affine maps delta -> W_c - delta * dS_c is convex piecewise linear,
/// so its minimum sits at a pairwise intersection (or anywhere when all
/// moves vanish, in which case delta = 0 is chosen).
MinMaxSolution solve_min_max(const Market& market, const MarketNode& n,
                             const std::vector<double>& field) {
    std::vector<double> w, ds;
    w.reserve(n.support.size());
    ds.reserve(n.support.size());
    for (int i : n.support) {
        const int succ_id = n.succ[static_cast<std::size_t>(i)];
        w.push_back(field[static_cast<std::size_t>(succ_id)]);
        ds.push_back(market.node(succ_id).asset - n.asset);
    }

    auto envelope_at = [&](double delta) {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, w[i] - delta * ds[i]);
        return worst;
    };

    MinMaxSolution best{envelope_at(0.0), 0.0};
    const double scale = std::max(1.0, std::abs(n.asset));
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = i + 1; j < w.size(); ++j) {
            if (std::abs(ds[i] - ds[j]) <= 1e-12 * scale) continue;
            const double delta = (w[i] - w[j]) / (ds[i] - ds[j]);
            const double value = envelope_at(delta);
            if (value < best.value) best = MinMaxSolution{value, delta};
        }
    }
    return best;
}

enum class Recursion { Plain, RunningMax, MinMax };

std::vector<double> backward_field(const Market& market, const MarketStream& stream,
                                   const StoppingRule& tau, Recursion kind) {
    const std::vector<char> mask = stop_mask(market, tau);
    std::vector<double> field(market.size(), 0.0);
    for (int k = market.steps(); k >= 0; --k) {
        for (int id : market.level_nodes(k)) {
            const MarketNode& n = market.node(id);
            const double a = stream.cumulative[static_cast<std::size_t>(id)];
            double v;
            if (mask[static_cast<std::size_t>(id)] != 0) {
                v = a;
            } else if (n.succ.empty()) {
                v = a;  // below a stop: value is irrelevant, freeze the stream
            } else {
                switch (kind) {
                    case Recursion::Plain:
                        v = one_step_sup(n, field);
                        break;
                    case Recursion::RunningMax:
                        v = std::max(a, one_step_sup(n, field));
                        break;
                    case Recursion::MinMax:
                        v = std::max(a, solve_min_max(market, n, field).value);
                        break;
                }
            }
            field[static_cast<std::size_t>(id)] = v;
        }
    }
    return field;
}

}  // namespace

std::vector<double> robust_envelope(const Market& market, const MarketStream& stream,
                                    const StoppingRule& tau) {
    validate_stream(market, stream);
    return backward_field(market, stream, tau, Recursion::Plain);
}

std::vector<double> snell_envelope(const Market& market, const MarketStream& stream,
                                   const StoppingRule& tau) {
    validate_stream(market, stream);
    return backward_field(market, stream, tau, Recursion::RunningMax);
}

std::vector<double> minmax_capital(const Market& market, const MarketStream& stream,
                                   const StoppingRule& tau) {
    validate_stream(market, stream);
    return backward_field(market, stream, tau, Recursion::MinMax);
}

SuperhedgeResult extract_strategy(const Market& market, const std::vector<double>& envelope,
                                  const StoppingRule& tau) {
    if (envelope.size() != market.size())
        throw ConfigError("extract_strategy: envelope does not match market");
    const std::vector<char> mask = stop_mask(market, tau);

    SuperhedgeResult result;
    result.price = envelope[static_cast<std::size_t>(market.root())];
    result.delta.assign(market.size(), 0.0);
    result.slack.assign(market.size(), 0.0);

    // active(n): the stopped process has not frozen at or above n.
    std::vector<char> active(market.size(), 0);
    for (int k = 0; k <= market.steps(); ++k) {
        for (int id : market.level_nodes(k)) {
            const MarketNode& n = market.node(id);
            const bool parent_active =
                n.parent < 0 || active[static_cast<std::size_t>(n.parent)] != 0;
            active[static_cast<std::size_t>(id)] =
                (parent_active && mask[static_cast<std::size_t>(id)] == 0) ? 1 : 0;
            if (active[static_cast<std::size_t>(id)] == 0 || n.succ.empty()) continue;

            const MinMaxSolution sol = solve_min_max(market, n, envelope);
            result.delta[static_cast<std::size_t>(id)] = sol.delta;
            const double residual = sol.value - envelope[static_cast<std::size_t>(id)];
            result.max_residual = std::max(result.max_residual, residual);
        }
    }
    if (result.max_residual > kResidualTol)
        throw NumericalError("decomposition failure: one-step residual " +
                             std::to_string(result.max_residual) +
                             " signals a non-saturated ambiguity set");

    // Slack D is accumulated pathwise and frozen once tau stops.
    for (int k = 1; k <= market.steps(); ++k) {
        for (int id : market.level_nodes(k)) {
            const MarketNode& n = market.node(id);
            const std::size_t p = static_cast<std::size_t>(n.parent);
            if (active[p] == 0) {
                result.slack[static_cast<std::size_t>(id)] = result.slack[p];
                continue;
            }
            const double gain =
                result.delta[p] * (n.asset - market.node(n.parent).asset);
            result.slack[static_cast<std::size_t>(id)] =
                result.slack[p] + envelope[static_cast<std::size_t>(id)] -
                envelope[p] - gain;
        }
    }
    return result;
}

double global_price(const Market& market, const MarketStream& stream) {
    const StoppingRule horizon = StoppingRule::at_time(market.steps());
    const std::vector<double> envelope = robust_envelope(market, stream, horizon);
    const SuperhedgeResult result = extract_strategy(market, envelope, horizon);
    const VerifyReport report = verify_superhedge(market, stream, result);
    if (!report.ok)
        throw NumericalError("global superhedge failed verification: worst violation " +
                             std::to_string(report.worst_violation));
    return envelope[static_cast<std::size_t>(market.root())];
}

std::vector<double> local_price(const Market& market, const MarketStream& stream,
                                const StoppingRule& sigma, const StoppingRule& tau) {
    const std::vector<char> sigma_stops = stop_mask(market, sigma);
    const std::vector<char> tau_stops = stop_mask(market, tau);
    require_ordered(market, sigma_stops, tau_stops);

    const std::vector<double> envelope = robust_envelope(market, stream, tau);
    std::vector<double> out(market.size(), 0.0);
    for (std::size_t n = 0; n < market.size(); ++n)
        if (sigma_stops[n])
            out[n] = envelope[n] - stream.cumulative[n];
    return out;
}

VerifyReport verify_superhedge(const Market& market, const MarketStream& stream,
                               const SuperhedgeResult& result,
                               const std::vector<StoppingRule>& extra_rules) {
    std::vector<StoppingRule> rules;
    for (int t = 0; t <= market.steps(); ++t) rules.push_back(StoppingRule::at_time(t));
    rules.insert(rules.end(), extra_rules.begin(), extra_rules.end());

    // Pathwise wealth of the strategy from the root.
    std::vector<double> wealth(market.size(), 0.0);
    for (int k = 1; k <= market.steps(); ++k) {
        for (int id : market.level_nodes(k)) {
            const MarketNode& n = market.node(id);
            const std::size_t p = static_cast<std::size_t>(n.parent);
            wealth[static_cast<std::size_t>(id)] =
                wealth[p] + result.delta[p] * (n.asset - market.node(n.parent).asset);
        }
    }

    VerifyReport report;
    report.worst_violation = std::numeric_limits<double>::infinity();
    for (const auto& rule : rules) {
        const std::vector<char> mask = stop_mask(market, rule);
        for (std::size_t n = 0; n < market.size(); ++n) {
            if (!mask[n] || !market.reachable(static_cast<int>(n))) continue;
            const double violation =
                result.price + wealth[n] - stream.cumulative[n];
            report.worst_violation = std::min(report.worst_violation, violation);
        }
    }

    // Nested interval membership: for every pair (u above m) on a path,
    // value[u] + (wealth[m] - wealth[u]) >= A[m], so the global strategy
    // superhedges every deterministic sub-interval from the local price on.
    // The local price is the envelope where duality is exact; in weak modes
    // the strategy only decomposes the minimal capital, so that field is
    // checked instead (the envelope sits strictly below it there).
    const StoppingRule horizon = StoppingRule::at_time(market.steps());
    const std::vector<double> value = market.saturated()
                                          ? robust_envelope(market, stream, horizon)
                                          : minmax_capital(market, stream, horizon);
    double nested = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < market.size(); ++m) {
        if (!market.reachable(static_cast<int>(m))) continue;
        int up = static_cast<int>(m);
        while (up >= 0) {
            const std::size_t u = static_cast<std::size_t>(up);
            const double lhs = value[u] + wealth[m] - wealth[u];
            nested = std::min(nested, lhs - stream.cumulative[m]);
            up = market.node(up).parent;
        }
    }
    report.nested_worst = nested;
    report.ok = report.worst_violation >= -1e-12 && report.nested_worst >= -1e-12;
    return report;
}

DualityReport duality_gap(const Market& market, const MarketStream& stream,
                          const StoppingRule& sigma, const StoppingRule& tau) {
    if (market.mode() == Market::Mode::GProduct)
        throw ConfigError("product-prior duality needs the credit model: use duality_gap_product");
    const std::vector<char> sigma_stops = stop_mask(market, sigma);
    const std::vector<char> tau_stops = stop_mask(market, tau);
    require_ordered(market, sigma_stops, tau_stops);

    const std::vector<double> envelope = robust_envelope(market, stream, tau);
    const std::vector<double> capital = minmax_capital(market, stream, tau);

    DualityReport report;
    report.weak_only = !market.saturated();
    report.mode_label = market.saturated() ? "saturated" : "weak-duality";
    report.min_gap = std::numeric_limits<double>::infinity();
    report.max_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < market.size(); ++n) {
        if (!sigma_stops[n] || !market.reachable(static_cast<int>(n))) continue;
        const double gap = capital[n] - envelope[n];
        report.min_gap = std::min(report.min_gap, gap);
        report.max_gap = std::max(report.max_gap, gap);
    }
    return report;
}

std::vector<double> product_prior_value(const Market& market, const CreditModel& model,
                                        const AmbiguitySet& ambiguity, const MarketStream& stream,
                                        const StoppingRule& sigma, const StoppingRule& tau) {
    if (market.mode() == Market::Mode::Reference)
        throw ConfigError("product_prior_value needs an enlarged market");
    const std::vector<char> sigma_stops = stop_mask(market, sigma);
    const std::vector<char> tau_stops = stop_mask(market, tau);
    require_ordered(market, sigma_stops, tau_stops);

    const ScenarioTree& tree = model.tree;
    const int K = tree.steps();

    // Lift the stopped stream A_tau to a marked claim: the default bucket
    // and the terminal reference node determine the whole enlarged path.
    MarkedClaim lifted = MarkedClaim::zeros(K, tree.leaf_count());
    for (NodeId leaf : tree.leaves()) {
        const std::size_t ord = static_cast<std::size_t>(tree.node(leaf).leaf_ordinal);
        const auto path = tree.path(leaf);
        for (int bucket = -1; bucket < K; ++bucket) {
            int stop_id = -1;
            for (int k = 0; k <= K && stop_id < 0; ++k) {
                const int status = (bucket >= 0 && k > bucket) ? bucket : kAlive;
                const int gid = model.gtree.id_of(path[static_cast<std::size_t>(k)], status);
                if (tau_stops[static_cast<std::size_t>(gid)]) stop_id = gid;
            }
            if (stop_id < 0)
                throw NumericalError("stopping rule failed to stop a path");
            const double a = stream.cumulative[static_cast<std::size_t>(stop_id)];
            if (bucket < 0)
                lifted.survival[ord] = a;
            else
                lifted.by_bucket[static_cast<std::size_t>(bucket)][ord] = a;
        }
    }
    lifted.nonnegative = true;

    std::vector<double> out(market.size(), 0.0);
    for (int t = 0; t <= K; ++t) {
        bool any = false;
        for (int id : market.level_nodes(t))
            if (sigma_stops[static_cast<std::size_t>(id)]) any = true;
        if (!any) continue;
        const GValueField value = g_conditional(model, ambiguity, lifted, t);
        for (int id : market.level_nodes(t))
            if (sigma_stops[static_cast<std::size_t>(id)])
                out[static_cast<std::size_t>(id)] =
                    value[static_cast<std::size_t>(id)] -
                    stream.cumulative[static_cast<std::size_t>(id)];
    }
    return out;
}

DualityReport duality_gap_product(const Market& market, const CreditModel& model,
                                  const AmbiguitySet& ambiguity, const MarketStream& stream,
                                  const StoppingRule& sigma, const StoppingRule& tau) {
    if (market.mode() != Market::Mode::GProduct)
        throw ConfigError("duality_gap_product requires the product-prior market mode");
    const std::vector<char> sigma_stops = stop_mask(market, sigma);
    const std::vector<double> capital = minmax_capital(market, stream, tau);
    const std::vector<double> value =
        product_prior_value(market, model, ambiguity, stream, sigma, tau);

    DualityReport report;
    report.weak_only = true;
    report.mode_label = "weak-duality";
    report.min_gap = std::numeric_limits<double>::infinity();
    report.max_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < market.size(); ++n) {
        if (!sigma_stops[n] || !market.reachable(static_cast<int>(n))) continue;
        const double gap = (capital[n] - stream.cumulative[n]) - value[n];
        report.min_gap = std::min(report.min_gap, gap);
        report.max_gap = std::max(report.max_gap, gap);
    }
    return report;
}

}  // namespace robustform
