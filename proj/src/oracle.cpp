#include "robustform/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "robustform/errors.hpp"

namespace robustform {

PriorEnumeration PriorEnumeration::enumerate(const ScenarioTree& tree,
                                             const AmbiguitySet& ambiguity, std::size_t cap) {
    std::size_t total = 1;
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
        if (tree.node(id).children.empty()) continue;
        total *= ambiguity.extreme_kernels(id).size();
        if (total > cap)
            throw ConfigError("prior enumeration exceeds cap of " + std::to_string(cap));
    }

    PriorEnumeration out;
    PriorSelection base;
    base.kernel_index.assign(tree.size(), -1);
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id)
        if (!tree.node(id).children.empty()) base.kernel_index[static_cast<std::size_t>(id)] = 0;
    out.selections.push_back(base);

    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
        if (tree.node(id).children.empty()) continue;
        const std::size_t count = ambiguity.extreme_kernels(id).size();
        if (count == 1) continue;
        std::vector<PriorSelection> expanded;
        expanded.reserve(out.selections.size() * count);
        for (const auto& sel : out.selections)
            for (std::size_t i = 0; i < count; ++i) {
                expanded.push_back(sel);
                expanded.back().kernel_index[static_cast<std::size_t>(id)] = static_cast<int>(i);
            }
        out.selections = std::move(expanded);
    }
    return out;
}

namespace {

// Conditional leaf probabilities below `top` under one selection, gathered
// by forward multiplication (no backward pass).
void leaf_probs_below(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                      const PriorSelection& sel, NodeId top, double mass,
                      std::vector<std::pair<NodeId, double>>& out) {
    const auto& n = tree.node(top);
    if (n.children.empty()) {
        out.emplace_back(top, mass);
        return;
    }
    const Kernel& kernel = sel.kernel(ambiguity, top);
    for (std::size_t i = 0; i < n.children.size(); ++i)
        leaf_probs_below(tree, ambiguity, sel, n.children[i], mass * kernel[i], out);
}

}  // namespace

std::vector<double> brute_expectation(const ScenarioTree& tree, const AmbiguitySet& ambiguity,
                                      const TerminalClaim& claim, int t, std::size_t cap) {
    if (claim.size() != tree.leaf_count())
        throw ConfigError("brute_expectation: claim size mismatch");
    const PriorEnumeration priors = PriorEnumeration::enumerate(tree, ambiguity, cap);

    const auto& slice = tree.level_nodes(t);
    std::vector<double> best(slice.size(), -std::numeric_limits<double>::infinity());
    std::vector<std::pair<NodeId, double>> probs;
    for (const auto& sel : priors.selections) {
        for (std::size_t i = 0; i < slice.size(); ++i) {
            probs.clear();
            leaf_probs_below(tree, ambiguity, sel, slice[i], 1.0, probs);
            double e = 0.0;
            for (const auto& [leaf, p] : probs)
                e += p * claim[static_cast<std::size_t>(tree.node(leaf).leaf_ordinal)];
            best[i] = std::max(best[i], e);
        }
    }
    return best;
}

GValueField brute_g_expectation(const CreditModel& model, const AmbiguitySet& ambiguity,
                                const MarkedClaim& claim, int t, std::size_t cap) {
    claim.validate(model);
    const ScenarioTree& tree = model.tree;
    const int K = tree.steps();
    const PriorEnumeration priors = PriorEnumeration::enumerate(tree, ambiguity, cap);

    GValueField best(model.gtree.size(), -std::numeric_limits<double>::infinity());
    std::vector<std::pair<NodeId, double>> probs;

    for (const auto& sel : priors.selections) {
        for (NodeId n : tree.level_nodes(t)) {
            probs.clear();
            leaf_probs_below(tree, ambiguity, sel, n, 1.0, probs);

            // Alive atom: forward sum over (leaf, bucket >= t or survival),
            // with threshold masses written out from the hazard directly.
            double alive = 0.0;
            for (const auto& [leaf, p] : probs) {
                const auto path = tree.path(leaf);
                const std::size_t ord =
                    static_cast<std::size_t>(tree.node(leaf).leaf_ordinal);
                double scenario = claim.survival[ord] * std::exp(-model.hazard.at(leaf));
                for (int j = t; j < K; ++j) {
                    const double mass =
                        std::exp(-model.hazard.at(path[static_cast<std::size_t>(j)])) -
                        std::exp(-model.hazard.at(path[static_cast<std::size_t>(j) + 1]));
                    scenario += claim.value(j, ord) * mass;
                }
                alive += p * scenario;
            }
            alive *= std::exp(model.hazard.at(n));
            const std::size_t ga = static_cast<std::size_t>(model.gtree.alive_id(n));
            best[ga] = std::max(best[ga], alive);

            // Defaulted atoms: the mark is frozen, the path law is untouched.
            for (int j = 0; j < t; ++j) {
                double frozen = 0.0;
                for (const auto& [leaf, p] : probs)
                    frozen += p * claim.value(
                                      j, static_cast<std::size_t>(tree.node(leaf).leaf_ordinal));
                const std::size_t gd = static_cast<std::size_t>(model.gtree.id_of(n, j));
                best[gd] = std::max(best[gd], frozen);
            }
        }
    }

    for (auto& v : best)
        if (v == -std::numeric_limits<double>::infinity()) v = 0.0;
    return best;
}

double solve_linear_program(const std::vector<std::vector<double>>& a,
                            const std::vector<double>& b, const std::vector<double>& c) {
    // min c.x  s.t.  a x >= b, x free. Split x and add surplus variables,
    // then run a dense two-phase simplex with a Bland fallback.
    const std::size_t m = a.size();
    const std::size_t nx = c.size();
    if (b.size() != m) throw ConfigError("solve_linear_program: size mismatch");

    const std::size_t n_struct = 2 * nx + m;  // x+, x-, surplus
    const std::size_t n_total = n_struct + m;  // + artificials
    std::vector<std::vector<double>> tab(m, std::vector<double>(n_total + 1, 0.0));

    for (std::size_t i = 0; i < m; ++i) {
        const double sign = b[i] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < nx; ++j) {
            tab[i][j] = sign * a[i][j];
            tab[i][nx + j] = -sign * a[i][j];
        }
        tab[i][2 * nx + i] = -sign;          // surplus of a >= constraint
        tab[i][n_struct + i] = 1.0;          // artificial
        tab[i][n_total] = sign * b[i];
    }

    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) basis[i] = n_struct + i;

    std::vector<double> cost(n_total, 0.0);

    constexpr double kPivotTol = 1e-9;
    auto pivot = [&](std::size_t leave, std::size_t enter) {
        const double piv = tab[leave][enter];
        for (double& v : tab[leave]) v /= piv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave) continue;
            const double f = tab[i][enter];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n_total; ++j) tab[i][j] -= f * tab[leave][j];
        }
        basis[leave] = enter;
    };

    // `limit`: columns allowed to enter (phase two excludes the artificials).
    auto run = [&](std::size_t limit, bool phase_one) -> double {
        std::size_t iterations = 0;
        const std::size_t max_iterations = 200000;
        while (true) {
            if (++iterations > max_iterations)
                throw NumericalError("simplex iteration limit reached");
            const bool bland = iterations > max_iterations / 2;

            std::vector<double> y(m);
            for (std::size_t i = 0; i < m; ++i) y[i] = cost[basis[i]];
            // Reduced cost c_j - y.col_j; the tableau stays fully reduced, so
            // basic columns are unit vectors and price out to zero.
            std::size_t enter = n_total;
            double best_red = -kPivotTol;
            for (std::size_t j = 0; j < limit; ++j) {
                double r = cost[j];
                for (std::size_t i = 0; i < m; ++i)
                    if (y[i] != 0.0) r -= y[i] * tab[i][j];
                if (r < (bland ? -kPivotTol : best_red)) {
                    best_red = r;
                    enter = j;
                    if (bland) break;
                }
            }
            if (enter == n_total) break;  // optimal

            std::size_t leave = m;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                if (tab[i][enter] > kPivotTol) {
                    const double ratio = tab[i][n_total] / tab[i][enter];
                    if (ratio < best_ratio - 1e-12 ||
                        (ratio < best_ratio + 1e-12 && leave < m && basis[i] < basis[leave])) {
                        best_ratio = ratio;
                        leave = i;
                    }
                }
            }
            if (leave == m) {
                if (phase_one) throw NumericalError("simplex: phase one unbounded");
                throw NumericalError("linear program is unbounded");
            }
            pivot(leave, enter);
        }
        double obj = 0.0;
        for (std::size_t i = 0; i < m; ++i) obj += cost[basis[i]] * tab[i][n_total];
        return obj;
    };

    // Phase one: drive the artificials to zero.
    for (std::size_t j = n_struct; j < n_total; ++j) cost[j] = 1.0;
    const double infeasibility = run(n_total, true);
    if (infeasibility > 1e-7) throw NumericalError("linear program is infeasible");

    // Pivot leftover artificials out of the basis where possible. A row with
    // no structural entry is redundant and stays inert in phase two.
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < n_struct) continue;
        for (std::size_t j = 0; j < n_struct; ++j) {
            if (std::abs(tab[i][j]) > kPivotTol) {
                pivot(i, j);
                break;
            }
        }
    }

    for (std::size_t j = 0; j < n_total; ++j) cost[j] = 0.0;
    for (std::size_t j = 0; j < nx; ++j) {
        cost[j] = c[j];
        cost[nx + j] = -c[j];
    }
    return run(n_struct, false);
}

double brute_superhedge(const Market& market, const MarketStream& stream,
                        const StoppingRule& sigma, const StoppingRule& tau) {
    if (market.steps() > 5)
        throw ConfigError("brute_superhedge: market deeper than 5 steps");
    validate_stream(market, stream);

    const std::vector<char> sigma_stops = stop_mask(market, sigma);
    if (!sigma_stops[static_cast<std::size_t>(market.root())])
        throw ConfigError("brute_superhedge: sigma must stop at the root");
    const std::vector<char> tau_stops = stop_mask(market, tau);

    // Nodes at or above the tau stop are reachable by the stopped process.
    std::vector<char> reachable(market.size(), 0);
    std::vector<std::size_t> delta_var(market.size(), SIZE_MAX);
    std::size_t n_delta = 0;
    for (int k = 0; k <= market.steps(); ++k) {
        for (int id : market.level_nodes(k)) {
            const MarketNode& n = market.node(id);
            const bool above = n.parent < 0 || (reachable[static_cast<std::size_t>(n.parent)] &&
                                                !tau_stops[static_cast<std::size_t>(n.parent)]);
            reachable[static_cast<std::size_t>(id)] = above ? 1 : 0;
            if (above && !tau_stops[static_cast<std::size_t>(id)] && !n.succ.empty())
                delta_var[static_cast<std::size_t>(id)] = n_delta++;
        }
    }

    // Variables: [v, delta...]; one constraint per reachable node:
    // v + sum of delta * dS along the root path >= A(node).
    const std::size_t nvars = 1 + n_delta;
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    for (std::size_t id = 0; id < market.size(); ++id) {
        if (!reachable[id]) continue;
        std::vector<double> row(nvars, 0.0);
        row[0] = 1.0;
        int cur = static_cast<int>(id);
        while (market.node(cur).parent >= 0) {
            const int parent = market.node(cur).parent;
            const std::size_t dv = delta_var[static_cast<std::size_t>(parent)];
            if (dv == SIZE_MAX)
                throw NumericalError("brute_superhedge: missing strategy variable");
            row[1 + dv] += market.node(cur).asset - market.node(parent).asset;
            cur = parent;
        }
        a.push_back(std::move(row));
        b.push_back(stream.cumulative[id]);
    }

    std::vector<double> c(nvars, 0.0);
    c[0] = 1.0;
    return solve_linear_program(a, b, c);
}

}  // namespace robustform
