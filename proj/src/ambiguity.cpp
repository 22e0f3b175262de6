#include "robustform/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "robustform/errors.hpp"

namespace robustform {

namespace {

constexpr double kKernelSumTol = 1e-12;
constexpr double kVertexFeasTol = 1e-12;
constexpr double kVertexDedupTol = 1e-9;

void check_kernel(const Kernel& k, std::size_t fanout, NodeId node) {
    if (k.size() != fanout)
        throw ConfigError("kernel size does not match branching at node " + std::to_string(node));
    double sum = 0.0;
    for (double p : k) {
        if (p < 0.0)
            throw ConfigError("kernel entries must be nonnegative at node " + std::to_string(node));
        sum += p;
    }
    if (std::abs(sum - 1.0) > kKernelSumTol)
        throw ConfigError("kernel does not sum to 1 at node " + std::to_string(node));
}

bool lex_less(const Kernel& a, const Kernel& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::vector<int> support_of(const std::vector<Kernel>& kernels, std::size_t fanout) {
    std::vector<int> out;
    for (std::size_t i = 0; i < fanout; ++i) {
        for (const auto& k : kernels) {
            if (k[i] > 1e-12) {
                out.push_back(static_cast<int>(i));
                break;
            }
        }
    }
    return out;
}

}  // namespace

std::vector<Kernel> enumerate_martingale_vertices(const std::vector<double>& child_assets,
                                                  double parent_asset,
                                                  const std::optional<BoxBounds>& box) {
    const int n = static_cast<int>(child_assets.size());
    std::vector<double> lo(static_cast<std::size_t>(n), 0.0);
    std::vector<double> hi(static_cast<std::size_t>(n), 1.0);
    if (box) {
        if (static_cast<int>(box->lo.size()) != n || static_cast<int>(box->hi.size()) != n)
            throw ConfigError("box bounds size does not match branching");
        for (int i = 0; i < n; ++i) {
            lo[static_cast<std::size_t>(i)] = std::max(0.0, box->lo[static_cast<std::size_t>(i)]);
            hi[static_cast<std::size_t>(i)] = std::min(1.0, box->hi[static_cast<std::size_t>(i)]);
            if (lo[static_cast<std::size_t>(i)] > hi[static_cast<std::size_t>(i)])
                throw ConfigError("box bounds are inverted");
        }
    }

    // A vertex of {sum p = 1, sum p.S = s0, lo <= p <= hi} has at most two
    // coordinates strictly between their bounds. Enumerate support patterns
    // lexicographically, solve the two equalities for the free coordinates
    // and keep the feasible solutions.
    std::vector<Kernel> found;
    std::vector<double> p(static_cast<std::size_t>(n));
    const int combos = 1 << n;  // bound assignment: bit set -> hi, clear -> lo

    auto try_candidate = [&](const std::vector<double>& cand) {
        for (int i = 0; i < n; ++i) {
            const auto s = static_cast<std::size_t>(i);
            if (cand[s] < lo[s] - kVertexFeasTol || cand[s] > hi[s] + kVertexFeasTol) return;
        }
        double sum = 0.0, mart = 0.0;
        for (int i = 0; i < n; ++i) {
            sum += cand[static_cast<std::size_t>(i)];
            mart += cand[static_cast<std::size_t>(i)] * child_assets[static_cast<std::size_t>(i)];
        }
        if (std::abs(sum - 1.0) > 1e-9 || std::abs(mart - parent_asset) > 1e-9 * std::max(1.0, std::abs(parent_asset)))
            return;
        for (const auto& v : found) {
            double d = 0.0;
            for (int i = 0; i < n; ++i)
                d = std::max(d, std::abs(v[static_cast<std::size_t>(i)] - cand[static_cast<std::size_t>(i)]));
            if (d <= kVertexDedupTol) return;
        }
        found.push_back(cand);
    };

    for (int mask = 0; mask < combos; ++mask) {
        // Coordinates outside the free set sit at lo (bit clear) or hi (bit set).
        auto fill_fixed = [&](int free_a, int free_b) {
            double rest_sum = 0.0, rest_mart = 0.0;
            for (int i = 0; i < n; ++i) {
                if (i == free_a || i == free_b) continue;
                const auto s = static_cast<std::size_t>(i);
                p[s] = (mask >> i & 1) ? hi[s] : lo[s];
                rest_sum += p[s];
                rest_mart += p[s] * child_assets[s];
            }
            return std::pair<double, double>{1.0 - rest_sum, parent_asset - rest_mart};
        };

        // No free coordinate.
        {
            auto [c1, c2] = fill_fixed(-1, -1);
            if (std::abs(c1) <= 1e-11 && std::abs(c2) <= 1e-9) try_candidate(p);
        }
        // One free coordinate.
        for (int i = 0; i < n; ++i) {
            if (mask >> i & 1) continue;  // canonical: free coordinates use clear bits
            auto [c1, c2] = fill_fixed(i, -1);
            p[static_cast<std::size_t>(i)] = c1;
            if (std::abs(c1 * child_assets[static_cast<std::size_t>(i)] - c2) <=
                1e-9 * std::max(1.0, std::abs(parent_asset)))
                try_candidate(p);
        }
        // Two free coordinates.
        for (int i = 0; i < n; ++i) {
            if (mask >> i & 1) continue;
            for (int j = i + 1; j < n; ++j) {
                if (mask >> j & 1) continue;
                auto [c1, c2] = fill_fixed(i, j);
                const double si = child_assets[static_cast<std::size_t>(i)];
                const double sj = child_assets[static_cast<std::size_t>(j)];
                const double det = si - sj;
                if (std::abs(det) <= 1e-12 * std::max(1.0, std::abs(si)))
                    continue;  // degenerate pair; endpoints come from other patterns
                const double pi = (c2 - sj * c1) / det;
                p[static_cast<std::size_t>(i)] = pi;
                p[static_cast<std::size_t>(j)] = c1 - pi;
                try_candidate(p);
            }
        }
    }

    std::sort(found.begin(), found.end(), lex_less);
    if (found.empty())
        throw ConfigError("infeasible martingale constraint: empty polytope");
    return found;
}

AmbiguitySet AmbiguitySet::finite_kernels(const ScenarioTree& tree,
                                          std::vector<std::vector<Kernel>> kernels_per_node) {
    if (kernels_per_node.size() != tree.size())
        throw ConfigError("finite_kernels: one kernel list per node required");
    AmbiguitySet a;
    a.kinds_.assign(tree.size(), Kind::FiniteKernels);
    a.kernels_.resize(tree.size());
    a.support_.resize(tree.size());
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
        const auto& n = tree.node(id);
        if (n.children.empty()) continue;
        auto& list = kernels_per_node[static_cast<std::size_t>(id)];
        if (list.empty())
            throw ConfigError("no kernels at node " + std::to_string(id));
        for (const auto& k : list) check_kernel(k, n.children.size(), id);
        a.support_[static_cast<std::size_t>(id)] = support_of(list, n.children.size());
        a.kernels_[static_cast<std::size_t>(id)] = std::move(list);
    }
    return a;
}

AmbiguitySet AmbiguitySet::uniform_kernels(const ScenarioTree& tree,
                                           const std::vector<Kernel>& kernels) {
    std::vector<std::vector<Kernel>> per_node(tree.size());
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id)
        if (!tree.node(id).children.empty()) per_node[static_cast<std::size_t>(id)] = kernels;
    return finite_kernels(tree, std::move(per_node));
}

AmbiguitySet AmbiguitySet::martingale_polytope(const ScenarioTree& tree,
                                               std::vector<std::optional<BoxBounds>> boxes) {
    if (!boxes.empty() && boxes.size() != tree.size())
        throw ConfigError("martingale_polytope: one box entry per node required");
    AmbiguitySet a;
    a.kinds_.assign(tree.size(), Kind::MartingalePolytope);
    a.kernels_.resize(tree.size());
    a.support_.resize(tree.size());
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
        const auto& n = tree.node(id);
        if (n.children.empty()) continue;
        std::vector<double> child_assets;
        child_assets.reserve(n.children.size());
        for (NodeId c : n.children) child_assets.push_back(tree.node(c).asset);
        const std::optional<BoxBounds> box =
            boxes.empty() ? std::nullopt : boxes[static_cast<std::size_t>(id)];
        if (box) a.boxed_ = true;
        try {
            a.kernels_[static_cast<std::size_t>(id)] =
                enumerate_martingale_vertices(child_assets, n.asset, box);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + " at node " + std::to_string(id));
        }
        a.support_[static_cast<std::size_t>(id)] =
            support_of(a.kernels_[static_cast<std::size_t>(id)], n.children.size());
    }
    return a;
}

bool AmbiguitySet::all_polytope() const {
    for (std::size_t i = 0; i < kinds_.size(); ++i)
        if (!kernels_[i].empty() && kinds_[i] != Kind::MartingalePolytope) return false;
    return true;
}

bool AmbiguitySet::any_box() const { return boxed_; }

const std::vector<Kernel>& polytope_vertices(NodeId node, const AmbiguitySet& ambiguity) {
    if (ambiguity.kind(node) != AmbiguitySet::Kind::MartingalePolytope)
        throw ConfigError("polytope_vertices: node does not use the polytope representation");
    return ambiguity.extreme_kernels(node);
}

MartingaleReport validate_martingale(const ScenarioTree& tree, const AmbiguitySet& ambiguity) {
    MartingaleReport report;
    for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
        const auto& n = tree.node(id);
        if (n.children.empty()) continue;
        for (const auto& k : ambiguity.extreme_kernels(id)) {
            double mart = 0.0;
            for (std::size_t i = 0; i < n.children.size(); ++i)
                mart += k[i] * tree.node(n.children[i]).asset;
            report.max_error = std::max(report.max_error, std::abs(mart - n.asset));
        }
    }
    report.ok = report.max_error <= 1e-10;
    return report;
}

}  // namespace robustform
