#pragma once

#include <string>
#include <vector>

#include "robustform/products.hpp"

namespace robustform {

/// Market node: one state of the traded asset together with the extreme
/// one-step martingale kernels over its successors. On the enlarged market
/// the successors enumerate (child, status) outcomes; the asset is
/// default-free, so outcomes sharing a child share the asset value.
struct MarketNode {
    int level = 0;
    double asset = 0.0;
    int parent = -1;
    NodeId f_node = kNoNode;  // underlying reference node
    int status = kAlive;      // kAlive on the reference market
    std::vector<int> succ;
    std::vector<Kernel> kernels;  // extreme kernels over succ
    std::vector<int> support;     // succ indices reachable under some kernel
};

/// A hedging market: the reference tree itself, or the enlarged tree with
/// either the saturated family (every martingale kernel on the one-step
/// support) or the product family (reference kernels times the fixed
/// hazard split). Only the saturated families admit exact duality; the
/// product family is kept to measure the gap.
class Market {
public:
    enum class Mode { Reference, GSaturated, GProduct };

    static Market reference(const ScenarioTree& tree, const AmbiguitySet& ambiguity);
    static Market g_saturated(const CreditModel& model);
    static Market g_product(const CreditModel& model, const AmbiguitySet& ambiguity);

    Mode mode() const { return mode_; }
    bool saturated() const { return saturated_; }
    int steps() const { return steps_; }
    std::size_t size() const { return nodes_.size(); }
    int root() const { return 0; }
    const MarketNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const std::vector<int>& level_nodes(int k) const {
        return levels_[static_cast<std::size_t>(k)];
    }
    const std::vector<int>& terminals() const { return levels_.back(); }

    /// Whether a node carries positive mass under some kernel selection.
    /// Paths through unreachable nodes are null under every prior, so the
    /// pathwise checks ignore them.
    bool reachable(int id) const { return reachable_[static_cast<std::size_t>(id)] != 0; }

private:
    void compute_reachability();

    Mode mode_ = Mode::Reference;
    bool saturated_ = true;
    int steps_ = 0;
    std::vector<MarketNode> nodes_;
    std::vector<std::vector<int>> levels_;
    std::vector<char> reachable_;
};

/// Cumulative payment stream on a market: A(node), nondecreasing along every
/// path with A(root) = 0.
struct MarketStream {
    std::vector<double> cumulative;
};

MarketStream stream_from_terminal(const Market& market, const TerminalClaim& claim);
MarketStream stream_from_product(const Market& market, const CreditModel& model,
                                 const Product& product);
void validate_stream(const Market& market, const MarketStream& stream);

/// Node-local stopping predicate with the first-hit convention; a path that
/// never hits the predicate stops at the horizon.
struct StoppingRule {
    enum class Kind { DeterministicTime, BarrierUp, BarrierDown };
    Kind kind = Kind::DeterministicTime;
    int time = 0;        // DeterministicTime
    double level = 0.0;  // barrier on the asset
    std::string name;

    static StoppingRule at_time(int t);
    static StoppingRule barrier_up(double level);
    static StoppingRule barrier_down(double level);
};

/// stop_mask[n] == 1 iff the stopped process freezes at n (first hit along
/// the path, horizon otherwise). Every path contains exactly one such node.
std::vector<char> stop_mask(const Market& market, const StoppingRule& rule);

/// Throws unless sigma stops no later than tau on every path.
void require_ordered(const Market& market, const std::vector<char>& sigma_mask,
                     const std::vector<char>& tau_mask);

/// Y(n) = A(n) on tau-stopped nodes, else the sup over the node's kernels of
/// the one-step expectation of Y. The value at a node is the robust price of
/// the stream stopped at tau, seen from that node.
std::vector<double> robust_envelope(const Market& market, const MarketStream& stream,
                                    const StoppingRule& tau);

/// Running-max variant max(A(n), sup E[.]); coincides with robust_envelope
/// for nondecreasing streams.
std::vector<double> snell_envelope(const Market& market, const MarketStream& stream,
                                   const StoppingRule& tau);

/// Minimal pathwise superhedging capital: V(n) = A(n) on tau-stopped nodes,
/// else max(A(n), min over delta of the worst successor of V - delta * dS).
std::vector<double> minmax_capital(const Market& market, const MarketStream& stream,
                                   const StoppingRule& tau);

struct SuperhedgeResult {
    double price = 0.0;
    std::vector<double> delta;  // per node; 0 at and below the stop
    std::vector<double> slack;  // D(n) = Y(n) - Y(root) - sum delta * dS
    double max_residual = 0.0;  // worst one-step decomposition residual
};

/// One-step optional decomposition of an envelope: the scalar delta at each
/// node solves the min-max over the successor support exactly (two-point
/// envelope over extreme asset moves). Throws NumericalError when the
/// residual exceeds 1e-10, which signals a non-saturated family.
SuperhedgeResult extract_strategy(const Market& market, const std::vector<double>& envelope,
                                  const StoppingRule& tau);

/// Robust global superhedging price E(A_T); certifies the extracted strategy
/// against all deterministic stopping dates before returning.
double global_price(const Market& market, const MarketStream& stream);

/// E_sigma(A_tau - A_sigma) per sigma-stopped node (0 elsewhere).
std::vector<double> local_price(const Market& market, const MarketStream& stream,
                                const StoppingRule& sigma, const StoppingRule& tau);

struct VerifyReport {
    double worst_violation = 0.0;  // min over paths/rules of v + gains - increment
    double nested_worst = 0.0;     // worst local (C-set) violation of the strategy
    bool ok = false;               // worst_violation >= -1e-12
};

/// Pathwise check of the superhedge across a finite test set of stopping
/// rules: all deterministic dates, plus any user-supplied rules.
VerifyReport verify_superhedge(const Market& market, const MarketStream& stream,
                               const SuperhedgeResult& result,
                               const std::vector<StoppingRule>& extra_rules = {});

struct DualityReport {
    double max_gap = 0.0;       // max over sigma atoms of capital - price
    double min_gap = 0.0;       // min over sigma atoms (weak duality: >= -1e-12)
    bool weak_only = false;     // true in the product-prior mode
    std::string mode_label;
};

/// Saturated modes: |minmax capital - envelope| at the sigma atoms, required
/// small. Product-prior mode: capital minus the product-family conditional
/// expectation of the stopped stream, reported with its sign.
DualityReport duality_gap(const Market& market, const MarketStream& stream,
                          const StoppingRule& sigma, const StoppingRule& tau);

/// Product-prior value of the stopped stream at the sigma atoms, through the
/// marked-claim representation (enlarged markets only).
std::vector<double> product_prior_value(const Market& market, const CreditModel& model,
                                        const AmbiguitySet& ambiguity, const MarketStream& stream,
                                        const StoppingRule& sigma, const StoppingRule& tau);

/// The product-prior duality report needs the underlying credit model.
DualityReport duality_gap_product(const Market& market, const CreditModel& model,
                                  const AmbiguitySet& ambiguity, const MarketStream& stream,
                                  const StoppingRule& sigma, const StoppingRule& tau);

}  // namespace robustform
