#pragma once

#include <string>
#include <vector>

#include "robustform/g_expectation.hpp"

namespace robustform {

/// Payment at maturity contingent on no default: 1{tau > T} * Y.
struct SurvivalClaim {
    std::vector<double> payoff;  // per leaf, >= 0
};

/// Recovery paid at default: 1{0 < tau <= T} * Z_tau. Stepwise convention:
/// a default in bucket k pays the value of Z at the bucket's left-endpoint
/// ancestor node.
struct RecoveryProcess {
    std::vector<double> value;  // per node, >= 0
};

/// Cumulative annuity: payments accrue while alive. C must be nondecreasing
/// along every path with C(root) = 0; a default in bucket k settles the
/// left-endpoint value C(t_k).
struct AnnuityProcess {
    std::vector<double> cumulative;  // per node
};

struct Product {
    enum class Kind { Survival, Recovery, Annuity };
    Kind kind = Kind::Survival;
    std::string name;
    SurvivalClaim survival;
    RecoveryProcess recovery;
    AnnuityProcess annuity;
};

void validate_product(const CreditModel& model, const Product& product);

/// Marked-claim forms of the three contracts (and of the general
/// Z-until-T-else-Y payoff). The pricing operations below must coincide
/// with g_conditional applied to these claims.
MarkedClaim survival_marked_claim(const CreditModel& model, const SurvivalClaim& claim);
MarkedClaim recovery_marked_claim(const CreditModel& model, const RecoveryProcess& z, int s,
                                  int t);
MarkedClaim annuity_marked_claim(const CreditModel& model, const AnnuityProcess& c, int s, int t);
MarkedClaim product_marked_claim(const CreditModel& model, const Product& product);

/// E~_t(1{tau > T} Y) = 1{tau > t} E_t(Y exp(-(gamma_K - gamma_t))).
GValueField price_survival_claim(const CreditModel& model, const AmbiguitySet& ambiguity,
                                 const SurvivalClaim& claim, int t);

/// E~_s(1{s < tau <= t} Z_tau) on the time-s slice; exact by the stepwise
/// payment convention (no quadrature error).
GValueField price_recovery(const CreditModel& model, const AmbiguitySet& ambiguity,
                           const RecoveryProcess& z, int s, int t);

/// E~_s of the annuity flow over (s, t]: defaults settle C at the bucket's
/// left endpoint, survival to t settles C_t.
GValueField price_annuity(const CreditModel& model, const AmbiguitySet& ambiguity,
                          const AnnuityProcess& c, int s, int t);

/// Max |E~_s(E~_t(X)) - E~_s(X)| over the time-s slice for a product-class
/// claim; the classic tower property holds on this class.
double tower_check_products(const CreditModel& model, const AmbiguitySet& ambiguity,
                            const MarkedClaim& product_claim, int s, int t);

/// Cumulative payment stream of a product on the enlarged tree.
struct GPaymentStream {
    std::vector<double> cumulative;  // per g-node
};

GPaymentStream as_payment_stream(const CreditModel& model, const Product& product);

}  // namespace robustform
