#pragma once

/**
 * Verification and resampling: exact speculative acceptance, the
 * additive (delta) and multiplicative (lambda) relaxations over
 * latent-codebook neighborhoods, chain verification, and tree
 * verification with residual-based sibling fallback.
 *
 * Relaxed acceptance turns min(1, q/p) into min(1, sum_A q / p), where
 * A is the refined neighborhood subset of the draft token. Rejection
 * resamples against the adjusted target, which moves the aggregated
 * neighbor mass onto the draft token, so the additive variant distorts
 * the output law by strictly less than delta in total variation and the
 * multiplicative variant never scales the accept probability by lambda
 * or more.
 *
 * Tree verification walks siblings in drafted order. Rejecting a
 * sibling folds it out of the working target: exact sampled siblings
 * subtract the renormalized drafter law they were actually drawn from
 * (the without-replacement law), deterministic or relaxed siblings are
 * conditioned out as one-hot masses. All q queries of a round count as
 * one target forward pass.
 */

#include "specdec/codebook.hpp"
#include "specdec/distributions.hpp"
#include "specdec/draft_tree.hpp"
#include "specdec/models.hpp"
#include "specdec/rng.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace specdec {

class AcceptanceRule {
public:
    enum class Kind { Exact, AdditiveRelaxed, MultiplicativeRelaxed };

    static AcceptanceRule exact();
    static AcceptanceRule additive(std::size_t k, double delta, const Codebook& codebook);
    static AcceptanceRule multiplicative(std::size_t k, double lambda, const Codebook& codebook);

    Kind kind() const { return kind_; }
    bool relaxed() const { return kind_ != Kind::Exact; }
    std::size_t neighborhood_k() const { return k_; }
    double delta() const { return delta_; }
    double lambda() const { return lambda_; }
    const Codebook* codebook() const { return codebook_; }

    /// The refined aggregation subset for a draft token under q.
    std::vector<TokenId> refined_subset(TokenId draft, const CategoricalDistribution& q) const;

    std::string describe() const;

private:
    AcceptanceRule() = default;

    Kind kind_ = Kind::Exact;
    std::size_t k_ = 0;
    double delta_ = 0.0;
    double lambda_ = 0.0;
    const Codebook* codebook_ = nullptr;
};

/// Exact: min(1, q[draft]/p_draft). Relaxed: min(1, mass(A)/p_draft).
/// p_draft must be in (0, 1]; a drafted token always has positive mass
/// under the law that drew it.
double accept_probability(const AcceptanceRule& rule, TokenId draft,
                          const CategoricalDistribution& q, double p_draft);

/// q with the aggregated neighbor mass moved onto the draft token:
/// q'[draft] = mass(A), q'[x] = 0 for x in A\{draft}, q'[x] = q[x] elsewhere.
/// For the exact rule A = {draft} and q is returned unchanged.
CategoricalDistribution adjusted_target(const AcceptanceRule& rule, TokenId draft,
                                        const CategoricalDistribution& q);

/// Diagnostic pre-min ratio of relaxed to exact acceptance,
/// mass(A)/q[draft]; 1 for the exact rule, +infinity when q[draft] = 0.
double relaxation_ratio(const AcceptanceRule& rule, TokenId draft,
                        const CategoricalDistribution& q);

struct NodeDecision {
    int node = -1; // index into the verified tree; sequential position for chains
    TokenId token = 0;
    double accept_prob = 0.0;
    bool accepted = false;
};

struct VerificationOutcome {
    std::vector<TokenId> accepted;  // accepted draft tokens, a root-connected path
    TokenId final_token = -1;       // bonus sample or rejection replacement
    bool fully_accepted = false;    // final_token came from the frontier target distribution
    int target_forward_passes = 1;  // one verification pass per round
    std::vector<NodeDecision> trace;

    std::vector<TokenId> committed() const {
        std::vector<TokenId> out = accepted;
        out.push_back(final_token);
        return out;
    }
};

struct ChainDraft {
    TokenId token = 0;
    double drafter_prob = 0.0; // recorded at draft time
};

/// Left-to-right chain verification. On the first rejection the
/// replacement is drawn from residual(adjusted_target, drafter
/// distribution); if every draft survives, a bonus token is drawn from
/// the unmodified target at the frontier.
VerificationOutcome verify_chain(const AcceptanceRule& rule, const ModelOracle& target,
                                 const ModelOracle& drafter, const TokenSequence& prefix,
                                 const std::vector<ChainDraft>& drafts, RandomSource& rng);

/// Recursive descent over the draft tree, siblings in drafted order.
VerificationOutcome verify_tree(const AcceptanceRule& rule, const ModelOracle& target,
                                const ModelOracle& drafter, const DraftTree& tree,
                                RandomSource& rng);

} // namespace specdec
