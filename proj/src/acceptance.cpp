#include "specdec/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace specdec {

AcceptanceRule AcceptanceRule::exact() {
    AcceptanceRule rule;
    rule.kind_ = Kind::Exact;
    return rule;
}

AcceptanceRule AcceptanceRule::additive(std::size_t k, double delta, const Codebook& codebook) {
    if (k < 1) throw std::invalid_argument("additive rule: k must be >= 1");
    if (!(delta > 0.0)) throw std::invalid_argument("additive rule: delta must be > 0");
    AcceptanceRule rule;
    rule.kind_ = Kind::AdditiveRelaxed;
    rule.k_ = k;
    rule.delta_ = delta;
    rule.codebook_ = &codebook;
    return rule;
}

AcceptanceRule AcceptanceRule::multiplicative(std::size_t k, double lambda, const Codebook& codebook) {
    if (k < 1) throw std::invalid_argument("multiplicative rule: k must be >= 1");
    if (!(lambda > 1.0)) throw std::invalid_argument("multiplicative rule: lambda must be > 1");
    AcceptanceRule rule;
    rule.kind_ = Kind::MultiplicativeRelaxed;
    rule.k_ = k;
    rule.lambda_ = lambda;
    rule.codebook_ = &codebook;
    return rule;
}

std::vector<TokenId> AcceptanceRule::refined_subset(TokenId draft,
                                                    const CategoricalDistribution& q) const {
    if (kind_ == Kind::Exact) return {draft};
    if (codebook_ == nullptr) throw std::logic_error("relaxed rule has no codebook");
    if (codebook_->size() != q.size()) {
        throw std::invalid_argument("relaxed rule: codebook size " + std::to_string(codebook_->size()) +
                                    " does not match vocabulary " + std::to_string(q.size()));
    }
    const NeighborSet neigh = codebook_->nearest_neighbors(draft, std::min(k_, codebook_->size()));
    return kind_ == Kind::AdditiveRelaxed ? refined_subset_additive(neigh, q, delta_)
                                          : refined_subset_multiplicative(neigh, q, lambda_);
}

std::string AcceptanceRule::describe() const {
    std::ostringstream out;
    switch (kind_) {
    case Kind::Exact: out << "exact"; break;
    case Kind::AdditiveRelaxed: out << "additive(k=" << k_ << ",delta=" << delta_ << ")"; break;
    case Kind::MultiplicativeRelaxed: out << "multiplicative(k=" << k_ << ",lambda=" << lambda_ << ")"; break;
    }
    return out.str();
}

double accept_probability(const AcceptanceRule& rule, TokenId draft,
                          const CategoricalDistribution& q, double p_draft) {
    if (!(p_draft > 0.0) || p_draft > 1.0 + 1e-12) {
        throw std::invalid_argument("accept_probability: p_draft must be in (0, 1], got " +
                                    std::to_string(p_draft));
    }
    if (draft < 0 || static_cast<std::size_t>(draft) >= q.size()) {
        throw std::invalid_argument("accept_probability: draft token out of range");
    }
    double numerator;
    if (rule.relaxed()) {
        numerator = aggregated_mass(rule.refined_subset(draft, q), q);
    } else {
        numerator = q[static_cast<std::size_t>(draft)];
    }
    return std::min(1.0, numerator / p_draft);
}

CategoricalDistribution adjusted_target(const AcceptanceRule& rule, TokenId draft,
                                        const CategoricalDistribution& q) {
    if (!rule.relaxed()) return q;
    const auto subset = rule.refined_subset(draft, q);
    std::vector<double> adjusted = q.probs();
    double mass = 0.0;
    for (TokenId t : subset) {
        mass += adjusted[static_cast<std::size_t>(t)];
        adjusted[static_cast<std::size_t>(t)] = 0.0;
    }
    adjusted[static_cast<std::size_t>(draft)] = mass;
    return CategoricalDistribution::from_weights(std::move(adjusted));
}

double relaxation_ratio(const AcceptanceRule& rule, TokenId draft,
                        const CategoricalDistribution& q) {
    if (!rule.relaxed()) return 1.0;
    const double center = q[static_cast<std::size_t>(draft)];
    if (center <= 0.0) return std::numeric_limits<double>::infinity();
    return aggregated_mass(rule.refined_subset(draft, q), q) / center;
}

namespace {

/// Replacement draw after a rejection: the residual of `adjusted` against
/// `drawn_from`, falling back to `adjusted` itself when the positive part
/// vanishes (reachable only with probability zero, since a vanishing
/// residual forces acceptance probability one).
TokenId sample_residual_or(const CategoricalDistribution& adjusted,
                           const CategoricalDistribution& drawn_from, RandomSource& rng) {
    const auto res = residual(adjusted, drawn_from);
    return sample(res ? *res : adjusted, rng);
}

CategoricalDistribution one_hot(std::size_t size, TokenId token) {
    std::vector<double> probs(size, 0.0);
    probs[static_cast<std::size_t>(token)] = 1.0;
    return CategoricalDistribution::from_weights(std::move(probs));
}

/// The without-replacement law a sampled sibling was drawn from: the
/// drafter distribution with every earlier sibling's token removed.
CategoricalDistribution sibling_draw_law(const CategoricalDistribution& drafter_dist,
                                         const std::vector<int>& siblings,
                                         std::size_t position, const DraftTree& tree) {
    std::vector<double> weights = drafter_dist.probs();
    for (std::size_t j = 0; j < position; ++j) {
        weights[static_cast<std::size_t>(
            tree.nodes[static_cast<std::size_t>(siblings[j])].token)] = 0.0;
    }
    return CategoricalDistribution::from_weights(std::move(weights));
}

} // namespace

VerificationOutcome verify_chain(const AcceptanceRule& rule, const ModelOracle& target,
                                 const ModelOracle& drafter, const TokenSequence& prefix,
                                 const std::vector<ChainDraft>& drafts, RandomSource& rng) {
    if (drafts.empty()) throw std::invalid_argument("verify_chain: drafts must be nonempty");
    VerificationOutcome outcome;
    TokenSequence current = prefix;
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        const auto q = target.next_distribution(current);
        const double alpha = accept_probability(rule, drafts[i].token, q, drafts[i].drafter_prob);
        const bool accept = rng.uniform01() < alpha;
        outcome.trace.push_back(NodeDecision{static_cast<int>(i), drafts[i].token, alpha, accept});
        if (!accept) {
            const auto adjusted = adjusted_target(rule, drafts[i].token, q);
            const auto p = drafter.next_distribution(current);
            outcome.final_token = sample_residual_or(adjusted, p, rng);
            return outcome;
        }
        outcome.accepted.push_back(drafts[i].token);
        current.push_back(drafts[i].token);
    }
    outcome.final_token = sample(target.next_distribution(current), rng);
    outcome.fully_accepted = true;
    return outcome;
}

VerificationOutcome verify_tree(const AcceptanceRule& rule, const ModelOracle& target,
                                const ModelOracle& drafter, const DraftTree& tree,
                                RandomSource& rng) {
    if (tree.nodes.empty()) throw std::invalid_argument("verify_tree: tree has no draft nodes");
    VerificationOutcome outcome;

    TokenSequence current = tree.prefix;
    const std::vector<int>* siblings = &tree.roots;
    CategoricalDistribution working = target.next_distribution(current);

    for (;;) {
        bool descended = false;
        for (std::size_t j = 0; j < siblings->size(); ++j) {
            const int idx = (*siblings)[j];
            const DraftNode& node = tree.nodes[static_cast<std::size_t>(idx)];

            // Exact sampled siblings are judged against the law that actually
            // drew them; deterministic picks carry draw_prob 1 (the p=1
            // convention), and relaxed rules divide by the recorded drafter
            // probability as the relaxation formula does.
            const bool deterministic = node.draw_prob >= 1.0;
            const double denom = (!rule.relaxed() || deterministic) ? node.draw_prob
                                                                    : node.drafter_prob;
            const double alpha = accept_probability(rule, node.token, working, denom);
            const bool accept = rng.uniform01() < alpha;
            outcome.trace.push_back(NodeDecision{idx, node.token, alpha, accept});

            if (accept) {
                outcome.accepted.push_back(node.token);
                current.push_back(node.token);
                siblings = &tree.children[static_cast<std::size_t>(idx)];
                if (!siblings->empty()) working = target.next_distribution(current);
                descended = true;
                break;
            }

            // Fold the rejected sibling out of the working target.
            CategoricalDistribution effective = one_hot(working.size(), node.token);
            if (!rule.relaxed() && !deterministic) {
                effective = sibling_draw_law(drafter.next_distribution(current),
                                             *siblings, j, tree);
            }
            if (auto res = residual(working, effective)) working = std::move(*res);
        }
        if (!descended) {
            outcome.final_token = sample(working, rng);
            return outcome;
        }
        if (siblings->empty()) {
            outcome.final_token = sample(target.next_distribution(current), rng);
            outcome.fully_accepted = true;
            return outcome;
        }
    }
}

} // namespace specdec
