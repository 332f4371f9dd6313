#pragma once

/**
 * Finite categorical distributions and the probability primitives the
 * rest of the library consumes: sampling, total variation distance,
 * residual construction, top-k extraction.
 *
 * Construction from a claimed probability vector is strict: the entries
 * must already sum to 1 within 1e-6, and are then renormalized exactly.
 * Badly scaled inputs are rejected rather than silently fixed, so an
 * oracle that emits garbage fails loudly. Unnormalized weights go
 * through from_weights() instead.
 */

#include "specdec/rng.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace specdec {

using TokenId = int;

class CategoricalDistribution {
public:
    /// Strict constructor: entries >= 0, sum within [1 - 1e-6, 1 + 1e-6].
    /// Throws std::invalid_argument otherwise. Renormalizes exactly.
    explicit CategoricalDistribution(std::vector<double> probs);

    /// Normalizes any non-negative weight vector with positive sum.
    static CategoricalDistribution from_weights(std::vector<double> weights);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    const std::vector<double>& probs() const { return probs_; }

private:
    struct normalized_tag {};
    CategoricalDistribution(std::vector<double> probs, normalized_tag) : probs_(std::move(probs)) {}

    std::vector<double> probs_;
};

/// Inverse-CDF draw over the stored order. Deterministic given the source.
TokenId sample(const CategoricalDistribution& dist, RandomSource& rng);

/// Total variation distance, (1/2) * sum |a_i - b_i|. Lengths must match.
double tvd(const CategoricalDistribution& a, const CategoricalDistribution& b);

/// normalize(max(q_i - p_i, 0)). Returns nullopt when the positive part
/// vanishes everywhere (q <= p pointwise), in which case the caller
/// cannot have rejected and should fall back to q itself.
std::optional<CategoricalDistribution> residual(const CategoricalDistribution& q,
                                                const CategoricalDistribution& p);

/// k indices in descending probability, ties broken by ascending token id.
std::vector<TokenId> top_k_indices(const CategoricalDistribution& dist, std::size_t k);

} // namespace specdec
