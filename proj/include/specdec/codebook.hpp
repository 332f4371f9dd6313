#pragma once

/**
 * Latent code vectors per token and the neighborhood machinery used by
 * relaxed acceptance: k-nearest-neighbor sets B_k and the refined
 * aggregation subsets selected under an additive (delta) or
 * multiplicative (lambda) mass bound.
 *
 * Neighbor orderings are precomputed once per codebook (squared
 * Euclidean metric, distance ties broken by ascending token id) and are
 * immutable afterwards, so codebooks are safe to share across parallel
 * sessions.
 */

#include "specdec/distributions.hpp"
#include "specdec/rng.hpp"

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace specdec {

struct NeighborSet {
    TokenId center = 0;
    std::vector<TokenId> members; // nearest first, center always at position 0
};

class Codebook {
public:
    /// codes[t] is the latent vector of token t; all vectors share dimension d >= 1.
    explicit Codebook(std::vector<std::vector<double>> codes);

    /// Uniform random points in [0,1)^dim with a seeded generator.
    static Codebook synthetic(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

    /// Text format: header "V d", then V lines of d space-separated decimals.
    static Codebook load(std::istream& in);
    void save(std::ostream& out) const;

    std::size_t size() const { return codes_.size(); }
    std::size_t dim() const { return codes_.empty() ? 0 : codes_[0].size(); }
    const std::vector<double>& code(TokenId t) const { return codes_[static_cast<std::size_t>(t)]; }

    double squared_distance(TokenId a, TokenId b) const;

    /// Center plus its k-1 nearest tokens. 1 <= k <= V.
    NeighborSet nearest_neighbors(TokenId center, std::size_t k) const;

private:
    std::vector<std::vector<double>> codes_;
    std::vector<std::vector<TokenId>> neighbor_order_; // per token, all tokens sorted by (distance, id)
};

/// Greedy nearest-first scan over non-center members: admit members while the
/// aggregated mass of admitted members plus the candidate stays strictly
/// below delta; stop at the first violation. The center is always included.
std::vector<TokenId> refined_subset_additive(const NeighborSet& neigh,
                                             const CategoricalDistribution& q,
                                             double delta);

/// Greedy nearest-first scan with the center's own mass in the running sum:
/// admit members while sum + q[m] < lambda * q[center]; stop at the first
/// violation. The center is always included.
std::vector<TokenId> refined_subset_multiplicative(const NeighborSet& neigh,
                                                   const CategoricalDistribution& q,
                                                   double lambda);

/// Sum of q over the subset.
double aggregated_mass(const std::vector<TokenId>& subset, const CategoricalDistribution& q);

} // namespace specdec
