#pragma once

/**
 * Abstract autoregressive model-oracle contract shared by target and
 * drafter, plus a synthetic family whose dispersion (how flat the
 * next-token distribution is) and drafter-target alignment are knobs.
 *
 * A synthetic oracle maps the trailing context window through a hash
 * into a seeded generator and draws Dirichlet-style log-weights, so the
 * context space is unbounded, memory is O(1), and replay is exact. Low
 * concentration gives a sharp single-token peak (language-like), high
 * concentration disperses mass (visual-like). The drafter perturbs the
 * target's log-weights with seeded Gaussian noise of a configurable
 * scale, making alignment a controlled variable.
 */

#include "specdec/distributions.hpp"
#include "specdec/rng.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace specdec {

using TokenSequence = std::vector<TokenId>;

class ModelOracle {
public:
    virtual ~ModelOracle() = default;

    virtual std::size_t vocab_size() const = 0;

    /// Pure function of the prefix: same prefix, same distribution, bit-exact.
    virtual CategoricalDistribution next_distribution(std::span<const TokenId> prefix) const = 0;
};

struct SyntheticFamilyConfig {
    std::size_t vocab_size = 1024;
    double concentration = 0.05; // Dirichlet-style; low => peaked, high => dispersed
    double drafter_noise = 0.5;  // log-space Gaussian scale of drafter vs target
    int context_hash_depth = 4;  // trailing tokens that determine the distribution, 1..8
    std::uint64_t seed = 0;

    void validate() const;
};

struct OraclePair {
    std::shared_ptr<const ModelOracle> target;
    std::shared_ptr<const ModelOracle> drafter;
};

/// Target plus its noise-perturbed drafter; both pure and replayable.
OraclePair make_synthetic_pair(const SyntheticFamilyConfig& cfg);

struct MaxProbProfile {
    double mean = 0.0;
    double median = 0.0;
};

/// Mean/median of the max next-token probability over randomly drawn prefixes.
MaxProbProfile max_prob_profile(const ModelOracle& model, std::size_t samples, Rng& rng);

/// Log of a Gamma(alpha) draw, stable down to very small alpha
/// (Marsaglia-Tsang with the boost trick applied in log space).
double log_gamma_draw(double alpha, Rng& rng);

} // namespace specdec
