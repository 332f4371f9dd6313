#include "specdec/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace specdec {

void SyntheticFamilyConfig::validate() const {
    if (vocab_size < 2) throw std::invalid_argument("synthetic family: vocab_size must be >= 2");
    if (!(concentration > 0.0)) throw std::invalid_argument("synthetic family: concentration must be > 0");
    if (!(drafter_noise >= 0.0)) throw std::invalid_argument("synthetic family: drafter_noise must be >= 0");
    if (context_hash_depth < 1 || context_hash_depth > 8) {
        throw std::invalid_argument("synthetic family: context_hash_depth must be in 1..8");
    }
}

double log_gamma_draw(double alpha, Rng& rng) {
    if (!(alpha > 0.0)) throw std::invalid_argument("log_gamma_draw: alpha must be > 0");
    double boost = 0.0;
    if (alpha < 1.0) {
        // Gamma(a) = Gamma(a+1) * U^(1/a); the factor is applied as log U / a
        // so tiny shapes never underflow.
        boost = std::log(rng.uniform_pos()) / alpha;
        alpha += 1.0;
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = rng.normal();
        const double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        const double v = t * t * t;
        const double u = rng.uniform_pos();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return std::log(d * v) + boost;
        }
    }
}

namespace {

constexpr std::uint64_t kWeightSalt = 0x5EEDC0DEB00C5ULL;
constexpr std::uint64_t kNoiseSalt = 0xD04F7E12A5B3C9ULL;

class SyntheticOracle final : public ModelOracle {
public:
    SyntheticOracle(SyntheticFamilyConfig cfg, bool perturbed) : cfg_(cfg), perturbed_(perturbed) {}

    std::size_t vocab_size() const override { return cfg_.vocab_size; }

    CategoricalDistribution next_distribution(std::span<const TokenId> prefix) const override {
        const std::uint64_t ctx = context_hash(prefix);
        std::vector<double> lw(cfg_.vocab_size);

        Rng weight_rng(derive_seed(cfg_.seed, ctx, kWeightSalt));
        for (double& w : lw) w = log_gamma_draw(cfg_.concentration, weight_rng);

        if (perturbed_) {
            Rng noise_rng(derive_seed(cfg_.seed, ctx, kNoiseSalt));
            for (double& w : lw) w += cfg_.drafter_noise * noise_rng.normal();
        }

        // exp-normalize; heavily peaked families legitimately underflow
        // most coordinates to zero.
        const double max_lw = *std::max_element(lw.begin(), lw.end());
        for (double& w : lw) w = std::exp(w - max_lw);
        return CategoricalDistribution::from_weights(std::move(lw));
    }

private:
    std::uint64_t context_hash(std::span<const TokenId> prefix) const {
        const std::size_t depth = static_cast<std::size_t>(cfg_.context_hash_depth);
        const std::size_t n = std::min(depth, prefix.size());
        std::uint64_t h = mix_u64(0x517CC1B727220A95ULL ^ n);
        for (std::size_t i = prefix.size() - n; i < prefix.size(); ++i) {
            h = mix_u64(h ^ (static_cast<std::uint64_t>(prefix[i]) + 0x9E3779B97F4A7C15ULL));
        }
        return h;
    }

    SyntheticFamilyConfig cfg_;
    bool perturbed_;
};

} // namespace

OraclePair make_synthetic_pair(const SyntheticFamilyConfig& cfg) {
    cfg.validate();
    return OraclePair{
        std::make_shared<SyntheticOracle>(cfg, false),
        std::make_shared<SyntheticOracle>(cfg, true),
    };
}

MaxProbProfile max_prob_profile(const ModelOracle& model, std::size_t samples, Rng& rng) {
    if (samples < 1) throw std::invalid_argument("max_prob_profile: samples must be >= 1");
    constexpr std::size_t kPrefixLen = 8;
    std::vector<double> maxima;
    maxima.reserve(samples);
    TokenSequence prefix(kPrefixLen);
    for (std::size_t s = 0; s < samples; ++s) {
        for (TokenId& t : prefix) {
            t = static_cast<TokenId>(rng.next_u64() % model.vocab_size());
        }
        const auto dist = model.next_distribution(prefix);
        maxima.push_back(*std::max_element(dist.probs().begin(), dist.probs().end()));
    }
    MaxProbProfile out;
    double sum = 0.0;
    for (double m : maxima) sum += m;
    out.mean = sum / static_cast<double>(maxima.size());
    std::sort(maxima.begin(), maxima.end());
    const std::size_t n = maxima.size();
    out.median = (n % 2 == 1) ? maxima[n / 2] : 0.5 * (maxima[n / 2 - 1] + maxima[n / 2]);
    return out;
}

} // namespace specdec
