#include "specdec/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace specdec {

namespace {

void check_nonnegative(const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
            throw std::invalid_argument("distribution entry " + std::to_string(i) +
                                        " is negative or non-finite");
        }
    }
}

} // namespace

CategoricalDistribution::CategoricalDistribution(std::vector<double> probs) {
    if (probs.empty()) {
        throw std::invalid_argument("distribution must have at least one entry");
    }
    check_nonnegative(probs);
    const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument("probability vector sums to " + std::to_string(sum) +
                                    ", expected 1 within 1e-6");
    }
    for (double& p : probs) p /= sum;
    probs_ = std::move(probs);
}

CategoricalDistribution CategoricalDistribution::from_weights(std::vector<double> weights) {
    if (weights.empty()) {
        throw std::invalid_argument("weight vector must have at least one entry");
    }
    check_nonnegative(weights);
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        throw std::invalid_argument("weight vector must have positive finite sum");
    }
    for (double& w : weights) w /= sum;
    return CategoricalDistribution(std::move(weights), normalized_tag{});
}

TokenId sample(const CategoricalDistribution& dist, RandomSource& rng) {
    const double u = rng.uniform01();
    double cum = 0.0;
    TokenId last_positive = -1;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double p = dist[i];
        if (p > 0.0) last_positive = static_cast<TokenId>(i);
        cum += p;
        if (u < cum) return static_cast<TokenId>(i);
    }
    // u landed on accumulated rounding slack; return the last live token.
    if (last_positive < 0) throw std::logic_error("sample from all-zero distribution");
    return last_positive;
}

double tvd(const CategoricalDistribution& a, const CategoricalDistribution& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("tvd: length mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return 0.5 * acc;
}

std::optional<CategoricalDistribution> residual(const CategoricalDistribution& q,
                                                const CategoricalDistribution& p) {
    if (q.size() != p.size()) {
        throw std::invalid_argument("residual: length mismatch");
    }
    std::vector<double> pos(q.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        pos[i] = std::max(q[i] - p[i], 0.0);
        sum += pos[i];
    }
    if (sum <= 0.0) return std::nullopt;
    return CategoricalDistribution::from_weights(std::move(pos));
}

std::vector<TokenId> top_k_indices(const CategoricalDistribution& dist, std::size_t k) {
    if (k < 1 || k > dist.size()) {
        throw std::invalid_argument("top_k_indices: k=" + std::to_string(k) +
                                    " out of range for V=" + std::to_string(dist.size()));
    }
    std::vector<TokenId> ids(dist.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                      [&](TokenId a, TokenId b) {
                          if (dist[static_cast<std::size_t>(a)] != dist[static_cast<std::size_t>(b)])
                              return dist[static_cast<std::size_t>(a)] > dist[static_cast<std::size_t>(b)];
                          return a < b;
                      });
    ids.resize(k);
    return ids;
}

} // namespace specdec
