#include "specdec/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace specdec {

Codebook::Codebook(std::vector<std::vector<double>> codes) : codes_(std::move(codes)) {
    if (codes_.empty()) throw std::invalid_argument("codebook must contain at least one code");
    const std::size_t d = codes_[0].size();
    if (d < 1) throw std::invalid_argument("codebook dimension must be >= 1");
    for (std::size_t t = 0; t < codes_.size(); ++t) {
        if (codes_[t].size() != d) {
            throw std::invalid_argument("codebook vector " + std::to_string(t) +
                                        " has dimension " + std::to_string(codes_[t].size()) +
                                        ", expected " + std::to_string(d));
        }
    }

    // Precompute the full neighbor ordering per token; B_k queries are
    // prefix reads on the hot verification path.
    const auto v = codes_.size();
    neighbor_order_.resize(v);
    std::vector<double> dist(v);
    for (std::size_t c = 0; c < v; ++c) {
        for (std::size_t t = 0; t < v; ++t) {
            dist[t] = squared_distance(static_cast<TokenId>(c), static_cast<TokenId>(t));
        }
        auto& order = neighbor_order_[c];
        order.resize(v);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
            const double da = dist[static_cast<std::size_t>(a)];
            const double db = dist[static_cast<std::size_t>(b)];
            if (da != db) return da < db;
            return a < b;
        });
        // Self-distance is 0, so the center lands first except when another
        // token shares its coordinates and a smaller id; force it to front.
        auto self = std::find(order.begin(), order.end(), static_cast<TokenId>(c));
        std::rotate(order.begin(), self, self + 1);
    }
}

Codebook Codebook::synthetic(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
    if (vocab_size < 1 || dim < 1) {
        throw std::invalid_argument("synthetic codebook needs vocab_size >= 1 and dim >= 1");
    }
    Rng rng(seed);
    std::vector<std::vector<double>> codes(vocab_size, std::vector<double>(dim));
    for (auto& vec : codes) {
        for (double& x : vec) x = rng.uniform01();
    }
    return Codebook(std::move(codes));
}

Codebook Codebook::load(std::istream& in) {
    std::size_t v = 0, d = 0;
    if (!(in >> v >> d)) throw std::runtime_error("codebook: malformed header, expected \"V d\"");
    if (v < 1 || d < 1) throw std::runtime_error("codebook: header must have V >= 1 and d >= 1");
    std::vector<std::vector<double>> codes(v, std::vector<double>(d));
    for (std::size_t t = 0; t < v; ++t) {
        for (std::size_t j = 0; j < d; ++j) {
            if (!(in >> codes[t][j])) {
                throw std::runtime_error("codebook: truncated at code " + std::to_string(t));
            }
        }
    }
    return Codebook(std::move(codes));
}

void Codebook::save(std::ostream& out) const {
    out << size() << ' ' << dim() << '\n';
    std::ostringstream line;
    line.precision(17);
    for (const auto& vec : codes_) {
        line.str("");
        for (std::size_t j = 0; j < vec.size(); ++j) {
            if (j) line << ' ';
            line << vec[j];
        }
        out << line.str() << '\n';
    }
}

double Codebook::squared_distance(TokenId a, TokenId b) const {
    const auto& va = codes_[static_cast<std::size_t>(a)];
    const auto& vb = codes_[static_cast<std::size_t>(b)];
    double acc = 0.0;
    for (std::size_t j = 0; j < va.size(); ++j) {
        const double diff = va[j] - vb[j];
        acc += diff * diff;
    }
    return acc;
}

NeighborSet Codebook::nearest_neighbors(TokenId center, std::size_t k) const {
    if (center < 0 || static_cast<std::size_t>(center) >= size()) {
        throw std::invalid_argument("nearest_neighbors: center out of range");
    }
    if (k < 1 || k > size()) {
        throw std::invalid_argument("nearest_neighbors: k=" + std::to_string(k) +
                                    " out of range for V=" + std::to_string(size()));
    }
    const auto& order = neighbor_order_[static_cast<std::size_t>(center)];
    NeighborSet out;
    out.center = center;
    out.members.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    return out;
}

std::vector<TokenId> refined_subset_additive(const NeighborSet& neigh,
                                             const CategoricalDistribution& q,
                                             double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("refined_subset_additive: delta must be > 0");
    std::vector<TokenId> subset{neigh.center};
    double added = 0.0;
    for (std::size_t i = 1; i < neigh.members.size(); ++i) {
        const TokenId m = neigh.members[i];
        const double mass = q[static_cast<std::size_t>(m)];
        if (!(added + mass < delta)) break;
        added += mass;
        subset.push_back(m);
    }
    return subset;
}

std::vector<TokenId> refined_subset_multiplicative(const NeighborSet& neigh,
                                                   const CategoricalDistribution& q,
                                                   double lambda) {
    if (!(lambda > 1.0)) throw std::invalid_argument("refined_subset_multiplicative: lambda must be > 1");
    std::vector<TokenId> subset{neigh.center};
    const double bound = lambda * q[static_cast<std::size_t>(neigh.center)];
    double sum = q[static_cast<std::size_t>(neigh.center)];
    for (std::size_t i = 1; i < neigh.members.size(); ++i) {
        const TokenId m = neigh.members[i];
        const double mass = q[static_cast<std::size_t>(m)];
        if (!(sum + mass < bound)) break;
        sum += mass;
        subset.push_back(m);
    }
    return subset;
}

double aggregated_mass(const std::vector<TokenId>& subset, const CategoricalDistribution& q) {
    if (subset.empty()) throw std::invalid_argument("aggregated_mass: empty subset");
    double acc = 0.0;
    for (TokenId t : subset) {
        if (t < 0 || static_cast<std::size_t>(t) >= q.size()) {
            throw std::invalid_argument("aggregated_mass: token id out of range");
        }
        acc += q[static_cast<std::size_t>(t)];
    }
    return acc;
}

} // namespace specdec
