#include <doctest.h>

#include "specdec/distributions.hpp"
#include "specdec/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace specdec;

namespace {

CategoricalDistribution random_dist(Rng& rng, std::size_t v) {
    std::vector<double> w(v);
    for (double& x : w) x = rng.uniform_pos();
    return CategoricalDistribution::from_weights(std::move(w));
}

} // namespace

TEST_CASE("strict construction validates and normalizes") {
    CHECK_THROWS_AS(CategoricalDistribution({0.5, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS(CategoricalDistribution({0.7, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS(CategoricalDistribution({-0.1, 1.1}), std::invalid_argument);
    CHECK_THROWS_AS(CategoricalDistribution(std::vector<double>{}), std::invalid_argument);

    // within the 1e-6 band the vector is renormalized exactly
    const CategoricalDistribution d({0.5 + 2e-7, 0.5});
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) sum += d[i];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("from_weights normalizes arbitrary nonnegative vectors") {
    const auto d = CategoricalDistribution::from_weights({2.0, 6.0});
    CHECK(d[0] == doctest::Approx(0.25));
    CHECK(d[1] == doctest::Approx(0.75));
    CHECK_THROWS_AS(CategoricalDistribution::from_weights({0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("sample: degenerate distribution returns its atom for every seed") {
    const CategoricalDistribution d({1.0, 0.0, 0.0});
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 31337ULL}) {
        Rng rng(seed);
        for (int i = 0; i < 32; ++i) CHECK(sample(d, rng) == 0);
    }
}

TEST_CASE("sample: fair coin frequency over 1e6 draws") {
    const CategoricalDistribution d({0.5, 0.5});
    Rng rng(42);
    std::size_t zeros = 0;
    constexpr std::size_t n = 1000000;
    for (std::size_t i = 0; i < n; ++i) {
        if (sample(d, rng) == 0) ++zeros;
    }
    const double freq = static_cast<double>(zeros) / n;
    CHECK(freq >= 0.497);
    CHECK(freq <= 0.503);
}

TEST_CASE("sample: fixed seed replays identical sequences") {
    const CategoricalDistribution d({0.2, 0.3, 0.5});
    Rng a(123), b(123);
    for (int i = 0; i < 1000; ++i) CHECK(sample(d, a) == sample(d, b));
}

TEST_CASE("sample: chi-square goodness of fit at significance 0.001") {
    // V = 16, df = 15, critical value 37.697
    Rng setup(7);
    const auto d = random_dist(setup, 16);
    Rng rng(99);
    constexpr std::size_t n = 1000000;
    std::vector<std::size_t> counts(16, 0);
    for (std::size_t i = 0; i < n; ++i) counts[static_cast<std::size_t>(sample(d, rng))]++;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
        const double expected = d[i] * n;
        const double diff = counts[i] - expected;
        chi2 += diff * diff / expected;
    }
    CHECK(chi2 < 37.697);
}

TEST_CASE("tvd: identities and hand values") {
    const CategoricalDistribution a({0.5, 0.3, 0.2});
    const CategoricalDistribution b({0.2, 0.3, 0.5});
    CHECK(tvd(a, a) == 0.0);
    CHECK(tvd(a, b) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(tvd(CategoricalDistribution({1.0, 0.0}), CategoricalDistribution({0.0, 1.0})) == 1.0);
    CHECK_THROWS_AS(tvd(a, CategoricalDistribution({0.5, 0.5})), std::invalid_argument);
}

TEST_CASE("tvd: symmetry and triangle inequality on random triples") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t v = 2 + rng.next_u64() % 12;
        const auto a = random_dist(rng, v);
        const auto b = random_dist(rng, v);
        const auto c = random_dist(rng, v);
        CHECK(tvd(a, b) == doctest::Approx(tvd(b, a)).epsilon(1e-12));
        CHECK(tvd(a, c) <= tvd(a, b) + tvd(b, c) + 1e-12);
        CHECK(tvd(a, b) >= 0.0);
        CHECK(tvd(a, b) <= 1.0 + 1e-12);
    }
}

TEST_CASE("residual: hand values") {
    const auto r1 = residual(CategoricalDistribution({0.6, 0.4}), CategoricalDistribution({0.2, 0.8}));
    REQUIRE(r1.has_value());
    CHECK((*r1)[0] == doctest::Approx(1.0));
    CHECK((*r1)[1] == doctest::Approx(0.0));

    const auto r2 = residual(CategoricalDistribution({0.5, 0.3, 0.2}),
                             CategoricalDistribution({0.1, 0.5, 0.4}));
    REQUIRE(r2.has_value());
    CHECK((*r2)[0] == doctest::Approx(1.0));

    const auto r3 = residual(CategoricalDistribution({0.5, 0.4, 0.1}),
                             CategoricalDistribution({0.1, 0.2, 0.7}));
    REQUIRE(r3.has_value());
    CHECK((*r3)[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK((*r3)[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK((*r3)[2] == 0.0);
}

TEST_CASE("residual: undefined when q <= p pointwise, zero mass where q <= p") {
    const CategoricalDistribution q({0.25, 0.25, 0.5});
    CHECK_FALSE(residual(q, q).has_value());

    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t v = 2 + rng.next_u64() % 10;
        const auto a = random_dist(rng, v);
        const auto b = random_dist(rng, v);
        const auto res = residual(a, b);
        if (!res) continue;
        for (std::size_t i = 0; i < v; ++i) {
            if (a[i] <= b[i]) CHECK((*res)[i] == 0.0);
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < v; ++i) sum += (*res)[i];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("top_k_indices: ordering and ties") {
    const CategoricalDistribution a({0.1, 0.7, 0.2});
    CHECK(top_k_indices(a, 2) == std::vector<TokenId>{1, 2});
    const CategoricalDistribution uniform({0.25, 0.25, 0.25, 0.25});
    CHECK(top_k_indices(uniform, 2) == std::vector<TokenId>{0, 1});
    const CategoricalDistribution b({0.05, 0.9, 0.05});
    CHECK(top_k_indices(b, 1) == std::vector<TokenId>{1});
    CHECK_THROWS_AS(top_k_indices(a, 0), std::invalid_argument);
    CHECK_THROWS_AS(top_k_indices(a, 4), std::invalid_argument);
}

TEST_CASE("rng replay determinism across values and uniforms") {
    Rng a(0xDEADBEEF), b(0xDEADBEEF);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
        CHECK(a.uniform01() == b.uniform01());
        CHECK(a.normal() == b.normal());
    }
    const double u = Rng(1).uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
}
