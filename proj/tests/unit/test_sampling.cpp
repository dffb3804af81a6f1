#include <atomic>
#include <cmath>
#include <cstdlib>
#include <new>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gumbelmark/prf.hpp"
#include "gumbelmark/prob_vector.hpp"
#include "gumbelmark/sampling.hpp"
#include "support.hpp"

using namespace gumbelmark;
using testing_support::within_sigma;

namespace {
std::atomic<bool> g_counting{false};
std::atomic<std::size_t> g_allocs{0};
}  // namespace

void* operator new(std::size_t n) {
    if (g_counting.load(std::memory_order_relaxed)) g_allocs.fetch_add(1, std::memory_order_relaxed);
    if (void* p = std::malloc(n ? n : 1)) return p;
    throw std::bad_alloc();
}
void operator delete(void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }

namespace {

ProbVector dist(std::vector<double> p, TokenId first = 0) {
    std::vector<TokenId> ids(p.size());
    std::iota(ids.begin(), ids.end(), first);
    return ProbVector(std::move(ids), std::move(p));
}

// Marginal of the keyed choice over fresh keys, fixed context.
std::vector<std::size_t> keyed_counts(const ProbVector& probs, std::size_t trials, std::uint64_t seed) {
    Prf prf(3);
    Rng rng(seed);
    std::vector<TokenId> window{10, 20, 30};
    std::vector<std::size_t> counts(probs.size(), 0);
    std::vector<double> r(probs.size());
    for (std::size_t t = 0; t < trials; ++t) {
        prf_vector(prf, probs.ids(), window, SecretKey{rng.next_u64()}, r);
        ++counts[gumbel_select(probs, r).index];
    }
    return counts;
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("decoding filters") {
    std::vector<double> flat{0.0, 0.0};
    auto p = apply_decoding_filters(flat, 1.0, 1.0);
    REQUIRE(p.size() == 2);
    CHECK(p.prob(0) == doctest::Approx(0.5));
    CHECK(p.prob(1) == doctest::Approx(0.5));

    std::vector<double> logits{std::log(0.7), std::log(0.2), std::log(0.1)};
    auto q = apply_decoding_filters(logits, 1.0, 0.85);
    REQUIRE(q.size() == 2);
    CHECK(q.prob_of(0) == doctest::Approx(7.0 / 9.0));
    CHECK(q.prob_of(1) == doctest::Approx(2.0 / 9.0));

    std::vector<double> any{1.3, -0.2, 4.0, 0.0, 2.2};
    auto full = apply_decoding_filters(any, 1.0, 1.0);
    CHECK(full.size() == any.size());
    CHECK(std::accumulate(full.probs().begin(), full.probs().end(), 0.0) == doctest::Approx(1.0));
    double z = 0.0;
    for (double l : any) z += std::exp(l);
    CHECK(full.prob_of(2) == doctest::Approx(std::exp(4.0) / z));
}

TEST_CASE("Gumbel choice follows the r^(1/p) rule") {
    auto p = dist({0.5, 0.5});
    std::vector<double> r{0.9, 0.4};
    CHECK(gumbel_select(p, r).index == 0);

    auto single = dist({1.0}, 42);
    for (double x : {0.001, 0.5, 0.999}) {
        std::vector<double> one{x};
        CHECK(gumbel_select(single, one).token == 42);
    }
}

TEST_CASE("keyed choice over fresh keys reproduces the distribution") {
    auto p = dist({0.7, 0.2, 0.1});
    const std::size_t n = 100000;
    auto counts = keyed_counts(p, n, 5);
    for (std::size_t i = 0; i < 3; ++i) CHECK(within_sigma(counts[i], n, p.prob(i)));
}

TEST_CASE("dual-key routing") {
    SamplerConfig c;
    c.strategy = Strategy::dual_key;
    GenState s(c);
    for (int i = 0; i < 1000; ++i) CHECK(s.route_key(0.0) == 1);

    s.reset(17);
    const std::size_t n = 100000;
    std::size_t twos = 0;
    std::vector<int> first;
    for (std::size_t i = 0; i < n; ++i) {
        int k = s.route_key(0.5);
        twos += k == 2;
        if (i < 64) first.push_back(k);
    }
    CHECK(within_sigma(twos, n, 0.5));
    s.reset(17);
    for (int k : first) CHECK(s.route_key(0.5) == k);
}

TEST_CASE("mixing transform") {
    CHECK(mixing_transform(0.5, true, 0.3) == doctest::Approx(0.15));
    CHECK(mixing_transform(0.5, false, 0.3) == doctest::Approx(0.65));
    Rng rng(9);
    std::vector<double> u(1000000);
    for (auto& x : u) x = mixing_transform(rng.uniform_open(), rng.bernoulli(0.3), 0.3);
    CHECK(testing_support::ks_p(u) > 0.01);
}

TEST_CASE("skip thresholds") {
    CHECK(adaptive_skip_check(0.099, 1.0, 0.1, true));
    CHECK_FALSE(adaptive_skip_check(0.101, 1.0, 0.1, true));
    // As p shrinks the threshold τ^p approaches 1.
    CHECK(adaptive_skip_check(0.99, 1e-4, 0.1, true));
    CHECK_FALSE(adaptive_skip_check(0.9999, 1e-4, 0.1, true));
    CHECK(adaptive_skip_check(0.09, 0.3, 0.1, false));
    CHECK_FALSE(adaptive_skip_check(0.2, 0.3, 0.1, false));
    CHECK_THROWS_AS(adaptive_skip_check(0.5, 0.0, 0.1, true), ContractError);
}

TEST_CASE("normalized skip fires at rate tau whatever the entropy") {
    const double tau = 0.1;
    const std::size_t n = 100000;
    std::vector<ProbVector> buckets{dist({0.97, 0.02, 0.01}), dist({0.5, 0.3, 0.2}),
                                    dist(std::vector<double>(20, 0.05))};
    Prf prf(3);
    std::vector<TokenId> window{1, 2, 3};
    for (std::size_t b = 0; b < buckets.size(); ++b) {
        const auto& p = buckets[b];
        Rng rng(100 + b);
        std::vector<double> r(p.size());
        std::size_t skipped = 0;
        for (std::size_t t = 0; t < n; ++t) {
            prf_vector(prf, p.ids(), window, SecretKey{rng.next_u64()}, r);
            auto c = gumbel_select(p, r);
            skipped += adaptive_skip_check(c.r, p.prob(c.index), tau, true);
        }
        CHECK(within_sigma(skipped, n, tau));
    }
}

TEST_CASE("degenerate and deterministic generation") {
    SamplerConfig c;
    c.key1 = SecretKey{5};
    auto single = dist({1.0}, 9);
    GenState s(c);
    for (int i = 0; i < 50; ++i) CHECK(step(s, single, c) == 9);

    c.strategy = Strategy::dual_key;
    c.key2 = SecretKey{6};
    c.alpha = 0.0;
    auto p = dist({0.4, 0.3, 0.2, 0.1});
    auto run = [&](std::uint64_t seed) {
        GenState g(c);
        g.reset(seed);
        g.prime(std::vector<TokenId>{0, 1, 2});
        std::vector<TokenId> out;
        for (int i = 0; i < 100; ++i) out.push_back(step(g, p, c));
        return out;
    };
    CHECK(run(1) == run(1));
    // With α = 0 the only randomness is the key, so the seed is irrelevant.
    CHECK(run(1) == run(2));
}

TEST_CASE("config validation") {
    SamplerConfig c;
    c.k = 0;
    CHECK_THROWS_AS(c.validate(), ContractError);
    c = SamplerConfig{};
    c.strategy = Strategy::dual_key;
    c.alpha = 0.9;
    CHECK_THROWS_AS(c.validate(), ContractError);
    c = SamplerConfig{};
    c.top_p = 0.0;
    CHECK_THROWS_AS(c.validate(), ContractError);
    CHECK(parse_strategy(strategy_name(Strategy::entropy_skip)) == Strategy::entropy_skip);
    CHECK_THROWS_AS(parse_strategy("nope"), ContractError);
}

TEST_CASE("PRF calls per step never exceed the survivors") {
    SamplerConfig c;
    c.key1 = SecretKey{1};
    c.key2 = SecretKey{2};
    auto p = dist(std::vector<double>(37, 1.0 / 37.0));
    for (Strategy st : {Strategy::single_key, Strategy::dual_key, Strategy::mixing, Strategy::entropy_skip}) {
        c.strategy = st;
        c.alpha = st == Strategy::dual_key ? 0.25 : 0.0;
        GenState s(c);
        s.prime(std::vector<TokenId>{1, 2, 3});
        for (int i = 0; i < 200; ++i) {
            auto before = prf_call_count();
            step(s, p, c);
            auto used = prf_call_count() - before;
            CHECK(used <= p.size());
            CHECK(used > 0);
        }
    }
}

TEST_CASE("steady-state steps do not allocate") {
    auto p = dist(std::vector<double>(64, 1.0 / 64.0));
    for (Strategy st : {Strategy::single_key, Strategy::dual_key, Strategy::mixing, Strategy::periodic_skip,
                        Strategy::entropy_skip, Strategy::adaptive_skip, Strategy::tournament}) {
        SamplerConfig c;
        c.strategy = st;
        c.key1 = SecretKey{3};
        c.key2 = SecretKey{4};
        c.alpha = st == Strategy::dual_key || st == Strategy::periodic_skip ? 0.25 : 0.0;
        GenState s(c);
        s.reserve(10000, p.size());
        s.prime(std::vector<TokenId>{1, 2, 3});
        for (int i = 0; i < 100; ++i) step(s, p, c);
        g_allocs = 0;
        g_counting = true;
        for (int i = 0; i < 1000; ++i) step(s, p, c);
        g_counting = false;
        INFO(strategy_name(st));
        CHECK(g_allocs.load() == 0);
    }
}

}
