#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "doctest.h"
#include "gumbelmark/detect.hpp"
#include "gumbelmark/gamma.hpp"
#include "gumbelmark/sampling.hpp"
#include "support.hpp"

using namespace gumbelmark;
using testing_support::random_tokens;

namespace {

std::vector<bool> brute_dedup(const std::vector<TokenId>& t, std::size_t k) {
    std::set<std::vector<TokenId>> seen;
    std::vector<bool> mask(t.size(), false);
    for (std::size_t i = k; i < t.size(); ++i) mask[i] = seen.insert({t.begin() + (i - k), t.begin() + i + 1}).second;
    return mask;
}

// Keyed generation over random per-step distributions on a 40-token vocabulary.
std::vector<TokenId> keyed_text(std::size_t n, SecretKey key, std::uint64_t seed) {
    SamplerConfig c;
    c.key1 = key;
    c.repeated_context_masking = true;
    GenState s(c);
    s.reset(seed);
    Rng rng(seed ^ 0xABCDu);
    s.prime(random_tokens(rng, 3, 40));
    std::vector<TokenId> ids(40);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> w(40);
        for (auto& x : w) x = rng.exponential();
        step(s, ProbVector(ids, w), c);
    }
    return {s.history().begin() + 3, s.history().end()};
}

}  // namespace

TEST_SUITE("detect") {

TEST_CASE("deduplication") {
    std::vector<TokenId> distinct(50);
    std::iota(distinct.begin(), distinct.end(), 0);
    auto m = dedup_mask(distinct, 3);
    for (std::size_t i = 0; i < distinct.size(); ++i) CHECK(m[i] == (i >= 3));

    std::vector<TokenId> sentence{5, 9, 2, 7, 4, 1, 8, 3};
    std::vector<TokenId> twice = sentence;
    twice.insert(twice.end(), sentence.begin(), sentence.end());
    auto d = dedup_mask(twice, 3);
    for (std::size_t i = sentence.size() + 3; i < twice.size(); ++i) CHECK_FALSE(d[i]);

    Rng rng(12);
    auto text = random_tokens(rng, 10000, 6);  // small vocabulary forces repeats
    CHECK(dedup_mask(text, 3) == brute_dedup(text, 3));
    CHECK_THROWS_AS(dedup_mask(text, 0), ContractError);
}

TEST_CASE("per-token scores") {
    CHECK(-std::log1p(-0.5) == doctest::Approx(std::log(2.0)));
    Rng rng(1);
    auto text = random_tokens(rng, 300, 1000);
    std::vector<SecretKey> one{SecretKey{3}};
    auto s = score_tokens(text, one, 3, 0.0);
    Prf prf(3);
    for (std::size_t i = 3; i < text.size(); ++i) {
        std::span<const TokenId> win(text.data() + i - 3, 3);
        double u = prf.uniform(text[i], win, one[0]);
        CHECK(s.scores[i].s1 == doctest::Approx(-std::log(1.0 - u)));
    }
    std::vector<SecretKey> two{SecretKey{3}, SecretKey{4}};
    auto a = score_tokens(text, two, 3, 0.3);
    auto b = score_tokens_omp(text, two, 3, 0.3);
    for (std::size_t i = 0; i < text.size(); ++i) {
        CHECK(a.scores[i].fused == b.scores[i].fused);
        CHECK(a.scores[i].fused == doctest::Approx(0.7 * a.scores[i].s1 + 0.3 * a.scores[i].s2));
    }
}

TEST_CASE("equal scores are a fixed point of fusion") {
    ScoreSeries s;
    s.alpha = 0.5;
    TokenScore t;
    t.s1 = t.s2 = 1.7;
    t.fused = (1.0 - s.alpha) * t.s1 + s.alpha * t.s2;
    CHECK(t.fused == doctest::Approx(1.7));
    CHECK(theta_r(0.5) == doctest::Approx(0.5));
    CHECK(theta_r(0.0) == doctest::Approx(1.0));
}

TEST_CASE("null fused scores have mean 1 and variance theta_R") {
    Rng rng(6);
    auto text = random_tokens(rng, 100003, 1u << 30);
    std::vector<SecretKey> keys{SecretKey{10}, SecretKey{20}};
    auto s = score_tokens(text, keys, 3, 0.5);
    std::vector<double> f;
    for (const auto& t : s.scores)
        if (t.valid) f.push_back(t.fused);
    double n = static_cast<double>(f.size());
    double m = mean(f);
    double sd = stddev(f);
    CHECK(std::abs(m - 1.0) < 3.0 * std::sqrt(0.5 / n));
    CHECK(std::abs(sd * sd - 0.5) < 3.0 * std::sqrt(1.25 / n));
}

TEST_CASE("gamma tail") {
    CHECK(gamma_pvalue(1.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(gamma_pvalue(2.0, 2.0) == doctest::Approx(3.0 * std::exp(-2.0)).epsilon(1e-12));
    // Upper tail; the lower tail at this point is 0.5133.
    CHECK(gamma_pvalue(100.0, 100.0) == doctest::Approx(1.0 - 0.5133).epsilon(1e-4));
    CHECK(gamma_q(0.3, 0.5) == doctest::Approx(boost::math::gamma_q(0.3, 0.5)).epsilon(1e-10));
    for (double a : {1.0, 2.5, 17.0, 256.0, 4000.0}) {
        for (double ratio : {0.2, 0.8, 1.0, 1.3, 2.0, 4.0}) {
            double x = a * ratio;
            double want = std::log10(boost::math::gamma_q(a, x));
            if (!std::isfinite(want)) continue;
            INFO("a=" << a << " x=" << x);
            CHECK(log10_gamma_pvalue(x, a) == doctest::Approx(want).epsilon(1e-9));
        }
    }
    // Far tail stays finite in log space.
    CHECK(log10_gamma_pvalue(4000.0, 256.0) < -1000.0);
}

TEST_CASE("entropy weights") {
    std::vector<double> h{2.0, 6.0, 4.0};
    auto w = entropy_weights(h);
    CHECK(w[0] == doctest::Approx(0.1));
    CHECK(w[1] == doctest::Approx(1.0));
    CHECK(w[2] == doctest::Approx(0.55));
    std::vector<double> flat{3.0, 3.0};
    for (double x : entropy_weights(flat)) CHECK(x == 1.0);
}

TEST_CASE("unit weights reduce to the classical test") {
    Rng rng(8);
    auto text = random_tokens(rng, 500, 1u << 20);
    std::vector<SecretKey> keys{SecretKey{1}};
    auto s = score_tokens(text, keys, 3, 0.0);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : s.scores)
        if (t.valid) sum += t.s1, ++n;
    auto v = weighted_gamma_pvalue(s);
    CHECK(v.theta_new == doctest::Approx(1.0));
    CHECK(v.k_new == doctest::Approx(static_cast<double>(n)));
    CHECK(v.log10_p == doctest::Approx(log10_gamma_pvalue(sum, static_cast<double>(n))));
}

TEST_CASE("moment-matched fit") {
    // Two tokens with weights 1 and 0.5 under α = 0.
    auto fit = weighted_gamma_fit(2.0, 1.5, 1.25, 1.0);
    CHECK(fit.theta_new == doctest::Approx(1.25 / 1.5));
    CHECK(fit.k_new == doctest::Approx(1.5 * 1.5 / 1.25));
}

TEST_CASE("null p-values with mixed weights are uniform") {
    Rng rng(31);
    std::vector<double> p;
    for (int t = 0; t < 2000; ++t) {
        auto text = random_tokens(rng, 256, 1u << 30);
        std::vector<SecretKey> keys{SecretKey{rng.next_u64()}, SecretKey{rng.next_u64()}};
        auto s = score_tokens(text, keys, 3, 0.1);
        std::vector<double> h(text.size());
        for (auto& x : h) x = rng.uniform() * 4.0;
        apply_entropy_weights(s, h);
        p.push_back(std::pow(10.0, weighted_gamma_pvalue(s).log10_p));
    }
    CHECK(testing_support::ks_p(p) > 1e-3);
}

TEST_CASE("end to end on keyed text") {
    SecretKey key{0xC0FFEE};
    DetectConfig cfg;
    cfg.keys = {key};
    std::vector<double> right, wrong;
    Rng rng(77);
    for (int t = 0; t < 300; ++t) {
        auto text = keyed_text(400, key, 1000 + t);
        if (t < 21) right.push_back(detect(text, cfg).log10_p);
        DetectConfig other = cfg;
        other.keys = {SecretKey{rng.next_u64()}};
        wrong.push_back(std::pow(10.0, detect(text, other).log10_p));
    }
    CHECK(median(right) <= -4.0);
    CHECK(testing_support::ks_p(wrong) > 1e-3);

    std::vector<TokenId> empty;
    CHECK_THROWS_AS(detect(empty, cfg), ContractError);
    DetectConfig needs_proxy = cfg;
    needs_proxy.weighting = Weighting::entropy;
    auto text = keyed_text(50, key, 1);
    CHECK_THROWS_AS(detect(text, needs_proxy), ContractError);
}

TEST_CASE("repeating a text does not strengthen the evidence") {
    SecretKey key{99};
    DetectConfig cfg;
    cfg.keys = {key};
    auto once = keyed_text(200, key, 5);
    std::vector<TokenId> many;
    for (int r = 0; r < 10; ++r) many.insert(many.end(), once.begin(), once.end());
    auto a = detect(once, cfg);
    auto b = detect(many, cfg);
    // Only the seams add new tuples.
    CHECK(b.n_valid <= a.n_valid + 9 * 3);
    CHECK(b.log10_p > a.log10_p - 1.0);
}

}
