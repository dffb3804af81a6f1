#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gumbelmark/prob_vector.hpp"
#include "gumbelmark/toylm.hpp"

using namespace gumbelmark;

TEST_SUITE("toylm") {

TEST_CASE("bigram counts with additive smoothing") {
    for (double lambda : {0.1, 1.0, 3.0}) {
        auto m = train_ngram("abab", 1, lambda);
        REQUIRE(m.vocab_size() == 2);
        auto a = m.encode("a");
        std::vector<double> p(2);
        m.next_probs(a, 1.0, p);
        TokenId b = m.encode("b")[0];
        CHECK(p[b] == doctest::Approx((2.0 + lambda) / (2.0 + lambda * 2.0)));
    }
}

TEST_CASE("unigram model ignores context") {
    auto m = train_ngram("aaab", 0, 1.0);
    std::vector<double> p(2), q(2);
    m.next_probs(std::vector<TokenId>{}, 1.0, p);
    m.next_probs(m.encode("bbb"), 1.0, q);
    TokenId a = m.encode("a")[0];
    CHECK(p[a] == doctest::Approx(4.0 / 6.0));
    CHECK(q == p);
}

TEST_CASE("limits") {
    auto huge = train_ngram("the cat sat on the mat", 2, 1e9);
    auto p = next_dist(huge, huge.encode("th"), 1.0);
    for (double x : p.probs()) CHECK(x == doctest::Approx(1.0 / huge.vocab_size()).epsilon(1e-6));

    auto m = train_ngram("the cat sat on the mat", 2, 0.1);
    auto ctx = m.encode("th");
    auto raw = next_dist(m, ctx, 1.0);
    auto cold = next_dist(m, ctx, 0.01);
    TokenId e = m.encode("e")[0];
    CHECK(cold.prob_of(e) > 0.999);
    CHECK(raw.prob_of(e) == doctest::Approx((2.0 + 0.1) / (2.0 + 0.1 * m.vocab_size())));
    CHECK_THROWS_AS(next_dist(m, ctx, 0.0), ContractError);
}

TEST_CASE("entropy") {
    CHECK(entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
    CHECK(entropy(std::vector<double>{1.0, 0.0}) == 0.0);
    CHECK(entropy(std::vector<double>{0.5, 0.25, 0.25}) == doctest::Approx(1.5 * std::log(2.0)));

    auto m = train_ngram("she sells sea shells by the sea shore", 3, 0.5);
    auto ctx = m.encode("sea");
    auto p = next_dist(m, ctx, 0.8);
    double direct = 0.0;
    for (double x : p.probs()) direct -= x * std::log(x);
    CHECK(entropy(p) == doctest::Approx(direct));
}

TEST_CASE("save and load round trip") {
    auto m = train_ngram("round and round the garden", 3, 0.2);
    auto path = (std::filesystem::temp_directory_path() / "gumbelmark_toylm_roundtrip.json").string();
    m.save(path);
    auto back = ToyModel::load(path);
    std::filesystem::remove(path);
    CHECK(back.order() == m.order());
    CHECK(back.vocab() == m.vocab());
    auto text = m.encode("round the gar");
    for (std::size_t i = 0; i <= text.size(); ++i) {
        std::span<const TokenId> ctx(text.data(), i);
        auto a = next_dist(m, ctx, 0.7), b = next_dist(back, ctx, 0.7);
        CHECK(a.probs() == b.probs());
    }
    CHECK_THROWS(m.encode("#"));
    CHECK_THROWS_AS(train_ngram("abc", 9, 1.0), ContractError);
}

}
