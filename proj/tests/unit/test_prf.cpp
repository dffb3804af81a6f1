#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gumbelmark/prf.hpp"
#include "support.hpp"

using namespace gumbelmark;

namespace {

struct Vector {
    TokenId token;
    std::vector<TokenId> window;
    std::uint64_t key;
    std::uint32_t raw;
    double u;
};

std::vector<Vector> load_vectors() {
    std::ifstream f(std::string(GUMBELMARK_DATA_DIR) + "/VECTORS.tsv");
    REQUIRE(f);
    std::vector<Vector> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tok, win, key, raw, u;
        std::getline(ss, tok, '\t');
        std::getline(ss, win, '\t');
        std::getline(ss, key, '\t');
        std::getline(ss, raw, '\t');
        std::getline(ss, u, '\t');
        Vector v{static_cast<TokenId>(std::stoul(tok)), {}, std::stoull(key),
                 static_cast<std::uint32_t>(std::stoul(raw)), std::stod(u)};
        std::istringstream ws(win);
        std::string w;
        while (std::getline(ws, w, ',')) v.window.push_back(static_cast<TokenId>(std::stoul(w)));
        out.push_back(v);
    }
    return out;
}

// Straight-line restatement of the hash, kept apart from the library code.
std::uint32_t reference_hash(TokenId token, const std::vector<TokenId>& window, std::uint64_t key) {
    using namespace prf_constants;
    std::uint64_t h = p2 * token;
    for (std::size_t i = 0; i < window.size(); ++i) h += q[i] * window[i];
    h += p3 * key;
    h *= p4;
    for (int round = 0; round < 3; ++round) {
        h ^= h >> 29;
        if (round < 2) h *= p_mix;
    }
    return static_cast<std::uint32_t>(h);
}

}  // namespace

TEST_SUITE("prf") {

TEST_CASE("golden vectors match the frozen table") {
    auto vectors = load_vectors();
    REQUIRE(vectors.size() >= 4);
    for (const auto& v : vectors) {
        Prf prf(static_cast<int>(v.window.size()));
        CHECK(prf.hash_raw(v.token, v.window, SecretKey{v.key}) == v.raw);
        CHECK(reference_hash(v.token, v.window, v.key) == v.raw);
        CHECK(prf.uniform(v.token, v.window, SecretKey{v.key}) == doctest::Approx(v.u).epsilon(1e-15));
    }
}

TEST_CASE("window order matters and evaluation is deterministic") {
    Prf prf(3);
    std::vector<TokenId> a{1, 2, 3}, b{3, 2, 1};
    CHECK(prf.hash_raw(7, a, SecretKey{42}) != prf.hash_raw(7, b, SecretKey{42}));
    CHECK(prf.uniform(7, a, SecretKey{42}) == prf.uniform(7, a, SecretKey{42}));
}

TEST_CASE("unit mapping excludes both endpoints") {
    CHECK(Prf::to_unit(0) == 0.5 / 4294967296.0);
    CHECK(Prf::to_unit(0) > 0.0);
    CHECK(Prf::to_unit(0xFFFFFFFFu) == (4294967296.0 - 0.5) / 4294967296.0);
    CHECK(Prf::to_unit(0xFFFFFFFFu) < 1.0);
}

TEST_CASE("a million outputs look uniform") {
    Prf prf(3);
    Rng rng(7);
    std::vector<double> u(1000000);
    std::vector<TokenId> w(3);
    for (auto& x : u) {
        for (auto& t : w) t = static_cast<TokenId>(rng.next_u64() % 50000);
        x = prf.uniform(static_cast<TokenId>(rng.next_u64() % 50000), w, SecretKey{99});
    }
    double d = ks_uniform_statistic(u);
    CHECK(d < 1.628 / std::sqrt(1e6));  // 1% critical value
}

TEST_CASE("batch evaluation equals scalar calls") {
    Prf prf(3);
    std::vector<TokenId> w{4, 5, 6};
    SecretKey key{11};
    auto one = prf_vector(prf, std::vector<TokenId>{5}, w, key);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == prf_uniform(prf, 5, w, key));

    auto ab = prf_vector(prf, std::vector<TokenId>{1, 2}, w, key);
    auto ba = prf_vector(prf, std::vector<TokenId>{2, 1}, w, key);
    CHECK(ab[0] == ba[1]);
    CHECK(ab[1] == ba[0]);

    std::vector<TokenId> cands(200);
    for (std::size_t i = 0; i < cands.size(); ++i) cands[i] = static_cast<TokenId>(i * 7919 + 13);
    auto batch = prf_vector(prf, cands, w, key);
    std::vector<double> par(cands.size());
    prf_vector_omp(prf, cands, w, key, par);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        CHECK(batch[i] == prf.uniform(cands[i], w, key));
        CHECK(par[i] == batch[i]);
    }
}

TEST_CASE("window length is checked") {
    CHECK_THROWS_AS(Prf(0), ContractError);
    CHECK_THROWS_AS(Prf(9), ContractError);
    Prf prf(3);
    std::vector<TokenId> short_window{1, 2};
    CHECK_THROWS_AS(prf.uniform(1, short_window, SecretKey{1}), ContractError);
    std::vector<TokenId> w{1, 2, 3};
    CHECK_THROWS_AS(prf_vector(prf, std::vector<TokenId>{4, 4}, w, SecretKey{1}), ContractError);
}

}
