#include <cmath>
#include <vector>

#include "doctest.h"
#include "gumbelmark/gamma.hpp"
#include "gumbelmark/localize.hpp"
#include "support.hpp"

using namespace gumbelmark;

namespace {

// Unit-weight series with exponential scores; positions in [lo, hi) get the
// given mean, the rest mean 1.
ScoreSeries synthetic(Rng& rng, std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> plants = {},
                      double mean_in = 1.0) {
    ScoreSeries s;
    s.theta_R = 1.0;
    s.scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double m = 1.0;
        for (auto [lo, hi] : plants)
            if (i >= lo && i < hi) m = mean_in;
        auto& t = s.scores[i];
        t.position = i;
        t.valid = true;
        t.weight = 1.0;
        t.s1 = t.fused = m * rng.exponential();
    }
    return s;
}

}  // namespace

TEST_SUITE("localize") {

TEST_CASE("dyadic grid") {
    auto g = dyadic_grid(1024, 50);
    CHECK(g.L0 == 64);
    CHECK(g.M == 57);
    CHECK(g.level_counts == std::vector<std::size_t>{31, 15, 7, 3, 1});
    CHECK(g.windows.size() == 57);

    auto one = dyadic_grid(64, 50);
    REQUIRE(one.M == 1);
    CHECK(one.windows[0].start == 0);
    CHECK(one.windows[0].length == 64);
    CHECK(dyadic_grid(40, 50).empty());
}

TEST_CASE("every long interval is at least half covered by one window") {
    const std::size_t n = 512, L_min = 50;
    auto g = dyadic_grid(n, L_min);
    std::size_t failures = 0;
    for (std::size_t len = L_min; len <= n; ++len) {
        for (std::size_t a = 0; a + len <= n; ++a) {
            std::size_t best = 0;
            for (const auto& w : g.windows) {
                std::size_t lo = std::max(a, w.start), hi = std::min(a + len, w.end());
                if (hi > lo) best = std::max(best, hi - lo);
            }
            failures += 2 * best < len;
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("prefix sums") {
    ScoreSeries zero;
    zero.scores.resize(100);
    for (auto& t : zero.scores) t.valid = true;
    PrefixSums pz(zero);
    auto z = pz.window(10, 50);
    CHECK(z.sum_ws == 0.0);
    CHECK(z.sum_s == 0.0);

    // Dyadic values keep every partial sum exact.
    Rng rng(5);
    ScoreSeries s;
    s.scores.resize(1000);
    for (auto& t : s.scores) {
        t.valid = rng.bernoulli(0.9);
        t.fused = static_cast<double>(rng.next_u64() % 64) / 8.0;
        t.weight = static_cast<double>(1 + rng.next_u64() % 8) / 8.0;
    }
    PrefixSums p(s);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t a = rng.next_u64() % 1000;
        std::size_t len = 1 + rng.next_u64() % (1000 - a);
        WindowSums d;
        for (std::size_t i = a; i < a + len; ++i) {
            const auto& t = s.scores[i];
            if (!t.valid) continue;
            d.sum_ws += t.weight * t.fused;
            d.sum_w += t.weight;
            d.sum_w2 += t.weight * t.weight;
            d.sum_s += t.fused;
            ++d.n_valid;
        }
        auto w = p.window(a, len);
        CHECK(w.sum_ws == d.sum_ws);
        CHECK(w.sum_w == d.sum_w);
        CHECK(w.sum_w2 == d.sum_w2);
        CHECK(w.sum_s == d.sum_s);
        CHECK(w.n_valid == d.n_valid);
    }
    s.scores[17].valid = true;
    auto single = PrefixSums(s).window(17, 1);
    CHECK(single.sum_s == s.scores[17].fused);
}

TEST_CASE("search penalties") {
    CHECK(bonferroni_single(0.0, 57) == doctest::Approx(1.7559).epsilon(1e-4));
    CHECK(bonferroni_correct(-10.0, 57, 1, 5) == doctest::Approx(-10.0 + std::log10(57.0) + std::log10(5.0)));
    CHECK(bonferroni_correct(0.0, 57, 2, 5) == doctest::Approx(std::log10(1596.0) + std::log10(5.0)));
    CHECK(std::log10(1596.0) == doctest::Approx(3.203).epsilon(1e-3));
    CHECK(bonferroni_correct(-7.5, 57, 0, 5) == -7.5);
    CHECK_THROWS_AS(bonferroni_correct(-1.0, 57, 6, 5), ContractError);
}

TEST_CASE("parallel ranking equals serial") {
    Rng rng(3);
    auto s = synthetic(rng, 5000, {{1000, 1400}}, 1.8);
    PrefixSums p(s);
    auto g = dyadic_grid(5000, 50);
    CHECK(rank_windows(p, g, 1.0) == rank_windows_omp(p, g, 1.0));
}

TEST_CASE("fully keyed text goes through the global path") {
    Rng rng(9);
    auto s = synthetic(rng, 2000, {{0, 2000}}, 2.0);
    auto v = ensemble_detect(s, LocalizeConfig{});
    CHECK(v.path_chosen == "global");
    CHECK(v.log10_p_final <= v.log10_p_global + 0.4772);
    CHECK(v.log10_p_final == doctest::Approx(v.log10_p_global + std::log10(3.0)));
}

TEST_CASE("two planted blocks yield two regions") {
    auto run = [](std::vector<std::pair<std::size_t, std::size_t>> plants, bool exact) {
        int ok = 0;
        for (int trial = 0; trial < 20; ++trial) {
            Rng rng(200 + trial);
            auto s = synthetic(rng, 4000, plants, 1.8);
            auto v = ensemble_detect(s, LocalizeConfig{});
            bool hit = exact ? v.y == 2 : v.y >= 2;
            std::vector<bool> covered(plants.size(), false);
            for (const auto& r : v.regions) {
                bool overlaps = false;
                for (std::size_t j = 0; j < plants.size(); ++j) {
                    bool o = r.start < plants[j].second && plants[j].first < r.end;
                    covered[j] = covered[j] || o;
                    overlaps |= o;
                }
                hit &= overlaps;
            }
            for (bool c : covered) hit &= c;
            ok += hit;
        }
        return ok;
    };
    // Plants on grid windows come back as exactly two regions.
    CHECK(run({{512, 1024}, {2560, 3072}}, true) >= 18);
    // Off-grid plants may be split into pieces, each still inside a plant.
    CHECK(run({{500, 900}, {2500, 2900}}, false) >= 16);
}

TEST_CASE("null texts rarely produce a region") {
    const std::size_t trials = 1000;
    std::size_t flagged = 0;
    Rng rng(44);
    for (std::size_t t = 0; t < trials; ++t) {
        auto s = synthetic(rng, 2000);
        auto v = ensemble_detect(s, LocalizeConfig{});
        CHECK(v.y <= 5);
        flagged += v.log10_p_final <= -2.0;
    }
    auto [lo, hi] = clopper_pearson(flagged, trials, 0.999);
    INFO("flagged " << flagged);
    CHECK(lo <= 0.01);
}

TEST_CASE("boundary annotation") {
    ScoreSeries flat;
    flat.scores.resize(300);
    for (auto& t : flat.scores) t.valid = true, t.fused = 1.0;
    for (bool b : annotate_boundaries(flat, 0.25, 50)) CHECK_FALSE(b);

    // Window 1 thresholds each standardized score on its own.
    ScoreSeries s;
    s.theta_R = 0.5;
    std::vector<double> v{1.0, 1.2, 1.5, 0.3, 2.0};
    for (double x : v) {
        TokenScore t;
        t.valid = true;
        t.fused = x;
        s.scores.push_back(t);
    }
    auto m = annotate_boundaries(s, 0.25, 1);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(m[i] == ((v[i] - 1.0) / std::sqrt(0.5) > 0.25));

    double total = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        Rng rng(700 + t);
        std::size_t lo = 200 + rng.next_u64() % 1000;
        auto series = synthetic(rng, 2000, {{lo, lo + 600}}, 1.5);
        std::vector<bool> truth(2000, false);
        for (std::size_t i = lo; i < lo + 600; ++i) truth[i] = true;
        LocalizeConfig c;
        total += miou(annotate_boundaries(series, c.annot_tau, c.annot_window), truth);
    }
    CHECK(total / trials >= 0.7);
}

TEST_CASE("mask overlap") {
    std::vector<bool> a{true, true, false, false}, b{false, false, true, true};
    CHECK(miou(a, a) == 1.0);
    CHECK(miou(a, b) == 0.0);
    std::vector<bool> half{true, false, false, false}, truth{true, true, false, false};
    CHECK(miou(half, truth) == doctest::Approx(0.5));
    auto runs = mask_runs(std::vector<bool>{false, true, true, false, true});
    REQUIRE(runs.size() == 2);
    CHECK(runs[0] == std::pair<std::size_t, std::size_t>{1, 2});
    CHECK(runs[1] == std::pair<std::size_t, std::size_t>{4, 1});
}

}
