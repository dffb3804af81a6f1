#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gumbelmark/rng.hpp"
#include "gumbelmark/stats.hpp"
#include "gumbelmark/types.hpp"

namespace testing_support {

// Binomial count within z standard deviations of n·p.
inline bool within_sigma(std::size_t count, std::size_t n, double p, double z = 3.0) {
    double mean = n * p;
    double sd = std::sqrt(n * p * (1.0 - p));
    return std::abs(static_cast<double>(count) - mean) <= z * sd;
}

inline std::vector<gumbelmark::TokenId> random_tokens(gumbelmark::Rng& rng, std::size_t n, std::uint32_t vocab) {
    std::vector<gumbelmark::TokenId> t(n);
    for (auto& x : t) x = static_cast<gumbelmark::TokenId>(rng.next_u64() % vocab);
    return t;
}

inline double ks_p(std::vector<double> u) {
    std::size_t n = u.size();
    return gumbelmark::ks_pvalue(gumbelmark::ks_uniform_statistic(std::move(u)), n);
}

}  // namespace testing_support
