#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "gumbelmark/types.hpp"

namespace gumbelmark::detail {

// Exact small tuple of token ids (window plus up to two extra slots), used
// as a hash-set key for deduplication and context masking.
struct TupleKey {
    std::array<TokenId, 10> v{};
    std::uint8_t n = 0;

    TupleKey() = default;
    explicit TupleKey(std::span<const TokenId> window) {
        n = static_cast<std::uint8_t>(window.size());
        for (std::size_t i = 0; i < window.size(); ++i) v[i] = window[i];
    }
    TupleKey& push(TokenId t) {
        v[n++] = t;
        return *this;
    }
    friend bool operator==(const TupleKey& a, const TupleKey& b) {
        if (a.n != b.n) return false;
        for (std::uint8_t i = 0; i < a.n; ++i)
            if (a.v[i] != b.v[i]) return false;
        return true;
    }
};

struct TupleKeyHash {
    std::size_t operator()(const TupleKey& k) const {
        std::uint64_t h = 0x9E3779B97F4A7C15ULL ^ k.n;
        for (std::uint8_t i = 0; i < k.n; ++i) {
            h ^= k.v[i];
            h *= 0xBF58476D1CE4E5B9ULL;
            h ^= h >> 31;
        }
        return static_cast<std::size_t>(h);
    }
};

}  // namespace gumbelmark::detail
