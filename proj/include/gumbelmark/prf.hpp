#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gumbelmark/types.hpp"

namespace gumbelmark {

// Frozen hash constants. Changing any of these breaks detection of text
// produced with an earlier build; data/VECTORS.tsv pins the outputs.
namespace prf_constants {
inline constexpr int kMaxWindow = 8;
inline constexpr std::array<std::uint64_t, kMaxWindow> q = {
    2177342782468422707ULL, 2048842555723151407ULL, 1920342328977880183ULL,
    1791842102232608861ULL, 1663341875487337657ULL, 1534841648742066419ULL,
    1406341421996795033ULL, 1277841195251523757ULL};
inline constexpr std::uint64_t p2 = 2302262473113099467ULL;
inline constexpr std::uint64_t p3 = 2173762246367828251ULL;
inline constexpr std::uint64_t p4 = 2045262019622556907ULL;
inline constexpr std::uint64_t p_mix = 1916761792877285723ULL;
// Used to derive per-layer keys for the tournament baseline.
inline constexpr std::uint64_t p_salt = 1788261566132014373ULL;
inline constexpr unsigned shift = 29;
inline constexpr double modulus = 4294967296.0;  // M = 2^32
inline constexpr const char* version = "gm-prf-1";
}  // namespace prf_constants

// Keyed hash of (token, context window). The window length is fixed at
// construction; every call checks it.
class Prf {
public:
    explicit Prf(int k = 3);

    int k() const { return k_; }

    std::uint32_t hash_raw(TokenId token, std::span<const TokenId> window, SecretKey key) const;
    double uniform(TokenId token, std::span<const TokenId> window, SecretKey key) const;

    // Key- and window-dependent part of the pre-hash, shared by all candidates.
    std::uint64_t base(std::span<const TokenId> window, SecretKey key) const;

    static std::uint32_t finalize(std::uint64_t base, TokenId token) {
        using namespace prf_constants;
        std::uint64_t h = (p2 * token + base) * p4;
        h ^= h >> shift;
        h *= p_mix;
        h ^= h >> shift;
        h *= p_mix;
        h ^= h >> shift;
        return static_cast<std::uint32_t>(h);
    }

    static double to_unit(std::uint32_t h) { return (static_cast<double>(h) + 0.5) / prf_constants::modulus; }

private:
    int k_;
};

inline double prf_uniform(const Prf& prf, TokenId token, std::span<const TokenId> window, SecretKey key) {
    return prf.uniform(token, window, key);
}

// Batched PRF over candidate ids. Rejects duplicate ids.
void prf_vector(const Prf& prf, std::span<const TokenId> candidates, std::span<const TokenId> window,
                SecretKey key, std::span<double> out);
std::vector<double> prf_vector(const Prf& prf, std::span<const TokenId> candidates,
                               std::span<const TokenId> window, SecretKey key);

// Same contract without the duplicate check, for hot loops whose ids are
// already known to be unique.
void prf_vector_unchecked(const Prf& prf, std::span<const TokenId> candidates,
                          std::span<const TokenId> window, SecretKey key, std::span<double> out);

// OpenMP variant of prf_vector; the serial one is the reference.
void prf_vector_omp(const Prf& prf, std::span<const TokenId> candidates, std::span<const TokenId> window,
                    SecretKey key, std::span<double> out);

// Number of PRF evaluations performed by the calling thread so far.
std::uint64_t prf_call_count();
void add_prf_calls(std::uint64_t n);  // for callers that use base()/finalize() directly

}  // namespace gumbelmark
