#include "gumbelmark/prf.hpp"

#include <algorithm>

namespace gumbelmark {

namespace {
thread_local std::uint64_t g_calls = 0;

void check_unique(std::span<const TokenId> ids) {
    std::vector<TokenId> sorted(ids.begin(), ids.end());
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "prf_vector: duplicate candidate ids");
}
}  // namespace

std::uint64_t prf_call_count() { return g_calls; }
void add_prf_calls(std::uint64_t n) { g_calls += n; }

Prf::Prf(int k) : k_(k) {
    require(k >= 1 && k <= prf_constants::kMaxWindow, "Prf: context length must be in [1, 8]");
}

std::uint64_t Prf::base(std::span<const TokenId> window, SecretKey key) const {
    require(static_cast<int>(window.size()) == k_, "Prf: window length differs from configured k");
    std::uint64_t b = prf_constants::p3 * key.value;
    for (int i = 0; i < k_; ++i) b += prf_constants::q[i] * window[i];
    return b;
}

std::uint32_t Prf::hash_raw(TokenId token, std::span<const TokenId> window, SecretKey key) const {
    ++g_calls;
    return finalize(base(window, key), token);
}

double Prf::uniform(TokenId token, std::span<const TokenId> window, SecretKey key) const {
    return to_unit(hash_raw(token, window, key));
}

void prf_vector_unchecked(const Prf& prf, std::span<const TokenId> candidates, std::span<const TokenId> window,
                          SecretKey key, std::span<double> out) {
    require(out.size() >= candidates.size(), "prf_vector: output too small");
    const std::uint64_t b = prf.base(window, key);
    for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = Prf::to_unit(Prf::finalize(b, candidates[i]));
    g_calls += candidates.size();
}

void prf_vector(const Prf& prf, std::span<const TokenId> candidates, std::span<const TokenId> window,
                SecretKey key, std::span<double> out) {
    require(!candidates.empty(), "prf_vector: empty candidate list");
    check_unique(candidates);
    prf_vector_unchecked(prf, candidates, window, key, out);
}

std::vector<double> prf_vector(const Prf& prf, std::span<const TokenId> candidates, std::span<const TokenId> window,
                               SecretKey key) {
    std::vector<double> out(candidates.size());
    prf_vector(prf, candidates, window, key, out);
    return out;
}

void prf_vector_omp(const Prf& prf, std::span<const TokenId> candidates, std::span<const TokenId> window,
                    SecretKey key, std::span<double> out) {
    require(!candidates.empty(), "prf_vector: empty candidate list");
    require(out.size() >= candidates.size(), "prf_vector: output too small");
    check_unique(candidates);
    const std::uint64_t b = prf.base(window, key);
    const auto n = static_cast<std::ptrdiff_t>(candidates.size());
    const TokenId* c = candidates.data();
    double* o = out.data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) o[i] = Prf::to_unit(Prf::finalize(b, c[i]));
    g_calls += candidates.size();
}

}  // namespace gumbelmark
