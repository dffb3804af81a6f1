#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gumbelmark/prf.hpp"
#include "gumbelmark/prob_vector.hpp"
#include "gumbelmark/rng.hpp"

namespace gumbelmark {

struct TournamentConfig {
    int depth = 10;
    SecretKey key;
    int k = 3;
    // Empty means the default linear decay (m − l + 1)/m.
    std::vector<double> layer_weights;

    void validate() const;
    std::vector<double> weights() const;
};

// Key for layer l (1-based): key ⊕ (l · p_salt).
SecretKey layer_key(SecretKey key, int layer);

// Binary g-values for one token: g_l = [prf(token, window, layer_key(l)) < 0.5].
std::vector<std::uint8_t> g_values(const Prf& prf, TokenId token, std::span<const TokenId> window, SecretKey key,
                                   int depth);

// Reshapes probs through `depth` two-sample tournament layers and draws the
// output with rng. scratch must hold probs.size() doubles.
TokenId tournament_sample(const ProbVector& probs, std::span<const TokenId> window, const TournamentConfig& config,
                          Rng& rng, std::span<double> scratch);
TokenId tournament_sample(const ProbVector& probs, std::span<const TokenId> window, const TournamentConfig& config,
                          Rng& rng);

struct SynthIdVerdict {
    double z = 0.0;
    double log10_p = 0.0;
    std::size_t n_valid = 0;
};

// Weighted-mean score z-test with analytic Bernoulli(0.5) null moments,
// over deduplicated positions past the first k.
SynthIdVerdict synthid_detect(std::span<const TokenId> tokens, const TournamentConfig& config);

}  // namespace gumbelmark
