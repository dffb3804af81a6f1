#include "gumbelmark/tournament.hpp"

#include <cmath>

#include "gumbelmark/detect.hpp"
#include "gumbelmark/gamma.hpp"

namespace gumbelmark {

void TournamentConfig::validate() const {
    require(depth >= 1, "TournamentConfig: depth must be at least 1");
    require(k >= 1 && k <= prf_constants::kMaxWindow, "TournamentConfig: k must be in [1, 8]");
    if (layer_weights.empty()) return;
    require(static_cast<int>(layer_weights.size()) == depth, "TournamentConfig: one weight per layer");
    double total = 0.0;
    for (std::size_t l = 0; l < layer_weights.size(); ++l) {
        require(layer_weights[l] >= 0.0, "TournamentConfig: weights must be non-negative");
        if (l > 0) require(layer_weights[l] <= layer_weights[l - 1], "TournamentConfig: weights must be non-increasing");
        total += layer_weights[l];
    }
    require(total > 0.0, "TournamentConfig: weights are all zero");
}

std::vector<double> TournamentConfig::weights() const {
    if (!layer_weights.empty()) return layer_weights;
    std::vector<double> w(depth);
    for (int l = 1; l <= depth; ++l) w[l - 1] = static_cast<double>(depth - l + 1) / depth;
    return w;
}

SecretKey layer_key(SecretKey key, int layer) {
    return SecretKey{key.value ^ (static_cast<std::uint64_t>(layer) * prf_constants::p_salt)};
}

std::vector<std::uint8_t> g_values(const Prf& prf, TokenId token, std::span<const TokenId> window, SecretKey key,
                                   int depth) {
    require(depth >= 1, "g_values: depth must be at least 1");
    std::vector<std::uint8_t> g(depth);
    for (int l = 1; l <= depth; ++l) g[l - 1] = prf.uniform(token, window, layer_key(key, l)) < 0.5 ? 1 : 0;
    return g;
}

TokenId tournament_sample(const ProbVector& probs, std::span<const TokenId> window, const TournamentConfig& config,
                          Rng& rng, std::span<double> scratch) {
    require(!probs.empty(), "tournament_sample: empty distribution");
    require(scratch.size() >= probs.size(), "tournament_sample: scratch too small");
    config.validate();
    const std::size_t n = probs.size();
    if (n == 1) return probs.id(0);
    Prf prf(config.k);
    double* q = scratch.data();
    for (std::size_t i = 0; i < n; ++i) q[i] = probs.prob(i);
    for (int l = 1; l <= config.depth; ++l) {
        const std::uint64_t base = prf.base(window, layer_key(config.key, l));
        // Two candidates drawn from q meet; the one with the larger g wins,
        // ties split evenly. The winner's law is q_v (1 + g_v − G1).
        double g1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            bool g = Prf::to_unit(Prf::finalize(base, probs.id(i))) < 0.5;
            // Stash g in the sign of q to avoid a second buffer.
            if (g) g1 += q[i];
            q[i] = g ? -q[i] : q[i];
        }
        add_prf_calls(n);
        for (std::size_t i = 0; i < n; ++i) {
            bool g = q[i] < 0.0;
            double v = std::fabs(q[i]);
            q[i] = v * ((g ? 2.0 : 1.0) - g1);
            if (q[i] < 0.0) q[i] = 0.0;
        }
    }
    return probs.id(rng.categorical(std::span<const double>(q, n)));
}

TokenId tournament_sample(const ProbVector& probs, std::span<const TokenId> window, const TournamentConfig& config,
                          Rng& rng) {
    std::vector<double> scratch(probs.size());
    return tournament_sample(probs, window, config, rng, scratch);
}

SynthIdVerdict synthid_detect(std::span<const TokenId> tokens, const TournamentConfig& config) {
    config.validate();
    const int k = config.k;
    auto mask = dedup_mask(tokens, k);
    auto w = config.weights();
    double mu0 = 0.0, var0 = 0.0;
    for (double a : w) {
        mu0 += 0.5 * a;
        var0 += 0.25 * a * a;
    }
    Prf prf(k);
    double S = 0.0;
    std::size_t n = 0;
    for (std::size_t t = static_cast<std::size_t>(k); t < tokens.size(); ++t) {
        if (!mask[t]) continue;
        auto window = tokens.subspan(t - k, k);
        for (int l = 1; l <= config.depth; ++l)
            if (prf.uniform(tokens[t], window, layer_key(config.key, l)) < 0.5) S += w[l - 1];
        ++n;
    }
    require(n > 0, "synthid_detect: no scoreable tokens");
    SynthIdVerdict v;
    v.n_valid = n;
    v.z = (S - n * mu0) / (std::sqrt(var0) * std::sqrt(static_cast<double>(n)));
    v.log10_p = log10_normal_sf(v.z);
    return v;
}

}  // namespace gumbelmark
