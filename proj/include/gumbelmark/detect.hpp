#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gumbelmark/prf.hpp"
#include "gumbelmark/types.hpp"

namespace gumbelmark {

struct TokenScore {
    std::size_t position = 0;
    double s1 = 0.0;
    double s2 = 0.0;
    double fused = 0.0;
    double entropy = 0.0;
    double weight = 1.0;
    bool valid = false;
};

struct ScoreSeries {
    std::vector<TokenScore> scores;
    double theta_R = 1.0;
    int k = 3;
    double alpha = 0.0;

    std::size_t n_valid() const;
};

struct DetectionVerdict {
    double statistic = 0.0;
    double k_new = 0.0;
    double theta_new = 0.0;
    double log10_p = 0.0;
    std::size_t n_valid = 0;
    std::string method;
};

enum class Weighting { uniform, entropy };
enum class Method { gumbel, synthid };

// Per-position next-token entropies (nats) of a proxy model; entry i is the
// entropy of the proxy's distribution for position i given tokens[0, i).
using EntropyFn = std::function<std::vector<double>(std::span<const TokenId>)>;

struct DetectConfig {
    int k = 3;
    std::vector<SecretKey> keys;  // one or two
    double alpha = 0.5;           // ignored with a single key
    Weighting weighting = Weighting::uniform;
    EntropyFn proxy;              // required for entropy weighting
    Method method = Method::gumbel;
    int synthid_depth = 10;
};

inline double theta_r(double alpha) { return alpha * alpha + (1.0 - alpha) * (1.0 - alpha); }

// Positions < k invalid; a later position is invalid if its (window, token)
// tuple already occurred earlier in the text.
std::vector<bool> dedup_mask(std::span<const TokenId> tokens, int k);

// Per-token scores −ln(1 − R) under one or two keys, fused with weight α on
// the second key. Validity comes from dedup_mask. Weights are all 1.
ScoreSeries score_tokens(std::span<const TokenId> tokens, std::span<const SecretKey> keys, int k, double alpha);
// Same result computed with an OpenMP loop over positions.
ScoreSeries score_tokens_omp(std::span<const TokenId> tokens, std::span<const SecretKey> keys, int k, double alpha);

// Min-max normalized weights anchored to [0.1, 1]; all ones when the range
// is below 1e-9.
std::vector<double> entropy_weights(std::span<const double> entropies);

// Fills entropy and weight fields, normalizing over valid positions only.
void apply_entropy_weights(ScoreSeries& series, std::span<const double> entropies);

// Moment-matched Gamma fit for a weighted sum of fused scores.
struct GammaFit {
    double statistic = 0.0;
    double k_new = 0.0;
    double theta_new = 0.0;
    double log10_p = 0.0;
};
// From sufficient statistics Σ w s, Σ w, Σ w².
GammaFit weighted_gamma_fit(double sum_ws, double sum_w, double sum_w2, double theta_R);

DetectionVerdict weighted_gamma_pvalue(const ScoreSeries& series);

DetectionVerdict detect(std::span<const TokenId> tokens, const DetectConfig& config);

// Late fusion baseline: min of the two single-key log10 p plus log10 2.
double late_fusion_log10_p(const ScoreSeries& series);

}  // namespace gumbelmark
