#include "gumbelmark/detect.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "gumbelmark/gamma.hpp"
#include "gumbelmark/tournament.hpp"
#include "gumbelmark/detail/tuple_key.hpp"

namespace gumbelmark {

namespace {
constexpr double kLn10 = 2.302585092994045684;

void check_score_inputs(std::span<const TokenId> tokens, std::span<const SecretKey> keys, int k, double alpha) {
    require(keys.size() == 1 || keys.size() == 2, "score_tokens: need one or two keys");
    require(k >= 1 && k <= prf_constants::kMaxWindow, "score_tokens: k must be in [1, 8]");
    require(tokens.size() > static_cast<std::size_t>(k), "score_tokens: text not longer than the context window");
    require(alpha >= 0.0 && alpha <= 1.0, "score_tokens: alpha must be in [0, 1]");
}

ScoreSeries make_series(std::span<const TokenId> tokens, std::span<const SecretKey> keys, int k, double alpha) {
    ScoreSeries out;
    out.k = k;
    out.alpha = keys.size() == 1 ? 0.0 : alpha;
    out.theta_R = theta_r(out.alpha);
    out.scores.resize(tokens.size());
    auto mask = dedup_mask(tokens, k);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out.scores[i].position = i;
        out.scores[i].valid = mask[i];
    }
    return out;
}

void score_position(ScoreSeries& out, const Prf& prf, std::span<const TokenId> tokens,
                    std::span<const SecretKey> keys, std::size_t i) {
    auto window = tokens.subspan(i - out.k, out.k);
    TokenScore& ts = out.scores[i];
    ts.s1 = -std::log1p(-prf.uniform(tokens[i], window, keys[0]));
    ts.s2 = keys.size() == 2 ? -std::log1p(-prf.uniform(tokens[i], window, keys[1])) : 0.0;
    ts.fused = (1.0 - out.alpha) * ts.s1 + out.alpha * ts.s2;
}
}  // namespace

std::size_t ScoreSeries::n_valid() const {
    return static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [](const TokenScore& t) { return t.valid; }));
}

std::vector<bool> dedup_mask(std::span<const TokenId> tokens, int k) {
    require(k >= 1, "dedup_mask: k must be positive");
    std::vector<bool> mask(tokens.size(), false);
    std::unordered_set<detail::TupleKey, detail::TupleKeyHash> seen;
    seen.reserve(tokens.size());
    for (std::size_t i = static_cast<std::size_t>(k); i < tokens.size(); ++i) {
        detail::TupleKey key(tokens.subspan(i - k, k));
        key.push(tokens[i]);
        mask[i] = seen.insert(key).second;
    }
    return mask;
}

ScoreSeries score_tokens(std::span<const TokenId> tokens, std::span<const SecretKey> keys, int k, double alpha) {
    check_score_inputs(tokens, keys, k, alpha);
    ScoreSeries out = make_series(tokens, keys, k, alpha);
    Prf prf(k);
    for (std::size_t i = static_cast<std::size_t>(k); i < tokens.size(); ++i) score_position(out, prf, tokens, keys, i);
    return out;
}

ScoreSeries score_tokens_omp(std::span<const TokenId> tokens, std::span<const SecretKey> keys, int k, double alpha) {
    check_score_inputs(tokens, keys, k, alpha);
    ScoreSeries out = make_series(tokens, keys, k, alpha);
    Prf prf(k);
    const auto n = static_cast<std::ptrdiff_t>(tokens.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = k; i < n; ++i) score_position(out, prf, tokens, keys, static_cast<std::size_t>(i));
    return out;
}

std::vector<double> entropy_weights(std::span<const double> entropies) {
    std::vector<double> w(entropies.size(), 1.0);
    if (entropies.empty()) return w;
    auto [lo, hi] = std::minmax_element(entropies.begin(), entropies.end());
    double range = *hi - *lo;
    if (range < 1e-9) return w;
    for (std::size_t i = 0; i < entropies.size(); ++i) w[i] = 0.1 + 0.9 * (entropies[i] - *lo) / range;
    return w;
}

void apply_entropy_weights(ScoreSeries& series, std::span<const double> entropies) {
    require(entropies.size() == series.scores.size(), "apply_entropy_weights: one entropy per token required");
    std::vector<double> valid_h;
    for (std::size_t i = 0; i < entropies.size(); ++i) {
        require(std::isfinite(entropies[i]) && entropies[i] >= 0.0, "apply_entropy_weights: bad entropy");
        series.scores[i].entropy = entropies[i];
        if (series.scores[i].valid) valid_h.push_back(entropies[i]);
    }
    auto w = entropy_weights(valid_h);
    std::size_t j = 0;
    for (auto& ts : series.scores) ts.weight = ts.valid ? w[j++] : 1.0;
}

GammaFit weighted_gamma_fit(double sum_ws, double sum_w, double sum_w2, double theta_R) {
    require(sum_w > 0.0 && sum_w2 > 0.0, "weighted_gamma_fit: no weight mass");
    GammaFit fit;
    fit.statistic = sum_ws;
    fit.theta_new = theta_R * sum_w2 / sum_w;
    fit.k_new = sum_w * sum_w / (theta_R * sum_w2);
    fit.log10_p = log_gamma_q(fit.k_new, std::max(sum_ws, 0.0) / fit.theta_new) / kLn10;
    return fit;
}

DetectionVerdict weighted_gamma_pvalue(const ScoreSeries& series) {
    double sws = 0.0, sw = 0.0, sw2 = 0.0;
    std::size_t n = 0;
    for (const auto& ts : series.scores) {
        if (!ts.valid) continue;
        sws += ts.weight * ts.fused;
        sw += ts.weight;
        sw2 += ts.weight * ts.weight;
        ++n;
    }
    require(n > 0, "weighted_gamma_pvalue: no valid tokens");
    GammaFit fit = weighted_gamma_fit(sws, sw, sw2, series.theta_R);
    DetectionVerdict v;
    v.statistic = fit.statistic;
    v.k_new = fit.k_new;
    v.theta_new = fit.theta_new;
    v.log10_p = fit.log10_p;
    v.n_valid = n;
    v.method = "gumbel";
    return v;
}

double late_fusion_log10_p(const ScoreSeries& series) {
    double best = 0.0;
    for (int key = 0; key < 2; ++key) {
        double sws = 0.0, sw = 0.0, sw2 = 0.0;
        for (const auto& ts : series.scores) {
            if (!ts.valid) continue;
            sws += ts.weight * (key == 0 ? ts.s1 : ts.s2);
            sw += ts.weight;
            sw2 += ts.weight * ts.weight;
        }
        best = std::min(best, weighted_gamma_fit(sws, sw, sw2, 1.0).log10_p);
    }
    return std::min(0.0, best + std::log10(2.0));
}

DetectionVerdict detect(std::span<const TokenId> tokens, const DetectConfig& config) {
    require(!tokens.empty(), "detect: empty text");
    if (config.method == Method::synthid) {
        require(!config.keys.empty(), "detect: synthid needs a key");
        TournamentConfig tc;
        tc.depth = config.synthid_depth;
        tc.key = config.keys[0];
        tc.k = config.k;
        SynthIdVerdict sv = synthid_detect(tokens, tc);
        DetectionVerdict v;
        v.statistic = sv.z;
        v.log10_p = sv.log10_p;
        v.n_valid = sv.n_valid;
        v.method = "synthid";
        return v;
    }
    ScoreSeries series = score_tokens(tokens, config.keys, config.k, config.alpha);
    if (config.weighting == Weighting::entropy) {
        require(static_cast<bool>(config.proxy), "detect: entropy weighting needs a proxy model");
        apply_entropy_weights(series, config.proxy(tokens));
    }
    return weighted_gamma_pvalue(series);
}

}  // namespace gumbelmark
