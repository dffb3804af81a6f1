#include "gumbelmark/radioactive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "gumbelmark/detail/tuple_key.hpp"

namespace gumbelmark {

std::string weighting_name(const EntropyWeighting& w) {
    switch (w.kind) {
        case WeightingKind::uniform: return "uniform";
        case WeightingKind::sqrt_norm: return "sqrt_norm";
        case WeightingKind::log_norm: return "log_norm";
        case WeightingKind::linear_norm: return "linear_norm";
        case WeightingKind::tanh_norm: return "tanh_norm";
        case WeightingKind::power: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "power:%g", w.beta);
            return buf;
        }
    }
    return "unknown";
}

EntropyWeighting parse_weighting(const std::string& name) {
    if (name.rfind("power:", 0) == 0) return {WeightingKind::power, std::stod(name.substr(6))};
    for (auto k : {WeightingKind::uniform, WeightingKind::sqrt_norm, WeightingKind::log_norm, WeightingKind::linear_norm,
                   WeightingKind::tanh_norm})
        if (weighting_name({k, 1.0}) == name) return {k, 1.0};
    throw ContractError("unknown weighting: " + name);
}

double entropy_weight_fn(double H, double H_min, double H_max, EntropyWeighting kind) {
    require(H >= 0.0, "entropy_weight_fn: entropy must be non-negative");
    if (kind.kind == WeightingKind::uniform) return 1.0;
    if (kind.kind == WeightingKind::power) return std::pow(H, kind.beta);
    if (H_max - H_min < 1e-9) return 1.0;
    double h = std::clamp((H - H_min) / (H_max - H_min), 0.0, 1.0);
    double f = h;
    switch (kind.kind) {
        case WeightingKind::sqrt_norm: f = std::sqrt(h); break;
        case WeightingKind::log_norm: f = std::log1p(h) / std::log(2.0); break;
        case WeightingKind::tanh_norm: f = std::tanh(2.0 * h) / std::tanh(2.0); break;
        default: break;
    }
    return 0.1 + 0.9 * f;
}

std::vector<std::vector<bool>> dedup_two_level(std::span<const Trace> traces, int k, bool within_trace) {
    require(k >= 1, "dedup_two_level: k must be positive");
    std::vector<std::vector<bool>> mask(traces.size());
    std::unordered_set<detail::TupleKey, detail::TupleKeyHash> global;
    for (std::size_t tr = 0; tr < traces.size(); ++tr) {
        const Trace& t = traces[tr];
        require(t.predictions.size() == t.tokens.size(), "dedup_two_level: one prediction per position required");
        std::span<const TokenId> toks(t.tokens);
        mask[tr].assign(t.tokens.size(), false);
        std::unordered_set<detail::TupleKey, detail::TupleKeyHash> local;
        for (std::size_t i = static_cast<std::size_t>(k); i < t.tokens.size(); ++i) {
            detail::TupleKey ctx(toks.subspan(i - k, k));
            if (within_trace && !local.insert(ctx).second) continue;
            ctx.push(t.predictions[i]);
            mask[tr][i] = global.insert(ctx).second;
        }
    }
    return mask;
}

DetectionVerdict radioactivity_pvalue(std::span<const Trace> traces, std::span<const SecretKey> keys, int k,
                                      double alpha, EntropyWeighting weighting, bool within_trace) {
    require(keys.size() == 1 || keys.size() == 2, "radioactivity_pvalue: need one or two keys");
    const double a = keys.size() == 2 ? alpha : 0.0;
    auto mask = dedup_two_level(traces, k, within_trace);
    Prf prf(k);

    struct Item {
        double s;
        double h;
    };
    std::vector<Item> items;
    double h_min = INFINITY, h_max = -INFINITY;
    for (std::size_t tr = 0; tr < traces.size(); ++tr) {
        const Trace& t = traces[tr];
        require(t.entropies.size() == t.tokens.size(), "radioactivity_pvalue: one entropy per position required");
        std::span<const TokenId> toks(t.tokens);
        for (std::size_t i = static_cast<std::size_t>(k); i < t.tokens.size(); ++i) {
            if (!mask[tr][i]) continue;
            auto window = toks.subspan(i - k, k);
            double s1 = -std::log1p(-prf.uniform(t.predictions[i], window, keys[0]));
            double s2 = keys.size() == 2 ? -std::log1p(-prf.uniform(t.predictions[i], window, keys[1])) : 0.0;
            items.push_back({(1.0 - a) * s1 + a * s2, t.entropies[i]});
            h_min = std::min(h_min, t.entropies[i]);
            h_max = std::max(h_max, t.entropies[i]);
        }
    }
    require(!items.empty(), "radioactivity_pvalue: no valid predictions");
    double sws = 0.0, sw = 0.0, sw2 = 0.0;
    for (const Item& it : items) {
        double w = entropy_weight_fn(it.h, h_min, h_max, weighting);
        sws += w * it.s;
        sw += w;
        sw2 += w * w;
    }
    GammaFit fit = weighted_gamma_fit(sws, sw, sw2, theta_r(a));
    DetectionVerdict v;
    v.statistic = fit.statistic;
    v.k_new = fit.k_new;
    v.theta_new = fit.theta_new;
    v.log10_p = fit.log10_p;
    v.n_valid = items.size();
    v.method = "radioactivity";
    return v;
}

}  // namespace gumbelmark
