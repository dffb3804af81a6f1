#include "gumbelmark/localize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gumbelmark/gamma.hpp"

namespace gumbelmark {

WindowGrid dyadic_grid(std::size_t n, std::size_t L_min) {
    require(L_min >= 2, "dyadic_grid: L_min must be at least 2");
    WindowGrid g;
    g.L0 = 1;
    while (g.L0 < L_min) g.L0 <<= 1;
    for (std::size_t L = g.L0; L <= n; L <<= 1) {
        const std::size_t stride = L / 2;
        std::size_t count = 0;
        for (std::size_t s = 0; s + L <= n; s += stride, ++count) g.windows.push_back({s, L});
        g.level_counts.push_back(count);
    }
    g.M = g.windows.size();
    return g;
}

PrefixSums::PrefixSums(const ScoreSeries& series, const std::vector<bool>* masked) {
    const std::size_t n = series.scores.size();
    ws_.assign(n + 1, 0.0);
    w_.assign(n + 1, 0.0);
    w2_.assign(n + 1, 0.0);
    s_.assign(n + 1, 0.0);
    n_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const TokenScore& t = series.scores[i];
        bool use = t.valid && !(masked && (*masked)[i]);
        ws_[i + 1] = ws_[i] + (use ? t.weight * t.fused : 0.0);
        w_[i + 1] = w_[i] + (use ? t.weight : 0.0);
        w2_[i + 1] = w2_[i] + (use ? t.weight * t.weight : 0.0);
        s_[i + 1] = s_[i] + (use ? t.fused : 0.0);
        n_[i + 1] = n_[i] + (use ? 1 : 0);
    }
}

WindowSums PrefixSums::window(std::size_t start, std::size_t length) const {
    require(start + length <= size(), "PrefixSums::window: window exceeds the series");
    const std::size_t e = start + length;
    return {ws_[e] - ws_[start], w_[e] - w_[start], w2_[e] - w2_[start], s_[e] - s_[start], n_[e] - n_[start]};
}

double bonferroni_correct(double log10_p_raw, std::size_t M, std::size_t y, std::size_t Y_max) {
    if (y == 0) return log10_p_raw;
    require(y <= M, "bonferroni_correct: more regions than windows");
    require(y <= Y_max, "bonferroni_correct: y exceeds Y_max");
    return log10_p_raw + log10_choose(static_cast<double>(M), static_cast<double>(y)) +
           std::log10(static_cast<double>(Y_max));
}

double bonferroni_single(double log10_p_raw, std::size_t M) {
    require(M >= 1, "bonferroni_single: empty grid");
    return log10_p_raw + std::log10(static_cast<double>(M));
}

namespace {

double standardized_excess(const WindowSums& s, double theta_R) {
    if (s.sum_w2 <= 0.0) return -std::numeric_limits<double>::infinity();
    return (s.sum_ws - s.sum_w) / std::sqrt(theta_R * s.sum_w2);
}

double window_log10_p(const WindowSums& s, double theta_R) {
    if (s.sum_w <= 0.0) return 0.0;
    return weighted_gamma_fit(s.sum_ws, s.sum_w, s.sum_w2, theta_R).log10_p;
}

void add(WindowSums& acc, const WindowSums& s) {
    acc.sum_ws += s.sum_ws;
    acc.sum_w += s.sum_w;
    acc.sum_w2 += s.sum_w2;
    acc.sum_s += s.sum_s;
    acc.n_valid += s.n_valid;
}

bool overlaps(const Window& w, const std::vector<Region>& regions) {
    for (const auto& r : regions)
        if (w.start < r.end && r.start < w.end()) return true;
    return false;
}

}  // namespace

std::vector<double> rank_windows(const PrefixSums& prefix, const WindowGrid& grid, double theta_R) {
    std::vector<double> z(grid.M);
    for (std::size_t i = 0; i < grid.M; ++i)
        z[i] = standardized_excess(prefix.window(grid.windows[i].start, grid.windows[i].length), theta_R);
    return z;
}

std::vector<double> rank_windows_omp(const PrefixSums& prefix, const WindowGrid& grid, double theta_R) {
    std::vector<double> z(grid.M);
    const auto m = static_cast<std::ptrdiff_t>(grid.M);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i)
        z[i] = standardized_excess(prefix.window(grid.windows[i].start, grid.windows[i].length), theta_R);
    return z;
}

GreedyResult greedy_extract_full(const ScoreSeries& series, const WindowGrid& grid, std::size_t Y_max,
                                 std::size_t top_c) {
    require(!grid.empty(), "greedy_extract: empty grid");
    require(Y_max >= 1 && top_c >= 1, "greedy_extract: Y_max and top_c must be positive");
    const std::size_t y_cap = std::min(Y_max, grid.M);
    GreedyResult out;
    std::vector<bool> masked(series.scores.size(), false);
    WindowSums pooled;
    double best_corrected = std::numeric_limits<double>::infinity();

    for (std::size_t y = 1; y <= y_cap; ++y) {
        PrefixSums prefix(series, &masked);
        std::vector<double> z = rank_windows(prefix, grid, series.theta_R);
        std::vector<std::size_t> order;
        order.reserve(grid.M);
        for (std::size_t i = 0; i < grid.M; ++i)
            if (std::isfinite(z[i]) && !overlaps(grid.windows[i], out.regions)) order.push_back(i);
        if (order.empty()) break;
        const std::size_t c = std::min(top_c, order.size());
        std::partial_sort(order.begin(), order.begin() + c, order.end(), [&](std::size_t a, std::size_t b) {
            return z[a] > z[b] || (z[a] == z[b] && a < b);
        });

        std::size_t best = order[0];
        double best_p = std::numeric_limits<double>::infinity();
        WindowSums best_sums;
        for (std::size_t j = 0; j < c; ++j) {
            const Window& w = grid.windows[order[j]];
            WindowSums s = prefix.window(w.start, w.length);
            double p = window_log10_p(s, series.theta_R);
            if (p < best_p) {
                best_p = p;
                best = order[j];
                best_sums = s;
            }
        }
        if (y == 1) out.log10_p_single_raw = best_p;

        WindowSums candidate = pooled;
        add(candidate, best_sums);
        double corrected =
            bonferroni_correct(window_log10_p(candidate, series.theta_R), grid.M, y, y_cap);
        if (y > 1 && corrected >= best_corrected) break;

        const Window& w = grid.windows[best];
        out.regions.push_back({w.start, w.end(), best_p, corrected});
        pooled = candidate;
        best_corrected = corrected;
        for (std::size_t i = w.start; i < w.end(); ++i) masked[i] = true;
    }
    out.log10_p_multi = out.regions.empty() ? 0.0 : best_corrected;
    return out;
}

std::vector<Region> greedy_extract(const ScoreSeries& series, const WindowGrid& grid, std::size_t Y_max,
                                   std::size_t top_c) {
    return greedy_extract_full(series, grid, Y_max, top_c).regions;
}

EnsembleVerdict ensemble_detect(const ScoreSeries& series, const LocalizeConfig& config) {
    require(!series.scores.empty(), "ensemble_detect: empty series");
    EnsembleVerdict v;
    v.log10_p_global = weighted_gamma_pvalue(series).log10_p;
    WindowGrid grid = dyadic_grid(series.scores.size(), config.L_min);
    v.M = grid.M;
    if (!grid.empty()) {
        GreedyResult g = greedy_extract_full(series, grid, config.Y_max, config.top_c);
        v.log10_p_single = std::min(0.0, bonferroni_single(g.log10_p_single_raw, grid.M));
        v.log10_p_multi = std::min(0.0, g.log10_p_multi);
        v.regions = std::move(g.regions);
        v.y = v.regions.size();
    }
    double best = v.log10_p_global;
    v.path_chosen = "global";
    if (v.log10_p_single < best) {
        best = v.log10_p_single;
        v.path_chosen = "single";
    }
    if (v.log10_p_multi < best) {
        best = v.log10_p_multi;
        v.path_chosen = "multi";
    }
    v.log10_p_final = best + std::log10(3.0);
    return v;
}

std::vector<bool> annotate_boundaries(const ScoreSeries& series, double tau, std::size_t window_w) {
    require(window_w >= 1, "annotate_boundaries: window must be at least 1");
    const std::size_t n = series.scores.size();
    const double sd = std::sqrt(series.theta_R);
    std::vector<double> wz(n + 1, 0.0), w(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const TokenScore& t = series.scores[i];
        double wi = t.valid ? t.weight : 0.0;
        wz[i + 1] = wz[i] + wi * (t.fused - 1.0) / sd;
        w[i + 1] = w[i] + wi;
    }
    const std::size_t left = (window_w - 1) / 2;
    const std::size_t right = window_w - 1 - left;
    std::vector<bool> mask(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i >= left ? i - left : 0;
        std::size_t hi = std::min(n, i + right + 1);
        double den = w[hi] - w[lo];
        if (den > 0.0) mask[i] = (wz[hi] - wz[lo]) / den > tau;
    }
    return mask;
}

double miou(const std::vector<bool>& pred, const std::vector<bool>& truth) {
    require(pred.size() == truth.size(), "miou: masks differ in length");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        inter += pred[i] && truth[i];
        uni += pred[i] || truth[i];
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::pair<std::size_t, std::size_t>> mask_runs(const std::vector<bool>& mask) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t i = 0; i < mask.size();) {
        if (!mask[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < mask.size() && mask[j]) ++j;
        runs.emplace_back(i, j - i);
        i = j;
    }
    return runs;
}

}  // namespace gumbelmark
