#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gumbelmark/detect.hpp"

namespace gumbelmark {

struct Window {
    std::size_t start = 0;
    std::size_t length = 0;
    std::size_t end() const { return start + length; }
};

struct WindowGrid {
    std::vector<Window> windows;
    std::size_t M = 0;
    std::size_t L0 = 0;
    std::vector<std::size_t> level_counts;  // windows per dyadic length, shortest first

    bool empty() const { return M == 0; }
};

// Lengths L0·2^j with stride L/2, L0 the smallest power of two ≥ L_min.
// Returns an empty grid when no dyadic length fits in n.
WindowGrid dyadic_grid(std::size_t n, std::size_t L_min);

struct WindowSums {
    double sum_ws = 0.0;  // Σ w·s over valid positions
    double sum_w = 0.0;
    double sum_w2 = 0.0;
    double sum_s = 0.0;   // unweighted Σ s
    std::size_t n_valid = 0;
};

// Prefix arrays over a score series; masked and invalid positions count as zero.
class PrefixSums {
public:
    PrefixSums() = default;
    explicit PrefixSums(const ScoreSeries& series, const std::vector<bool>* masked = nullptr);

    WindowSums window(std::size_t start, std::size_t length) const;
    std::size_t size() const { return ws_.empty() ? 0 : ws_.size() - 1; }

private:
    std::vector<double> ws_, w_, w2_, s_;
    std::vector<std::size_t> n_;
};

// Multi-region tax: log10 C(M, y) + log10 Y_max. y = 0 is the identity.
double bonferroni_correct(double log10_p_raw, std::size_t M, std::size_t y, std::size_t Y_max);
// Single-best tax: log10 M.
double bonferroni_single(double log10_p_raw, std::size_t M);

struct Region {
    std::size_t start = 0;
    std::size_t end = 0;
    double log10_p_raw = 0.0;        // the region's own weighted-Gamma test
    double log10_p_corrected = 0.0;  // pooled test over regions so far, with the multi-region tax
};

struct LocalizeConfig {
    std::size_t L_min = 50;
    std::size_t Y_max = 5;
    std::size_t top_c = 32;
    double annot_tau = 0.25;
    std::size_t annot_window = 50;
};

struct GreedyResult {
    std::vector<Region> regions;
    double log10_p_single_raw = 0.0;  // best window of the first pass
    double log10_p_multi = 0.0;       // corrected pooled test; 0 when nothing was selected
};

// Standardized excess (Σws − Σw)/sqrt(θ_R Σw²) for every window; serial and
// OpenMP versions give identical results.
std::vector<double> rank_windows(const PrefixSums& prefix, const WindowGrid& grid, double theta_R);
std::vector<double> rank_windows_omp(const PrefixSums& prefix, const WindowGrid& grid, double theta_R);

GreedyResult greedy_extract_full(const ScoreSeries& series, const WindowGrid& grid, std::size_t Y_max, std::size_t top_c);
std::vector<Region> greedy_extract(const ScoreSeries& series, const WindowGrid& grid, std::size_t Y_max, std::size_t top_c);

struct EnsembleVerdict {
    double log10_p_global = 0.0;
    double log10_p_single = 0.0;
    double log10_p_multi = 0.0;
    double log10_p_final = 0.0;
    std::vector<Region> regions;
    std::size_t y = 0;
    std::string path_chosen;  // "global", "single" or "multi"
    std::size_t M = 0;
};

EnsembleVerdict ensemble_detect(const ScoreSeries& series, const LocalizeConfig& config);

// Centered weighted moving average of (s − 1)/sqrt(θ_R) over window_w
// positions; true where it exceeds tau.
std::vector<bool> annotate_boundaries(const ScoreSeries& series, double tau, std::size_t window_w);

double miou(const std::vector<bool>& pred, const std::vector<bool>& truth);

// Run-length encoding of the true runs as (start, length) pairs.
std::vector<std::pair<std::size_t, std::size_t>> mask_runs(const std::vector<bool>& mask);

}  // namespace gumbelmark
