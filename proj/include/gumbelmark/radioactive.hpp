#pragma once

#include <span>
#include <string>
#include <vector>

#include "gumbelmark/detect.hpp"

namespace gumbelmark {

// One teacher trace scored by teacher forcing. predictions[t] and
// entropies[t] describe the student's next-token distribution given the
// teacher prefix tokens[0, t); entries before position k are ignored.
struct Trace {
    std::vector<TokenId> tokens;
    std::vector<TokenId> predictions;
    std::vector<double> entropies;
};

enum class WeightingKind { uniform, sqrt_norm, log_norm, linear_norm, tanh_norm, power };

struct EntropyWeighting {
    WeightingKind kind = WeightingKind::uniform;
    double beta = 1.0;  // exponent for power
};

std::string weighting_name(const EntropyWeighting& w);
EntropyWeighting parse_weighting(const std::string& name);

// Normalized kinds map f(Ĥ) to [0.1, 1] with Ĥ = (H − H_min)/(H_max − H_min);
// power returns H^β unanchored; uniform returns 1.
double entropy_weight_fn(double H, double H_min, double H_max, EntropyWeighting kind);

// Within each trace only the first occurrence of a context is kept (when
// within_trace is set); then the first global occurrence of each
// (context, prediction) pair, traces taken in input order.
std::vector<std::vector<bool>> dedup_two_level(std::span<const Trace> traces, int k, bool within_trace = true);

DetectionVerdict radioactivity_pvalue(std::span<const Trace> traces, std::span<const SecretKey> keys, int k,
                                      double alpha, EntropyWeighting weighting, bool within_trace = true);

}  // namespace gumbelmark
