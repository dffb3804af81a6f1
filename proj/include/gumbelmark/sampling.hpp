#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "gumbelmark/detail/tuple_key.hpp"
#include "gumbelmark/prf.hpp"
#include "gumbelmark/prob_vector.hpp"
#include "gumbelmark/rng.hpp"
#include "gumbelmark/tournament.hpp"

namespace gumbelmark {

enum class Strategy { single_key, dual_key, mixing, periodic_skip, entropy_skip, adaptive_skip, tournament, none };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

struct SamplerConfig {
    int k = 3;
    Strategy strategy = Strategy::single_key;
    SecretKey key1;
    SecretKey key2;
    double alpha = 0.0;  // dual-key routing or periodic skip rate
    double a = 0.5;      // mixing
    double tau = 0.1;    // skip thresholds
    int depth = 10;      // tournament layers
    double temperature = 0.8;
    double top_p = 0.9;
    bool repeated_context_masking = false;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

enum class MaskEvent { none, switched_key, fallback };

// What happened at one step; used by experiments and score-bound checks.
struct StepInfo {
    TokenId token = 0;
    double prob = 0.0;            // probability of the emitted token
    TokenId candidate = 0;        // Gumbel-max choice before any skip
    double candidate_prob = 0.0;
    double candidate_r = 0.0;     // selected PRF value (mixed value for mixing)
    int key_index = 0;            // 0 when unwatermarked
    bool watermarked = false;     // emitted token is the Gumbel/tournament choice
    bool skipped = false;         // a skip rule discarded the watermark
    MaskEvent mask = MaskEvent::none;
};

struct GumbelChoice {
    std::size_t index = 0;
    TokenId token = 0;
    double r = 0.0;
};

// argmin over v of (−ln r_v)/p_v; ties go to the lowest token id.
GumbelChoice gumbel_select(const ProbVector& probs, std::span<const double> r);

// low_branch holds with probability a: r = a·r1, else a + (1 − a)·r1.
double mixing_transform(double r1, bool low_branch, double a);

// Plain rule skips when r < τ; normalized rule when r < τ^p.
bool adaptive_skip_check(double r_selected, double p_selected, double tau, bool normalized);

class GenState {
public:
    explicit GenState(const SamplerConfig& config);

    void reset(std::uint64_t rng_seed);
    void reserve(std::size_t history_len, std::size_t vocab_len);
    // Appends tokens to the history without sampling, e.g. a fixed context.
    void prime(std::span<const TokenId> tokens) { history_.insert(history_.end(), tokens.begin(), tokens.end()); }

    const std::vector<TokenId>& history() const { return history_; }
    Rng& rng() { return rng_; }
    std::size_t seen_size() const { return seen_.size(); }

    // Returns 1 or 2; Bernoulli(α) selects key 2.
    int route_key(double alpha) { return rng_.bernoulli(alpha) ? 2 : 1; }

private:
    friend StepInfo step_traced(GenState&, const ProbVector&, const SamplerConfig&);
    bool seen(std::span<const TokenId> window, int key_index) const;
    void mark(std::span<const TokenId> window, int key_index);

    Prf prf_;
    Rng rng_;
    std::vector<TokenId> history_;
    std::unordered_set<detail::TupleKey, detail::TupleKeyHash> seen_;
    std::vector<double> r_;
    std::vector<double> scratch_;
};

TokenId step(GenState& state, const ProbVector& probs, const SamplerConfig& config);
StepInfo step_traced(GenState& state, const ProbVector& probs, const SamplerConfig& config);

}  // namespace gumbelmark
