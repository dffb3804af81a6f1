#include "gumbelmark/sampling.hpp"

#include <cmath>
#include <limits>

namespace gumbelmark {

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::single_key: return "single_key";
        case Strategy::dual_key: return "dual_key";
        case Strategy::mixing: return "mixing";
        case Strategy::periodic_skip: return "periodic_skip";
        case Strategy::entropy_skip: return "entropy_skip";
        case Strategy::adaptive_skip: return "adaptive_skip";
        case Strategy::tournament: return "tournament";
        case Strategy::none: return "none";
    }
    return "unknown";
}

Strategy parse_strategy(const std::string& name) {
    for (Strategy s : {Strategy::single_key, Strategy::dual_key, Strategy::mixing, Strategy::periodic_skip,
                       Strategy::entropy_skip, Strategy::adaptive_skip, Strategy::tournament, Strategy::none})
        if (name == strategy_name(s)) return s;
    throw ContractError("unknown strategy: " + name);
}

void SamplerConfig::validate() const {
    require(k >= 1 && k <= prf_constants::kMaxWindow, "SamplerConfig: k must be in [1, 8]");
    require(temperature > 0.0, "SamplerConfig: temperature must be positive");
    require(top_p > 0.0 && top_p <= 1.0, "SamplerConfig: top_p must be in (0, 1]");
    switch (strategy) {
        case Strategy::dual_key:
            require(alpha >= 0.0 && alpha <= 0.5, "SamplerConfig: alpha must be in [0, 0.5]");
            break;
        case Strategy::periodic_skip:
            require(alpha >= 0.0 && alpha < 1.0, "SamplerConfig: skip rate must be in [0, 1)");
            break;
        case Strategy::mixing:
            require(a > 0.0 && a < 1.0, "SamplerConfig: a must be in (0, 1)");
            break;
        case Strategy::entropy_skip:
        case Strategy::adaptive_skip:
            require(tau > 0.0 && tau < 1.0, "SamplerConfig: tau must be in (0, 1)");
            break;
        case Strategy::tournament:
            require(depth >= 1, "SamplerConfig: depth must be at least 1");
            break;
        default:
            break;
    }
}

GumbelChoice gumbel_select(const ProbVector& probs, std::span<const double> r) {
    require(!probs.empty(), "gumbel_select: empty distribution");
    require(r.size() >= probs.size(), "gumbel_select: r not aligned with probs");
    GumbelChoice best;
    double best_z = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < probs.size(); ++i) {
        double z = -std::log(r[i]) / probs.prob(i);
        if (z < best_z || (z == best_z && probs.id(i) < best.token)) {
            best_z = z;
            best.index = i;
            best.token = probs.id(i);
            best.r = r[i];
        }
    }
    return best;
}

double mixing_transform(double r1, bool low_branch, double a) {
    return low_branch ? a * r1 : a + (1.0 - a) * r1;
}

bool adaptive_skip_check(double r_selected, double p_selected, double tau, bool normalized) {
    require(p_selected > 0.0 && p_selected <= 1.0, "adaptive_skip_check: p must be in (0, 1]");
    return r_selected < (normalized ? std::pow(tau, p_selected) : tau);
}

GenState::GenState(const SamplerConfig& config) : prf_(config.k), rng_(config.rng_seed) { config.validate(); }

void GenState::reset(std::uint64_t rng_seed) {
    rng_.seed(rng_seed);
    history_.clear();
    seen_.clear();
}

void GenState::reserve(std::size_t history_len, std::size_t vocab_len) {
    history_.reserve(history_len);
    r_.reserve(vocab_len);
    scratch_.reserve(vocab_len);
}

bool GenState::seen(std::span<const TokenId> window, int key_index) const {
    detail::TupleKey key(window);
    key.push(static_cast<TokenId>(key_index));
    return seen_.count(key) != 0;
}

void GenState::mark(std::span<const TokenId> window, int key_index) {
    detail::TupleKey key(window);
    key.push(static_cast<TokenId>(key_index));
    seen_.insert(key);
}

StepInfo step_traced(GenState& state, const ProbVector& probs, const SamplerConfig& config) {
    require(!probs.empty(), "step: empty distribution");
    StepInfo info;
    auto emit_plain = [&]() {
        std::size_t i = state.rng_.categorical(probs.probs());
        info.token = probs.id(i);
        info.prob = probs.prob(i);
    };
    auto finish = [&]() {
        state.history_.push_back(info.token);
        return info;
    };

    const auto k = static_cast<std::size_t>(config.k);
    if (state.history_.size() < k || config.strategy == Strategy::none) {
        emit_plain();
        return finish();
    }
    std::span<const TokenId> window(state.history_.data() + state.history_.size() - k, k);

    int key_index = 1;
    if (config.strategy == Strategy::dual_key) key_index = state.route_key(config.alpha);
    if (config.strategy == Strategy::periodic_skip && state.rng_.bernoulli(config.alpha)) {
        info.skipped = true;
        emit_plain();
        return finish();
    }

    if (config.repeated_context_masking) {
        if (state.seen(window, key_index)) {
            int other = 3 - key_index;
            if (config.strategy == Strategy::dual_key && !state.seen(window, other)) {
                key_index = other;
                info.mask = MaskEvent::switched_key;
            } else {
                info.mask = MaskEvent::fallback;
                emit_plain();
                return finish();
            }
        }
        state.mark(window, key_index);
    }
    info.key_index = key_index;

    if (config.strategy == Strategy::tournament) {
        TournamentConfig tc;
        tc.depth = config.depth;
        tc.key = config.key1;
        tc.k = config.k;
        state.scratch_.resize(probs.size());
        info.token = tournament_sample(probs, window, tc, state.rng_, state.scratch_);
        info.prob = probs.prob_of(info.token);
        info.candidate = info.token;
        info.candidate_prob = info.prob;
        info.watermarked = true;
        return finish();
    }

    const SecretKey key = key_index == 1 ? config.key1 : config.key2;
    state.r_.resize(probs.size());
    prf_vector_unchecked(state.prf_, probs.ids(), window, key, state.r_);
    if (config.strategy == Strategy::mixing)
        for (double& r : state.r_) r = mixing_transform(r, state.rng_.bernoulli(config.a), config.a);

    GumbelChoice choice = gumbel_select(probs, state.r_);
    info.candidate = choice.token;
    info.candidate_prob = probs.prob(choice.index);
    info.candidate_r = choice.r;

    if ((config.strategy == Strategy::entropy_skip || config.strategy == Strategy::adaptive_skip) &&
        adaptive_skip_check(choice.r, info.candidate_prob, config.tau, config.strategy == Strategy::entropy_skip)) {
        info.skipped = true;
        emit_plain();
        return finish();
    }
    info.token = choice.token;
    info.prob = info.candidate_prob;
    info.watermarked = true;
    return finish();
}

TokenId step(GenState& state, const ProbVector& probs, const SamplerConfig& config) {
    return step_traced(state, probs, config).token;
}

}  // namespace gumbelmark
