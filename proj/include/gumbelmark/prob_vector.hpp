#pragma once

#include <span>
#include <vector>

#include "gumbelmark/types.hpp"

namespace gumbelmark {

// Categorical distribution over a slice of the vocabulary.
// Probabilities are strictly positive and normalized; ids are unique.
class ProbVector {
public:
    ProbVector() = default;
    // Normalizes the weights; throws on non-positive weights, duplicate ids
    // or a size mismatch.
    ProbVector(std::vector<TokenId> ids, std::vector<double> weights);

    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }
    const std::vector<TokenId>& ids() const { return ids_; }
    const std::vector<double>& probs() const { return probs_; }
    TokenId id(std::size_t i) const { return ids_[i]; }
    double prob(std::size_t i) const { return probs_[i]; }

    // Probability of a token id, 0 if absent. Linear scan.
    double prob_of(TokenId t) const;

private:
    std::vector<TokenId> ids_;
    std::vector<double> probs_;
};

// softmax(logits / temperature), sorted by descending probability (ties by
// id), cut at the shortest prefix whose mass reaches top_p, renormalized.
// Token ids are the logit indices.
ProbVector apply_decoding_filters(std::span<const double> logits, double temperature, double top_p);

// Shannon entropy in nats.
double entropy(const ProbVector& p);
double entropy(std::span<const double> probs);

}  // namespace gumbelmark
