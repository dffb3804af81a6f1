#include "gumbelmark/prob_vector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gumbelmark {

ProbVector::ProbVector(std::vector<TokenId> ids, std::vector<double> weights)
    : ids_(std::move(ids)), probs_(std::move(weights)) {
    require(ids_.size() == probs_.size(), "ProbVector: ids and probs differ in length");
    require(!ids_.empty(), "ProbVector: empty distribution");
    double total = 0.0;
    for (double w : probs_) {
        require(std::isfinite(w) && w > 0.0, "ProbVector: probabilities must be positive and finite");
        total += w;
    }
    for (double& w : probs_) w /= total;
    std::vector<TokenId> sorted(ids_);
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "ProbVector: duplicate token ids");
}

double ProbVector::prob_of(TokenId t) const {
    for (std::size_t i = 0; i < ids_.size(); ++i)
        if (ids_[i] == t) return probs_[i];
    return 0.0;
}

ProbVector apply_decoding_filters(std::span<const double> logits, double temperature, double top_p) {
    require(temperature > 0.0, "apply_decoding_filters: temperature must be positive");
    require(top_p > 0.0 && top_p <= 1.0, "apply_decoding_filters: top_p must be in (0, 1]");
    require(!logits.empty(), "apply_decoding_filters: empty logits");
    double mx = -INFINITY;
    for (double l : logits) {
        require(!std::isnan(l) && l != INFINITY, "apply_decoding_filters: logits must be finite or -inf");
        mx = std::max(mx, l);
    }
    require(mx > -INFINITY, "apply_decoding_filters: all logits are -inf");

    std::vector<double> w(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        w[i] = std::exp((logits[i] - mx) / temperature);
        total += w[i];
    }
    std::vector<TokenId> order(logits.size());
    std::iota(order.begin(), order.end(), TokenId{0});
    std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) { return w[a] > w[b]; });

    std::vector<TokenId> ids;
    std::vector<double> probs;
    double cum = 0.0;
    for (TokenId i : order) {
        if (w[i] <= 0.0) break;
        ids.push_back(i);
        probs.push_back(w[i]);
        cum += w[i] / total;
        if (cum >= top_p - 1e-12) break;
    }
    return ProbVector(std::move(ids), std::move(probs));
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return std::max(h, 0.0);
}

double entropy(const ProbVector& p) { return entropy(p.probs()); }

}  // namespace gumbelmark
