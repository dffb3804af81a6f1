#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gumbelmark/detail/tuple_key.hpp"
#include "gumbelmark/prob_vector.hpp"

namespace gumbelmark {

// Character n-gram model with additive smoothing. Contexts never seen in
// training back off to their longest seen suffix.
class ToyModel {
public:
    static constexpr int kMaxOrder = 8;
    static constexpr int kFormatVersion = 1;

    ToyModel() = default;

    int order() const { return order_; }
    double smoothing() const { return smoothing_; }
    std::size_t vocab_size() const { return vocab_.size(); }
    const std::string& vocab() const { return vocab_; }

    std::vector<TokenId> encode(std::string_view text) const;
    std::string decode(std::span<const TokenId> tokens) const;

    // Dense tempered distribution over the whole vocabulary, written to out.
    void next_probs(std::span<const TokenId> context, double temperature, std::span<double> out) const;

    void save(const std::string& path) const;
    static ToyModel load(const std::string& path);

    friend ToyModel train_ngram(std::string_view corpus, int order, double smoothing);

    struct Row {
        std::vector<std::pair<TokenId, std::uint32_t>> counts;
        std::uint64_t total = 0;
    };

private:
    const Row* find_row(std::span<const TokenId> context) const;

    int order_ = 0;
    double smoothing_ = 1.0;
    std::string vocab_;
    std::array<int, 256> index_{};
    // levels_[j] maps a length-j context to its next-token counts.
    std::vector<std::unordered_map<detail::TupleKey, Row, detail::TupleKeyHash>> levels_;
};

ToyModel train_ngram(std::string_view corpus, int order, double smoothing);

ProbVector next_dist(const ToyModel& model, std::span<const TokenId> context, double temperature);

// Entropy (nats) of the untempered next-token distribution at each
// position i given tokens[0, i).
std::vector<double> position_entropies(const ToyModel& model, std::span<const TokenId> tokens);

std::string read_text_file(const std::string& path);

}  // namespace gumbelmark
