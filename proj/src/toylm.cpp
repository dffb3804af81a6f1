#include "gumbelmark/toylm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace gumbelmark {

namespace {
constexpr const char* kFormatTag = "gumbelmark-toylm";

void finish_vocab(std::string& vocab, std::array<int, 256>& index) {
    index.fill(-1);
    for (std::size_t i = 0; i < vocab.size(); ++i) index[static_cast<unsigned char>(vocab[i])] = static_cast<int>(i);
}
}  // namespace

ToyModel train_ngram(std::string_view corpus, int order, double smoothing) {
    require(!corpus.empty(), "train_ngram: empty corpus");
    require(order >= 0 && order <= ToyModel::kMaxOrder, "train_ngram: order must be in [0, 8]");
    require(smoothing > 0.0 && std::isfinite(smoothing), "train_ngram: smoothing must be positive");
    ToyModel m;
    m.order_ = order;
    m.smoothing_ = smoothing;

    std::array<bool, 256> present{};
    for (char c : corpus) present[static_cast<unsigned char>(c)] = true;
    for (int c = 0; c < 256; ++c)
        if (present[c]) m.vocab_.push_back(static_cast<char>(c));
    require(m.vocab_.size() <= 4096, "train_ngram: vocabulary too large");
    finish_vocab(m.vocab_, m.index_);

    std::vector<TokenId> ids = m.encode(corpus);
    m.levels_.resize(order + 1);
    for (int j = 0; j <= order; ++j) {
        std::unordered_map<detail::TupleKey, std::unordered_map<TokenId, std::uint32_t>, detail::TupleKeyHash> acc;
        for (std::size_t t = static_cast<std::size_t>(j); t < ids.size(); ++t) {
            detail::TupleKey ctx(std::span<const TokenId>(ids).subspan(t - j, j));
            ++acc[ctx][ids[t]];
        }
        auto& level = m.levels_[j];
        level.reserve(acc.size());
        for (auto& [ctx, counts] : acc) {
            ToyModel::Row row;
            row.counts.assign(counts.begin(), counts.end());
            std::sort(row.counts.begin(), row.counts.end());
            for (auto& c : row.counts) row.total += c.second;
            level.emplace(ctx, std::move(row));
        }
    }
    return m;
}

std::vector<TokenId> ToyModel::encode(std::string_view text) const {
    std::vector<TokenId> out;
    out.reserve(text.size());
    for (char c : text) {
        int id = index_[static_cast<unsigned char>(c)];
        require(id >= 0, "ToyModel: character outside the vocabulary");
        out.push_back(static_cast<TokenId>(id));
    }
    return out;
}

std::string ToyModel::decode(std::span<const TokenId> tokens) const {
    std::string out;
    out.reserve(tokens.size());
    for (TokenId t : tokens) {
        require(t < vocab_.size(), "ToyModel: token id outside the vocabulary");
        out.push_back(vocab_[t]);
    }
    return out;
}

const ToyModel::Row* ToyModel::find_row(std::span<const TokenId> context) const {
    int j = std::min<int>(order_, static_cast<int>(context.size()));
    for (; j >= 0; --j) {
        detail::TupleKey key(context.subspan(context.size() - j, j));
        auto it = levels_[j].find(key);
        if (it != levels_[j].end() && it->second.total > 0) return &it->second;
    }
    return nullptr;
}

void ToyModel::next_probs(std::span<const TokenId> context, double temperature, std::span<double> out) const {
    require(temperature > 0.0, "next_dist: temperature must be positive");
    require(out.size() >= vocab_.size(), "next_dist: output too small");
    for (TokenId t : context) require(t < vocab_.size(), "next_dist: unknown token in context");
    const std::size_t V = vocab_.size();
    const Row* row = find_row(context);
    const double denom = static_cast<double>(row ? row->total : 0) + smoothing_ * V;
    std::fill(out.begin(), out.begin() + V, smoothing_ / denom);
    if (row)
        for (auto [tok, c] : row->counts) out[tok] = (c + smoothing_) / denom;
    if (temperature == 1.0) return;
    // Temper in log space so tiny probabilities do not underflow at low T.
    double mx = -INFINITY;
    for (std::size_t i = 0; i < V; ++i) {
        out[i] = std::log(out[i]) / temperature;
        mx = std::max(mx, out[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < V; ++i) {
        out[i] = std::exp(out[i] - mx);
        total += out[i];
    }
    for (std::size_t i = 0; i < V; ++i) out[i] /= total;
}

ProbVector next_dist(const ToyModel& model, std::span<const TokenId> context, double temperature) {
    std::vector<double> p(model.vocab_size());
    model.next_probs(context, temperature, p);
    std::vector<TokenId> ids(p.size());
    std::iota(ids.begin(), ids.end(), TokenId{0});
    // Keep full support even when tempering underflows a tail entry.
    for (double& x : p) x = std::max(x, 1e-300);
    return ProbVector(std::move(ids), std::move(p));
}

std::vector<double> position_entropies(const ToyModel& model, std::span<const TokenId> tokens) {
    std::vector<double> h(tokens.size());
    std::vector<double> p(model.vocab_size());
    const auto order = static_cast<std::size_t>(model.order());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::size_t lo = i > order ? i - order : 0;
        model.next_probs(tokens.subspan(lo, i - lo), 1.0, p);
        h[i] = entropy(p);
    }
    return h;
}

void ToyModel::save(const std::string& path) const {
    nlohmann::json j;
    j["format"] = kFormatTag;
    j["version"] = kFormatVersion;
    j["order"] = order_;
    j["smoothing"] = smoothing_;
    std::vector<int> vocab;
    for (char c : vocab_) vocab.push_back(static_cast<unsigned char>(c));
    j["vocab"] = vocab;
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& level : levels_) {
        // Sorted so the file is byte-stable across runs.
        std::vector<std::pair<std::vector<TokenId>, const Row*>> rows;
        for (const auto& [ctx, row] : level) rows.emplace_back(std::vector<TokenId>(ctx.v.begin(), ctx.v.begin() + ctx.n), &row);
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        nlohmann::json jl = nlohmann::json::array();
        for (const auto& [ctx, row] : rows) {
            nlohmann::json counts = nlohmann::json::array();
            for (auto [tok, c] : row->counts) counts.push_back({tok, c});
            jl.push_back({{"ctx", ctx}, {"counts", counts}});
        }
        levels.push_back(std::move(jl));
    }
    j["levels"] = std::move(levels);
    std::ofstream f(path);
    require(static_cast<bool>(f), "ToyModel::save: cannot open output file");
    f << j.dump();
}

ToyModel ToyModel::load(const std::string& path) {
    std::ifstream f(path);
    require(static_cast<bool>(f), "ToyModel::load: cannot open model file");
    nlohmann::json j = nlohmann::json::parse(f);
    require(j.value("format", std::string()) == kFormatTag, "ToyModel::load: not a toy model file");
    require(j.value("version", 0) == kFormatVersion, "ToyModel::load: unsupported model version");
    ToyModel m;
    m.order_ = j.at("order").get<int>();
    m.smoothing_ = j.at("smoothing").get<double>();
    for (int c : j.at("vocab").get<std::vector<int>>()) m.vocab_.push_back(static_cast<char>(c));
    finish_vocab(m.vocab_, m.index_);
    const auto& levels = j.at("levels");
    require(static_cast<int>(levels.size()) == m.order_ + 1, "ToyModel::load: level count mismatch");
    m.levels_.resize(levels.size());
    for (std::size_t lv = 0; lv < levels.size(); ++lv) {
        for (const auto& jr : levels[lv]) {
            auto ctx = jr.at("ctx").get<std::vector<TokenId>>();
            Row row;
            for (const auto& c : jr.at("counts")) {
                row.counts.emplace_back(c[0].get<TokenId>(), c[1].get<std::uint32_t>());
                row.total += row.counts.back().second;
            }
            m.levels_[lv].emplace(detail::TupleKey(ctx), std::move(row));
        }
    }
    return m;
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(static_cast<bool>(f), "read_text_file: cannot open file");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace gumbelmark
