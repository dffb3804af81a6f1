#include "gumbelmark/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gumbelmark {

using nlohmann::json;

namespace {

std::uint64_t parse_u64(const std::string& s) {
    require(!s.empty(), "config: empty key");
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(s, &pos, 0);
    } catch (const std::exception&) {
        throw ContractError("config: bad key value '" + s + "'");
    }
    require(pos == s.size(), "config: trailing characters in key");
    return v;
}

SecretKey key_from_json(const json& j) {
    if (j.is_string()) return SecretKey{parse_u64(j.get<std::string>())};
    require(j.is_number_unsigned() || j.is_number_integer(), "config: key must be a string or integer");
    return SecretKey{j.get<std::uint64_t>()};
}

template <class T>
void read_opt(const json& j, const char* name, T& out) {
    if (auto it = j.find(name); it != j.end()) out = it->get<T>();
}

const char* weighting_tag(Weighting w) { return w == Weighting::entropy ? "entropy" : "uniform"; }

Weighting parse_weighting_tag(const std::string& s) {
    if (s == "uniform") return Weighting::uniform;
    if (s == "entropy") return Weighting::entropy;
    throw ContractError("config: unknown weighting '" + s + "'");
}

}  // namespace

void to_json(json& j, const SamplerConfig& c) {
    j = json{{"k", c.k},
             {"strategy", strategy_name(c.strategy)},
             {"key1", std::to_string(c.key1.value)},
             {"key2", std::to_string(c.key2.value)},
             {"alpha", c.alpha},
             {"a", c.a},
             {"tau", c.tau},
             {"depth", c.depth},
             {"temperature", c.temperature},
             {"top_p", c.top_p},
             {"repeated_context_masking", c.repeated_context_masking},
             {"rng_seed", c.rng_seed}};
}

void from_json(const json& j, SamplerConfig& c) {
    read_opt(j, "k", c.k);
    if (auto it = j.find("strategy"); it != j.end()) c.strategy = parse_strategy(it->get<std::string>());
    if (auto it = j.find("key1"); it != j.end()) c.key1 = key_from_json(*it);
    if (auto it = j.find("key2"); it != j.end()) c.key2 = key_from_json(*it);
    read_opt(j, "alpha", c.alpha);
    read_opt(j, "a", c.a);
    read_opt(j, "tau", c.tau);
    read_opt(j, "depth", c.depth);
    read_opt(j, "temperature", c.temperature);
    read_opt(j, "top_p", c.top_p);
    read_opt(j, "repeated_context_masking", c.repeated_context_masking);
    read_opt(j, "rng_seed", c.rng_seed);
    c.validate();
}

void to_json(json& j, const LocalizeConfig& c) {
    j = json{{"L_min", c.L_min},
             {"Y_max", c.Y_max},
             {"top_c", c.top_c},
             {"annot_tau", c.annot_tau},
             {"annot_window", c.annot_window}};
}

void from_json(const json& j, LocalizeConfig& c) {
    read_opt(j, "L_min", c.L_min);
    read_opt(j, "Y_max", c.Y_max);
    read_opt(j, "top_c", c.top_c);
    read_opt(j, "annot_tau", c.annot_tau);
    read_opt(j, "annot_window", c.annot_window);
    require(c.L_min >= 1 && c.Y_max >= 1 && c.top_c >= 1 && c.annot_window >= 1,
            "config: localize sizes must be positive");
}

void to_json(json& j, const DetectorOptions& c) {
    json keys = json::array();
    for (auto k : c.keys) keys.push_back(std::to_string(k.value));
    j = json{{"k", c.k},
             {"keys", keys},
             {"alpha", c.alpha},
             {"weighting", weighting_tag(c.weighting)},
             {"method", c.method == Method::synthid ? "synthid" : "gumbel"},
             {"synthid_depth", c.synthid_depth},
             {"threshold_log10_p", c.threshold_log10_p}};
}

void from_json(const json& j, DetectorOptions& c) {
    read_opt(j, "k", c.k);
    if (auto it = j.find("keys"); it != j.end()) {
        c.keys.clear();
        for (const auto& k : *it) c.keys.push_back(key_from_json(k));
    }
    read_opt(j, "alpha", c.alpha);
    if (auto it = j.find("weighting"); it != j.end()) c.weighting = parse_weighting_tag(it->get<std::string>());
    if (auto it = j.find("method"); it != j.end()) {
        auto m = it->get<std::string>();
        require(m == "gumbel" || m == "synthid", "config: method must be gumbel or synthid");
        c.method = m == "synthid" ? Method::synthid : Method::gumbel;
    }
    read_opt(j, "synthid_depth", c.synthid_depth);
    read_opt(j, "threshold_log10_p", c.threshold_log10_p);
    require(c.k >= 1 && c.k <= prf_constants::kMaxWindow, "config: detector k must be in [1, 8]");
    require(c.keys.size() <= 2, "config: at most two detector keys");
    require(c.alpha >= 0.0 && c.alpha <= 1.0, "config: detector alpha must be in [0, 1]");
}

ToolkitConfig load_config(const std::string& path) {
    std::ifstream f(path);
    require(static_cast<bool>(f), "config: cannot open config file");
    json j = json::parse(f);
    ToolkitConfig c;
    if (auto it = j.find("sampler"); it != j.end()) c.sampler = it->get<SamplerConfig>();
    if (auto it = j.find("detector"); it != j.end()) c.detector = it->get<DetectorOptions>();
    if (auto it = j.find("localize"); it != j.end()) c.localize = it->get<LocalizeConfig>();
    return c;
}

void save_config(const ToolkitConfig& config, const std::string& path) {
    std::ofstream f(path);
    require(static_cast<bool>(f), "config: cannot write config file");
    f << json{{"sampler", config.sampler}, {"detector", config.detector}, {"localize", config.localize}}.dump(2)
      << "\n";
}

std::vector<SecretKey> parse_keys(const std::string& text) {
    std::vector<SecretKey> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(SecretKey{parse_u64(item)});
    require(out.size() == 1 || out.size() == 2, "config: expected one or two keys");
    return out;
}

std::optional<std::vector<SecretKey>> keys_from_env() {
    const char* v = std::getenv("GUMBELMARK_KEY");
    if (!v || !*v) return std::nullopt;
    return parse_keys(v);
}

void apply_env_keys(ToolkitConfig& config) {
    auto keys = keys_from_env();
    if (!keys) return;
    config.sampler.key1 = (*keys)[0];
    if (keys->size() == 2) config.sampler.key2 = (*keys)[1];
    config.detector.keys = *keys;
}

}  // namespace gumbelmark
