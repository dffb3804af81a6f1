#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gumbelmark/detect.hpp"
#include "gumbelmark/localize.hpp"
#include "gumbelmark/sampling.hpp"

namespace gumbelmark {

// Structured config file: {"sampler": {...}, "detector": {...}, "localize": {...}}.
// Keys are written as decimal strings so 64-bit values survive JSON tooling.
void to_json(nlohmann::json& j, const SamplerConfig& c);
void from_json(const nlohmann::json& j, SamplerConfig& c);
void to_json(nlohmann::json& j, const LocalizeConfig& c);
void from_json(const nlohmann::json& j, LocalizeConfig& c);

// Detector options without the proxy function, which the CLI builds from a model path.
struct DetectorOptions {
    int k = 3;
    std::vector<SecretKey> keys;
    double alpha = 0.5;
    Weighting weighting = Weighting::uniform;
    Method method = Method::gumbel;
    int synthid_depth = 10;
    double threshold_log10_p = -3.0;  // detected when log10 p ≤ threshold
};
void to_json(nlohmann::json& j, const DetectorOptions& c);
void from_json(const nlohmann::json& j, DetectorOptions& c);

struct ToolkitConfig {
    SamplerConfig sampler;
    DetectorOptions detector;
    LocalizeConfig localize;
};

ToolkitConfig load_config(const std::string& path);
void save_config(const ToolkitConfig& config, const std::string& path);

// Parses "k1" or "k1,k2" (decimal or 0x-prefixed hex).
std::vector<SecretKey> parse_keys(const std::string& text);

// Keys from the GUMBELMARK_KEY environment variable, if set.
std::optional<std::vector<SecretKey>> keys_from_env();

// Applies the environment override to both sampler and detector keys.
void apply_env_keys(ToolkitConfig& config);

}  // namespace gumbelmark
