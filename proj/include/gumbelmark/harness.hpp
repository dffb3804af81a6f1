#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gumbelmark/detect.hpp"
#include "gumbelmark/localize.hpp"
#include "gumbelmark/radioactive.hpp"
#include "gumbelmark/sampling.hpp"
#include "gumbelmark/toylm.hpp"

namespace gumbelmark {

// ---------------------------------------------------------------------------
// Shared experiment plumbing

// Target model, order-reduced proxy (entropy weights, speculative draft) and
// the encoded training corpus used for prompts.
struct Lab {
    ToyModel model;
    ToyModel proxy;
    std::vector<TokenId> corpus;
};

struct LabOptions {
    std::string corpus_path;  // empty means the bundled corpus
    int order = 4;
    int proxy_order = 2;
    double smoothing = 0.1;
};

std::string default_corpus_path();
Lab make_lab(const LabOptions& options = {});

// Untempered model probabilities passed through temperature and top-p.
ProbVector filtered_dist(const ToyModel& model, std::span<const TokenId> context, double temperature, double top_p);

std::vector<TokenId> random_prompt(const Lab& lab, Rng& rng, std::size_t length = 32);

// Continues `prompt` for n tokens and returns the continuation only. The
// prompt also seeds the watermark context. watermark_on, when given, switches
// the configured strategy on per position (off positions are plain samples).
std::vector<TokenId> generate(const ToyModel& model, std::span<const TokenId> prompt, std::size_t n,
                              const SamplerConfig& config, std::vector<StepInfo>* trace = nullptr,
                              const std::vector<bool>* watermark_on = nullptr);

struct DetectorSetup {
    std::vector<SecretKey> keys;
    double alpha = 0.5;
    Weighting weighting = Weighting::uniform;
    int k = 3;
};

ScoreSeries build_series(const Lab& lab, std::span<const TokenId> tokens, const DetectorSetup& setup);

// Symmetric mean of add-one smoothed BLEU (orders ≥ 2 smoothed) with brevity penalty.
double bleu(std::span<const TokenId> hypothesis, std::span<const TokenId> reference, int max_order = 4);
double self_bleu(std::span<const TokenId> a, std::span<const TokenId> b, int max_order = 4);

// CSV table with a schema line as the first row.
struct Table {
    std::string schema;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void write_csv(std::ostream& os) const;
    void write_csv(const std::string& path) const;
};

std::string fmt(double v);

// ---------------------------------------------------------------------------
// False positive calibration

struct FprSpec {
    std::size_t trials = 100000;
    std::size_t length = 256;
    std::uint64_t seed = 1;
    int k = 3;
    int detector_k = 3;  // differs from k to check the wrong-window case
    std::vector<double> taus = {1e-1, 1e-2, 1e-3, 1e-4};
    std::vector<std::string> detectors = {"classical", "early_fusion_0.1", "early_fusion_0.5",
                                          "entropy_weighted", "synthid", "ensemble"};
};

struct FprRow {
    std::string detector;
    double tau = 0.0;
    std::size_t false_positives = 0;
    std::size_t trials = 0;
    double fpr = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct FprResult {
    std::vector<std::string> detectors;
    std::vector<std::vector<double>> log10_p;  // [detector][trial]
    std::vector<FprRow> rows;
    Table table() const;
};

FprResult run_fpr_calibration(const Lab& lab, const FprSpec& spec);

// ---------------------------------------------------------------------------
// Diversity versus detectability

struct GridPoint {
    Strategy strategy = Strategy::dual_key;
    double control = 0.0;
};

struct ParetoSpec {
    std::size_t prompts = 200;
    std::size_t length = 200;
    std::uint64_t seed = 2;
    int k = 3;
    double temperature = 0.8;
    double top_p = 0.9;
    bool masking = true;
    std::vector<GridPoint> grid = {{Strategy::dual_key, 0.0},  {Strategy::dual_key, 0.1},
                                   {Strategy::dual_key, 0.25}, {Strategy::dual_key, 0.5},
                                   {Strategy::mixing, 0.2},    {Strategy::mixing, 0.5},
                                   {Strategy::periodic_skip, 0.2}, {Strategy::entropy_skip, 0.1},
                                   {Strategy::entropy_skip, 0.3}, {Strategy::tournament, 2},
                                   {Strategy::tournament, 20}};
};

struct ParetoRow {
    Strategy strategy;
    double control = 0.0;
    double mean_self_bleu = 0.0;
    double median_self_bleu = 0.0;
    double median_classical = 0.0;  // median −log10 p
    double median_entropy = 0.0;    // NaN where entropy weighting does not apply
};

struct ParetoResult {
    std::vector<ParetoRow> rows;
    Table table() const;
};

ParetoResult run_pareto_sweep(const Lab& lab, const ParetoSpec& spec);

// ---------------------------------------------------------------------------
// Localization: dilution, fragmentation, planted recovery, null FWER

struct LocalizationSetup {
    SamplerConfig watermark;  // used inside planted spans
    double null_temperature = 1.0;
    double null_top_p = 1.0;
    DetectorSetup detector;
    LocalizeConfig localize;
    bool fresh_keys = true;  // per-trial keys replace the configured ones
};

LocalizationSetup default_localization_setup();

struct PlantedDoc {
    std::vector<TokenId> tokens;
    std::vector<bool> truth;
};

// Null text with watermarked spans of the given lengths at the given starts.
PlantedDoc make_planted_doc(const Lab& lab, const LocalizationSetup& setup, std::size_t n,
                            const std::vector<std::pair<std::size_t, std::size_t>>& spans, std::uint64_t seed);

struct LocalizationOutcome {
    double global = 0.0;  // −log10 p
    double single = 0.0;
    double multi = 0.0;
    double ensemble = 0.0;
    double iou = 0.0;  // IoU of the ensemble's predicted mask with the planted truth
    double annot_miou = 0.0;
    std::size_t y = 0;
};

// Tokens the ensemble flags: the whole text on the global path, the best
// window on the single path, the union of regions on the multi path.
std::vector<bool> predicted_mask(const EnsembleVerdict& verdict, std::size_t n);

LocalizationOutcome evaluate_localization(const Lab& lab, const LocalizationSetup& setup, const PlantedDoc& doc);

struct DilutionSpec {
    std::size_t trials = 100;
    std::size_t planted = 400;
    std::vector<std::size_t> lengths = {1000, 2000, 4000, 8000, 12000};
    std::size_t fragment_length = 8000;
    std::vector<std::size_t> fragments = {1, 2, 3, 5};
    std::uint64_t seed = 3;
    LocalizationSetup setup = default_localization_setup();
};

struct DilutionRow {
    std::string mode;  // "length" or "fragments"
    std::size_t n = 0;
    std::size_t K = 1;
    std::string method;
    double median = 0.0;  // median −log10 p
};

struct DilutionResult {
    std::vector<DilutionRow> rows;
    std::vector<std::vector<LocalizationOutcome>> outcomes;  // per configuration, per trial
    double median_for(const std::string& mode, std::size_t n, std::size_t K, const std::string& method) const;
    Table table() const;
};

DilutionResult run_dilution_experiment(const Lab& lab, const DilutionSpec& spec);

// Single planted block at a uniform random position.
std::vector<LocalizationOutcome> run_planted_recovery(const Lab& lab, const LocalizationSetup& setup, std::size_t n,
                                                      std::size_t planted, std::size_t trials, std::uint64_t seed);

// Final ensemble log10 p on fully unwatermarked documents.
std::vector<double> run_null_localization(const Lab& lab, const LocalizationSetup& setup, std::size_t n,
                                          std::size_t trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Early versus late fusion power on synthetic exponential scores

struct PowerSpec {
    std::size_t trials = 20000;
    std::size_t n = 400;
    double mu = 1.5;  // mean watermarked score under the routed key
    std::vector<double> alphas = {0.1, 0.3, 0.5};
    std::uint64_t seed = 4;
};

struct PowerRow {
    double alpha = 0.0;
    double z_base = 0.0;
    double z_early = 0.0;     // equal weights
    double z_weighted = 0.0;  // weights (1 − α, α)
    double z_late = 0.0;      // mean of the larger single-key z
    double ratio_early = 0.0;
    double ratio_weighted = 0.0;
    double ratio_late = 0.0;
    double median_weighted = 0.0;  // median −log10 p
    double median_late = 0.0;      // min-p over both keys with a factor 2
};

struct PowerResult {
    std::vector<PowerRow> rows;
    Table table() const;
};

PowerResult run_power_mc(const PowerSpec& spec);

// ---------------------------------------------------------------------------
// Score bounds on the toy LM

struct BoundSpec {
    std::size_t sequences = 2000;
    std::size_t length = 48;
    std::uint64_t seed = 5;
    int k = 3;
    double temperature = 1.0;
    double top_p = 0.95;
};

struct BoundRow {
    std::string check;
    std::size_t tokens = 0;
    double mean_score = 0.0;  // per sequence
    double mean_bound = 0.0;
    double se = 0.0;          // standard error of the mean difference
    bool holds = false;       // mean_score ≥ mean_bound − 3 se
};

struct BoundResult {
    std::vector<BoundRow> rows;
    Table table() const;
};

BoundResult run_score_bounds(const Lab& lab, const BoundSpec& spec);

// ---------------------------------------------------------------------------
// Speculative decoding with draft key 1 and correction key 2

struct DraftSetting {
    int draft_order = 2;
    double draft_temperature = 1.0;
};

struct SpecSimSpec {
    std::size_t trials = 200;
    std::size_t length = 400;
    std::uint64_t seed = 6;
    int k = 3;
    double temperature = 1.0;
    double top_p = 0.95;
    std::vector<DraftSetting> drafts = {{0, 1.0}, {1, 1.0}, {2, 1.0}};
};

struct SpecRow {
    int draft_order = 0;
    double draft_temperature = 1.0;
    double acceptance_on = 0.0;
    double acceptance_off = 0.0;
    double acceptance_z = 0.0;  // two-sample z for on versus off
    double detector_alpha = 0.0;
    double median = 0.0;        // median −log10 p
};

struct SpecSimResult {
    std::vector<SpecRow> rows;
    Table table() const;
};

// Drafts of each order are trained on the lab corpus.
SpecSimResult run_speculative_sim(const Lab& lab, const SpecSimSpec& spec);

// One draft-propose / target-verify token stream. accepted_out counts
// accepted proposals.
std::vector<TokenId> speculative_generate(const ToyModel& target, const ToyModel& draft, std::span<const TokenId> prompt,
                                          std::size_t n, const SamplerConfig& config, double draft_temperature,
                                          bool watermark, std::size_t* accepted_out);

// ---------------------------------------------------------------------------
// Radioactivity with a simulated student

struct RadioSpec {
    std::size_t trials = 100;
    std::size_t traces = 10;
    std::size_t trace_length = 300;
    std::vector<double> betas = {0.0, 0.25, 0.5, 1.0};
    std::vector<EntropyWeighting> weightings = {{WeightingKind::uniform, 1.0},     {WeightingKind::sqrt_norm, 1.0},
                                                {WeightingKind::log_norm, 1.0},    {WeightingKind::linear_norm, 1.0},
                                                {WeightingKind::tanh_norm, 1.0},   {WeightingKind::power, 0.5},
                                                {WeightingKind::power, 1.0},       {WeightingKind::power, 1.5}};
    std::uint64_t seed = 7;
    int k = 3;
    double teacher_alpha = 0.1;
    double temperature = 0.8;
    double top_p = 0.9;
};

// Teacher traces from the watermarked sampler and student predictions:
// with probability β the Gumbel-max choice under the teacher keys,
// otherwise a plain sample of the student model. Teacher keys are drawn
// from the seed and reported through keys_out.
std::vector<Trace> simulate_student(const Lab& lab, const RadioSpec& spec, double beta, std::uint64_t seed,
                                    std::vector<SecretKey>* keys_out = nullptr);

struct RadioRow {
    double beta = 0.0;
    std::string weighting;
    double median = 0.0;      // median −log10 p
    double ks_pvalue = 0.0;   // uniformity of p across trials
};

struct RadioResult {
    std::vector<RadioRow> rows;
    std::vector<std::vector<std::vector<double>>> log10_p;  // [beta][weighting][trial]
    Table table() const;
};

RadioResult run_radioactivity(const Lab& lab, const RadioSpec& spec);

// ---------------------------------------------------------------------------
// Sampling microbenchmark

struct BenchSpec {
    std::size_t steps = 20000;
    std::size_t survivors = 200;
    std::uint64_t seed = 8;
    int depth = 10;
};

struct BenchRow {
    std::string strategy;
    double ns_per_token = 0.0;
    double prf_calls_per_step = 0.0;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    Table table() const;
};

BenchResult bench_sampling(const BenchSpec& spec);

}  // namespace gumbelmark
