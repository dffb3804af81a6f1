#include "gumbelmark/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "gumbelmark/gamma.hpp"
#include "gumbelmark/stats.hpp"

#ifndef GUMBELMARK_DATA_DIR
#define GUMBELMARK_DATA_DIR "data"
#endif

namespace gumbelmark {

namespace {

constexpr double kEuler = std::numbers::pi * std::numbers::pi / 6.0 - 1.0;

constexpr SecretKey kKey1{0x5EED0001ULL};
constexpr SecretKey kKey2{0x5EED0002ULL};

// Experiments draw fresh keys per trial. Null guarantees average over the
// key, and with one fixed key the common n-grams shared by every document
// would correlate the trials.
std::vector<SecretKey> draw_keys(Rng& rng) { return {SecretKey{rng.next_u64()}, SecretKey{rng.next_u64()}}; }

std::span<const TokenId> tail(std::span<const TokenId> ctx, int order) {
    std::size_t n = std::min<std::size_t>(ctx.size(), static_cast<std::size_t>(std::max(order, 0)));
    return ctx.subspan(ctx.size() - n, n);
}

double neg(double log10_p) { return -log10_p; }

}  // namespace

// ---------------------------------------------------------------------------
// Plumbing

std::string default_corpus_path() { return std::string(GUMBELMARK_DATA_DIR) + "/kjv_excerpt.txt"; }

Lab make_lab(const LabOptions& options) {
    std::string text = read_text_file(options.corpus_path.empty() ? default_corpus_path() : options.corpus_path);
    Lab lab;
    lab.model = train_ngram(text, options.order, options.smoothing);
    lab.proxy = train_ngram(text, options.proxy_order, options.smoothing);
    lab.corpus = lab.model.encode(text);
    return lab;
}

ProbVector filtered_dist(const ToyModel& model, std::span<const TokenId> context, double temperature, double top_p) {
    std::vector<double> p(model.vocab_size());
    model.next_probs(tail(context, model.order()), 1.0, p);
    for (double& x : p) x = std::log(x);
    return apply_decoding_filters(p, temperature, top_p);
}

std::vector<TokenId> random_prompt(const Lab& lab, Rng& rng, std::size_t length) {
    require(lab.corpus.size() > length, "random_prompt: corpus shorter than the prompt");
    std::size_t start = static_cast<std::size_t>(rng.uniform() * static_cast<double>(lab.corpus.size() - length));
    return {lab.corpus.begin() + static_cast<std::ptrdiff_t>(start),
            lab.corpus.begin() + static_cast<std::ptrdiff_t>(start + length)};
}

namespace {

// Generation where each position picks one of two sampler configurations
// (and their decoding filters). Both share one GenState so context windows
// span the whole document.
std::vector<TokenId> generate_mixed(const ToyModel& model, std::span<const TokenId> prompt, std::size_t n,
                                    const SamplerConfig& on, const SamplerConfig& off,
                                    const std::vector<bool>* watermark_on, std::vector<StepInfo>* trace) {
    GenState state(on);
    state.reserve(prompt.size() + n, model.vocab_size());
    state.prime(prompt);
    std::vector<TokenId> ctx(prompt.begin(), prompt.end());
    ctx.reserve(ctx.size() + n);
    if (trace) trace->clear();
    for (std::size_t i = 0; i < n; ++i) {
        bool use_on = !watermark_on || (*watermark_on)[i];
        const SamplerConfig& cfg = use_on ? on : off;
        ProbVector p = filtered_dist(model, ctx, cfg.temperature, cfg.top_p);
        StepInfo info = step_traced(state, p, cfg);
        if (trace) trace->push_back(info);
        ctx.push_back(info.token);
    }
    const auto& h = state.history();
    return {h.begin() + static_cast<std::ptrdiff_t>(prompt.size()), h.end()};
}

}  // namespace

std::vector<TokenId> generate(const ToyModel& model, std::span<const TokenId> prompt, std::size_t n,
                              const SamplerConfig& config, std::vector<StepInfo>* trace,
                              const std::vector<bool>* watermark_on) {
    config.validate();
    if (watermark_on) require(watermark_on->size() >= n, "generate: watermark mask shorter than the text");
    SamplerConfig off = config;
    off.strategy = Strategy::none;
    return generate_mixed(model, prompt, n, config, off, watermark_on, trace);
}

ScoreSeries build_series(const Lab& lab, std::span<const TokenId> tokens, const DetectorSetup& setup) {
    ScoreSeries s = score_tokens(tokens, setup.keys, setup.k, setup.alpha);
    if (setup.weighting == Weighting::entropy) apply_entropy_weights(s, position_entropies(lab.proxy, tokens));
    return s;
}

double bleu(std::span<const TokenId> hyp, std::span<const TokenId> ref, int max_order) {
    require(!hyp.empty() && !ref.empty(), "bleu: empty input");
    require(max_order >= 1 && max_order <= 8, "bleu: max_order must be in [1, 8]");
    double log_sum = 0.0;
    for (int n = 1; n <= max_order; ++n) {
        std::unordered_map<detail::TupleKey, int, detail::TupleKeyHash> ref_counts;
        for (std::size_t i = 0; i + n <= ref.size(); ++i) ++ref_counts[detail::TupleKey(ref.subspan(i, n))];
        std::size_t total = 0, matches = 0;
        std::unordered_map<detail::TupleKey, int, detail::TupleKeyHash> used;
        for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
            detail::TupleKey g(hyp.subspan(i, n));
            ++total;
            auto it = ref_counts.find(g);
            if (it != ref_counts.end() && used[g] < it->second) {
                ++used[g];
                ++matches;
            }
        }
        double pn;
        if (n == 1) {
            if (matches == 0) return 0.0;
            pn = static_cast<double>(matches) / static_cast<double>(total);
        } else {
            pn = (matches + 1.0) / (total + 1.0);
        }
        log_sum += std::log(pn);
    }
    const double c = static_cast<double>(hyp.size()), r = static_cast<double>(ref.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_sum / max_order);
}

double self_bleu(std::span<const TokenId> a, std::span<const TokenId> b, int max_order) {
    return 0.5 * (bleu(a, b, max_order) + bleu(b, a, max_order));
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void Table::write_csv(std::ostream& os) const {
    os << "# schema: " << schema << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
}

void Table::write_csv(const std::string& path) const {
    std::ofstream f(path);
    require(static_cast<bool>(f), "Table::write_csv: cannot open output file");
    write_csv(f);
}

// ---------------------------------------------------------------------------
// False positive calibration

FprResult run_fpr_calibration(const Lab& lab, const FprSpec& spec) {
    require(spec.trials >= 1, "run_fpr_calibration: trials must be positive");
    FprResult out;
    out.detectors = spec.detectors;
    const std::size_t D = spec.detectors.size();
    out.log10_p.assign(D, std::vector<double>(spec.trials, 0.0));

    SamplerConfig gen;
    gen.k = spec.k;
    gen.strategy = Strategy::dual_key;
    gen.alpha = 0.25;
    gen.repeated_context_masking = true;
    const LocalizeConfig loc;
    const int dk = spec.detector_k;

    const auto trials = static_cast<std::ptrdiff_t>(spec.trials);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t t = 0; t < trials; ++t) {
        Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(t)));
        SamplerConfig cfg = gen;
        cfg.rng_seed = rng.next_u64();
        auto gen_keys = draw_keys(rng);
        cfg.key1 = gen_keys[0];
        cfg.key2 = gen_keys[1];
        const auto two = draw_keys(rng);
        const std::vector<SecretKey> one{two[0]};
        const SecretKey synth_key{rng.next_u64()};
        auto prompt = random_prompt(lab, rng);
        auto tokens = generate(lab.model, prompt, spec.length, cfg);

        std::vector<double> entropies;
        for (std::size_t d = 0; d < D; ++d) {
            const std::string& name = spec.detectors[d];
            double lp = 0.0;
            if (name == "classical") {
                lp = weighted_gamma_pvalue(score_tokens(tokens, one, dk, 0.0)).log10_p;
            } else if (name == "early_fusion_0.1") {
                lp = weighted_gamma_pvalue(score_tokens(tokens, two, dk, 0.1)).log10_p;
            } else if (name == "early_fusion_0.5") {
                lp = weighted_gamma_pvalue(score_tokens(tokens, two, dk, 0.5)).log10_p;
            } else if (name == "entropy_weighted" || name == "ensemble") {
                if (entropies.empty()) entropies = position_entropies(lab.proxy, tokens);
                ScoreSeries s = score_tokens(tokens, two, dk, 0.5);
                apply_entropy_weights(s, entropies);
                lp = name == "ensemble" ? ensemble_detect(s, loc).log10_p_final : weighted_gamma_pvalue(s).log10_p;
            } else if (name == "synthid") {
                TournamentConfig tc;
                tc.key = synth_key;
                tc.k = dk;
                lp = synthid_detect(tokens, tc).log10_p;
            } else {
                throw ContractError("run_fpr_calibration: unknown detector " + name);
            }
            out.log10_p[d][static_cast<std::size_t>(t)] = std::min(lp, 0.0);
        }
    }

    for (std::size_t d = 0; d < D; ++d) {
        for (double tau : spec.taus) {
            const double lt = std::log10(tau);
            FprRow row;
            row.detector = spec.detectors[d];
            row.tau = tau;
            row.trials = spec.trials;
            // Small slack so p exactly at tau counts as a rejection.
            for (double lp : out.log10_p[d]) row.false_positives += lp <= lt + 1e-12;
            row.fpr = static_cast<double>(row.false_positives) / static_cast<double>(spec.trials);
            std::tie(row.ci_lo, row.ci_hi) = clopper_pearson(row.false_positives, spec.trials, 0.999);
            out.rows.push_back(row);
        }
    }
    return out;
}

Table FprResult::table() const {
    Table t{"gumbelmark/fpr/v1", {"detector", "tau", "false_positives", "trials", "fpr", "ci_lo", "ci_hi"}, {}};
    for (const auto& r : rows)
        t.rows.push_back({r.detector, fmt(r.tau), std::to_string(r.false_positives), std::to_string(r.trials),
                          fmt(r.fpr), fmt(r.ci_lo), fmt(r.ci_hi)});
    return t;
}

// ---------------------------------------------------------------------------
// Pareto sweep

ParetoResult run_pareto_sweep(const Lab& lab, const ParetoSpec& spec) {
    ParetoResult out;
    for (const GridPoint& gp : spec.grid) {
        SamplerConfig cfg;
        cfg.k = spec.k;
        cfg.strategy = gp.strategy;
        cfg.temperature = spec.temperature;
        cfg.top_p = spec.top_p;
        cfg.repeated_context_masking = spec.masking;
        switch (gp.strategy) {
            case Strategy::dual_key:
            case Strategy::periodic_skip: cfg.alpha = gp.control; break;
            case Strategy::mixing: cfg.a = gp.control; break;
            case Strategy::entropy_skip:
            case Strategy::adaptive_skip: cfg.tau = gp.control; break;
            case Strategy::tournament: cfg.depth = static_cast<int>(gp.control); break;
            default: break;
        }
        cfg.validate();
        const bool dual = gp.strategy == Strategy::dual_key && gp.control > 0.0;

        const std::size_t P = spec.prompts;
        std::vector<double> sb(P), classical(P), weighted(P, std::numeric_limits<double>::quiet_NaN());
        const auto np = static_cast<std::ptrdiff_t>(P);
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < np; ++i) {
            Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(i)));
            auto prompt = random_prompt(lab, rng);
            auto keys = draw_keys(rng);
            SamplerConfig ca = cfg;
            ca.key1 = keys[0];
            ca.key2 = keys[1];
            SamplerConfig cb = ca;
            ca.rng_seed = rng.next_u64();
            cb.rng_seed = rng.next_u64();
            auto a = generate(lab.model, prompt, spec.length, ca);
            auto b = generate(lab.model, prompt, spec.length, cb);
            sb[i] = self_bleu(a, b);
            if (gp.strategy == Strategy::tournament) {
                TournamentConfig tc;
                tc.depth = cfg.depth;
                tc.key = keys[0];
                tc.k = cfg.k;
                classical[i] = neg(synthid_detect(a, tc).log10_p);
            } else {
                if (!dual) keys.pop_back();
                ScoreSeries s = build_series(lab, a, {keys, dual ? gp.control : 0.0, Weighting::uniform, spec.k});
                classical[i] = neg(weighted_gamma_pvalue(s).log10_p);
                apply_entropy_weights(s, position_entropies(lab.proxy, a));
                weighted[i] = neg(weighted_gamma_pvalue(s).log10_p);
            }
        }
        ParetoRow row;
        row.strategy = gp.strategy;
        row.control = gp.control;
        row.mean_self_bleu = mean(sb);
        row.median_self_bleu = median(sb);
        row.median_classical = median(classical);
        row.median_entropy = gp.strategy == Strategy::tournament ? std::numeric_limits<double>::quiet_NaN()
                                                                 : median(weighted);
        out.rows.push_back(row);
    }
    return out;
}

Table ParetoResult::table() const {
    Table t{"gumbelmark/pareto/v1",
            {"strategy", "control", "mean_self_bleu", "median_self_bleu", "median_neglog10p_classical",
             "median_neglog10p_entropy"},
            {}};
    for (const auto& r : rows)
        t.rows.push_back({strategy_name(r.strategy), fmt(r.control), fmt(r.mean_self_bleu), fmt(r.median_self_bleu),
                          fmt(r.median_classical), fmt(r.median_entropy)});
    return t;
}

// ---------------------------------------------------------------------------
// Localization

LocalizationSetup default_localization_setup() {
    LocalizationSetup s;
    s.watermark.k = 3;
    s.watermark.strategy = Strategy::dual_key;
    s.watermark.key1 = kKey1;
    s.watermark.key2 = kKey2;
    s.watermark.alpha = 0.1;
    s.watermark.temperature = 1.0;
    s.watermark.top_p = 0.9;
    s.watermark.repeated_context_masking = true;
    s.detector = {{kKey1, kKey2}, 0.1, Weighting::entropy, 3};
    return s;
}

namespace {

LocalizationSetup with_trial_keys(const LocalizationSetup& setup, Rng& rng) {
    LocalizationSetup s = setup;
    if (!s.fresh_keys) return s;
    auto keys = draw_keys(rng);
    s.watermark.key1 = keys[0];
    s.watermark.key2 = keys[1];
    if (s.detector.keys.size() == 1) keys.pop_back();
    s.detector.keys = keys;
    return s;
}

}  // namespace

PlantedDoc make_planted_doc(const Lab& lab, const LocalizationSetup& setup, std::size_t n,
                            const std::vector<std::pair<std::size_t, std::size_t>>& spans, std::uint64_t seed) {
    PlantedDoc doc;
    doc.truth.assign(n, false);
    for (auto [start, len] : spans) {
        require(start + len <= n, "make_planted_doc: span exceeds the document");
        for (std::size_t i = start; i < start + len; ++i) doc.truth[i] = true;
    }
    Rng rng(seed);
    auto prompt = random_prompt(lab, rng);
    SamplerConfig on = setup.watermark;
    on.rng_seed = rng.next_u64();
    SamplerConfig off = on;
    off.strategy = Strategy::none;
    off.temperature = setup.null_temperature;
    off.top_p = setup.null_top_p;
    doc.tokens = generate_mixed(lab.model, prompt, n, on, off, &doc.truth, nullptr);
    return doc;
}

std::vector<bool> predicted_mask(const EnsembleVerdict& v, std::size_t n) {
    std::vector<bool> pred(n, v.path_chosen == "global");
    const std::size_t used = v.path_chosen == "multi" ? v.regions.size() : std::min<std::size_t>(1, v.regions.size());
    if (v.path_chosen != "global")
        for (std::size_t r = 0; r < used; ++r)
            for (std::size_t i = v.regions[r].start; i < v.regions[r].end; ++i) pred[i] = true;
    return pred;
}

LocalizationOutcome evaluate_localization(const Lab& lab, const LocalizationSetup& setup, const PlantedDoc& doc) {
    ScoreSeries s = build_series(lab, doc.tokens, setup.detector);
    EnsembleVerdict v = ensemble_detect(s, setup.localize);
    LocalizationOutcome o;
    o.global = neg(v.log10_p_global);
    o.single = neg(v.log10_p_single);
    o.multi = neg(v.log10_p_multi);
    o.ensemble = neg(v.log10_p_final);
    o.y = v.y;
    o.iou = miou(predicted_mask(v, doc.tokens.size()), doc.truth);
    o.annot_miou = miou(annotate_boundaries(s, setup.localize.annot_tau, setup.localize.annot_window), doc.truth);
    return o;
}

namespace {

std::vector<LocalizationOutcome> run_planted(const Lab& lab, const LocalizationSetup& setup, std::size_t n,
                                             std::size_t planted, std::size_t K, std::size_t trials,
                                             std::uint64_t seed) {
    require(K >= 1 && planted >= K && planted <= n, "run_planted: bad span layout");
    std::vector<LocalizationOutcome> out(trials);
    const auto nt = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < nt; ++t) {
        std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(t));
        Rng rng(s);
        const std::size_t frag = planted / K;
        const std::size_t seg = n / K;
        require(seg >= frag, "run_planted: fragments do not fit");
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        for (std::size_t j = 0; j < K; ++j) {
            std::size_t slack = seg - frag;
            std::size_t off = static_cast<std::size_t>(rng.uniform() * static_cast<double>(slack + 1));
            spans.emplace_back(j * seg + std::min(off, slack), frag);
        }
        LocalizationSetup trial = with_trial_keys(setup, rng);
        PlantedDoc doc = make_planted_doc(lab, trial, n, spans, rng.next_u64());
        out[static_cast<std::size_t>(t)] = evaluate_localization(lab, trial, doc);
    }
    return out;
}

void add_dilution_rows(DilutionResult& r, const std::string& mode, std::size_t n, std::size_t K,
                       const std::vector<LocalizationOutcome>& o) {
    auto col = [&](double LocalizationOutcome::*m) {
        std::vector<double> v;
        for (const auto& x : o) v.push_back(x.*m);
        return median(v);
    };
    r.rows.push_back({mode, n, K, "global", col(&LocalizationOutcome::global)});
    r.rows.push_back({mode, n, K, "single", col(&LocalizationOutcome::single)});
    r.rows.push_back({mode, n, K, "multi", col(&LocalizationOutcome::multi)});
    r.rows.push_back({mode, n, K, "ensemble", col(&LocalizationOutcome::ensemble)});
    r.outcomes.push_back(o);
}

}  // namespace

std::vector<LocalizationOutcome> run_planted_recovery(const Lab& lab, const LocalizationSetup& setup, std::size_t n,
                                                      std::size_t planted, std::size_t trials, std::uint64_t seed) {
    return run_planted(lab, setup, n, planted, 1, trials, seed);
}

DilutionResult run_dilution_experiment(const Lab& lab, const DilutionSpec& spec) {
    DilutionResult r;
    for (std::size_t i = 0; i < spec.lengths.size(); ++i) {
        std::size_t n = spec.lengths[i];
        add_dilution_rows(r, "length", n, 1,
                          run_planted(lab, spec.setup, n, spec.planted, 1, spec.trials, mix_seed(spec.seed, i)));
    }
    for (std::size_t i = 0; i < spec.fragments.size(); ++i) {
        std::size_t K = spec.fragments[i];
        add_dilution_rows(r, "fragments", spec.fragment_length, K,
                          run_planted(lab, spec.setup, spec.fragment_length, spec.planted, K, spec.trials,
                                      mix_seed(spec.seed, 1000 + i)));
    }
    return r;
}

double DilutionResult::median_for(const std::string& mode, std::size_t n, std::size_t K,
                                  const std::string& method) const {
    for (const auto& row : rows)
        if (row.mode == mode && row.n == n && row.K == K && row.method == method) return row.median;
    throw ContractError("DilutionResult: no such row");
}

Table DilutionResult::table() const {
    Table t{"gumbelmark/dilution/v1", {"mode", "n", "K", "method", "median_neglog10p"}, {}};
    for (const auto& r : rows)
        t.rows.push_back({r.mode, std::to_string(r.n), std::to_string(r.K), r.method, fmt(r.median)});
    return t;
}

std::vector<double> run_null_localization(const Lab& lab, const LocalizationSetup& setup, std::size_t n,
                                          std::size_t trials, std::uint64_t seed) {
    std::vector<double> out(trials);
    const auto nt = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < nt; ++t) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        LocalizationSetup trial = with_trial_keys(setup, rng);
        PlantedDoc doc = make_planted_doc(lab, trial, n, {}, rng.next_u64());
        ScoreSeries s = build_series(lab, doc.tokens, trial.detector);
        out[static_cast<std::size_t>(t)] = ensemble_detect(s, trial.localize).log10_p_final;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Power analysis

PowerResult run_power_mc(const PowerSpec& spec) {
    require(spec.trials >= 2 && spec.n >= 1, "run_power_mc: need trials >= 2 and n >= 1");
    PowerResult out;
    const double n = static_cast<double>(spec.n);
    for (std::size_t ai = 0; ai < spec.alphas.size(); ++ai) {
        const double alpha = spec.alphas[ai];
        const double th = theta_r(alpha);
        std::vector<double> zb(spec.trials), ze(spec.trials), zw(spec.trials), zl(spec.trials);
        std::vector<double> pw(spec.trials), pl(spec.trials);
        const auto nt = static_cast<std::ptrdiff_t>(spec.trials);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t t = 0; t < nt; ++t) {
            // The base stream and the routed stream share their exponentials.
            Rng rng(mix_seed(spec.seed + ai, static_cast<std::uint64_t>(t)));
            double base = 0.0, s1 = 0.0, s2 = 0.0;
            for (std::size_t i = 0; i < spec.n; ++i) {
                double ea = rng.exponential(), eb = rng.exponential();
                bool second = rng.bernoulli(alpha);
                base += spec.mu * ea;
                s1 += second ? eb : spec.mu * ea;
                s2 += second ? spec.mu * ea : eb;
            }
            const auto u = static_cast<std::size_t>(t);
            zb[u] = (base - n) / std::sqrt(n);
            ze[u] = (0.5 * (s1 + s2) - n) / std::sqrt(0.5 * n);
            const double w = (1.0 - alpha) * s1 + alpha * s2;
            zw[u] = (w - n) / std::sqrt(th * n);
            zl[u] = std::max(s1 - n, s2 - n) / std::sqrt(n);
            pw[u] = neg(weighted_gamma_fit(w, n, n, th).log10_p);
            double l1 = log10_gamma_pvalue(s1, n), l2 = log10_gamma_pvalue(s2, n);
            pl[u] = neg(std::min(0.0, std::min(l1, l2) + std::log10(2.0)));
        }
        PowerRow r;
        r.alpha = alpha;
        r.z_base = mean(zb);
        r.z_early = mean(ze);
        r.z_weighted = mean(zw);
        r.z_late = mean(zl);
        r.ratio_early = r.z_early / r.z_base;
        r.ratio_weighted = r.z_weighted / r.z_base;
        r.ratio_late = r.z_late / r.z_base;
        r.median_weighted = median(pw);
        r.median_late = median(pl);
        out.rows.push_back(r);
    }
    return out;
}

Table PowerResult::table() const {
    Table t{"gumbelmark/power/v1",
            {"alpha", "z_base", "z_early", "z_weighted", "z_late", "ratio_early", "ratio_weighted", "ratio_late",
             "median_neglog10p_weighted", "median_neglog10p_late"},
            {}};
    for (const auto& r : rows)
        t.rows.push_back({fmt(r.alpha), fmt(r.z_base), fmt(r.z_early), fmt(r.z_weighted), fmt(r.z_late),
                          fmt(r.ratio_early), fmt(r.ratio_weighted), fmt(r.ratio_late), fmt(r.median_weighted),
                          fmt(r.median_late)});
    return t;
}

// ---------------------------------------------------------------------------
// Score bounds

BoundResult run_score_bounds(const Lab& lab, const BoundSpec& spec) {
    struct Check {
        std::string name;
        Strategy strategy;
        double control;
        bool fused;
    };
    const std::vector<Check> checks = {
        {"single_key", Strategy::single_key, 0.0, false},
        {"dual_key_single_detector", Strategy::dual_key, 0.25, false},
        {"dual_key_early_fusion", Strategy::dual_key, 0.25, true},
        {"mixing", Strategy::mixing, 0.3, false},
        {"periodic_skip", Strategy::periodic_skip, 0.3, false},
        {"adaptive_skip", Strategy::adaptive_skip, 0.3, false},
        {"entropy_skip", Strategy::entropy_skip, 0.3, false},
    };
    BoundResult out;
    for (std::size_t ci = 0; ci < checks.size(); ++ci) {
        const Check& c = checks[ci];
        SamplerConfig cfg;
        cfg.k = spec.k;
        cfg.strategy = c.strategy;
        cfg.temperature = spec.temperature;
        cfg.top_p = spec.top_p;
        cfg.repeated_context_masking = true;
        if (c.strategy == Strategy::dual_key || c.strategy == Strategy::periodic_skip) cfg.alpha = c.control;
        if (c.strategy == Strategy::mixing) cfg.a = c.control;
        if (c.strategy == Strategy::adaptive_skip || c.strategy == Strategy::entropy_skip) cfg.tau = c.control;
        const double det_alpha = c.fused ? c.control : 0.0;
        const double th = theta_r(det_alpha);

        std::vector<double> S(spec.sequences), B(spec.sequences), D(spec.sequences);
        std::vector<std::size_t> T(spec.sequences);
        const auto ns = static_cast<std::ptrdiff_t>(spec.sequences);
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t q = 0; q < ns; ++q) {
            Rng rng(mix_seed(spec.seed + ci, static_cast<std::uint64_t>(q)));
            SamplerConfig run = cfg;
            auto keys = draw_keys(rng);
            run.key1 = keys[0];
            run.key2 = keys[1];
            run.rng_seed = rng.next_u64();
            auto prompt = random_prompt(lab, rng);
            std::vector<StepInfo> trace;
            auto tokens = generate(lab.model, prompt, spec.length, run, &trace);
            ScoreSeries s = score_tokens(tokens, keys, spec.k, det_alpha);
            double sum_s = 0.0, sum_b = 0.0;
            std::size_t count = 0;
            for (std::size_t i = static_cast<std::size_t>(spec.k); i < tokens.size(); ++i) {
                const StepInfo& info = trace[i];
                if (info.mask != MaskEvent::none) continue;
                // Periodic skips draw no candidate; the emitted token has the same law.
                double p = info.candidate_prob > 0.0 ? info.candidate_prob : info.prob;
                double h = -p * std::log(p);
                double bound = 1.0;
                switch (c.strategy) {
                    case Strategy::single_key: bound += kEuler * h; break;
                    case Strategy::dual_key: bound += (c.fused ? th : 1.0 - c.control) * kEuler * h; break;
                    case Strategy::mixing:
                        bound += kEuler * h + (1.0 - std::pow(c.control, 1.0 / p)) * std::log(1.0 - c.control);
                        break;
                    case Strategy::periodic_skip: bound += (1.0 - c.control) * kEuler * h; break;
                    case Strategy::adaptive_skip:
                        bound += kEuler * h + std::log(1.0 - c.control) * std::pow(c.control, 1.0 / p);
                        break;
                    case Strategy::entropy_skip:
                        bound += kEuler * h + c.control * std::log(1.0 - std::pow(c.control, p));
                        break;
                    default: break;
                }
                sum_s += c.fused ? s.scores[i].fused : s.scores[i].s1;
                sum_b += bound;
                ++count;
            }
            const auto u = static_cast<std::size_t>(q);
            S[u] = sum_s;
            B[u] = sum_b;
            D[u] = sum_s - sum_b;
            T[u] = count;
        }
        BoundRow row;
        row.check = c.name;
        for (std::size_t t : T) row.tokens += t;
        row.mean_score = mean(S);
        row.mean_bound = mean(B);
        row.se = stddev(D) / std::sqrt(static_cast<double>(D.size()));
        row.holds = mean(D) >= -3.0 * row.se;
        out.rows.push_back(row);
    }
    return out;
}

Table BoundResult::table() const {
    Table t{"gumbelmark/bounds/v1", {"check", "tokens", "mean_score", "mean_bound", "se", "holds"}, {}};
    for (const auto& r : rows)
        t.rows.push_back({r.check, std::to_string(r.tokens), fmt(r.mean_score), fmt(r.mean_bound), fmt(r.se),
                          r.holds ? "1" : "0"});
    return t;
}

// ---------------------------------------------------------------------------
// Speculative decoding

std::vector<TokenId> speculative_generate(const ToyModel& target, const ToyModel& draft, std::span<const TokenId> prompt,
                                          std::size_t n, const SamplerConfig& config, double draft_temperature,
                                          bool watermark, std::size_t* accepted_out) {
    config.validate();
    require(target.vocab_size() == draft.vocab_size(), "speculative_generate: vocabularies differ");
    const std::size_t V = target.vocab_size();
    const auto k = static_cast<std::size_t>(config.k);
    Prf prf(config.k);
    Rng rng(config.rng_seed);
    std::vector<TokenId> ctx(prompt.begin(), prompt.end());
    std::vector<TokenId> out;
    out.reserve(n);
    std::vector<double> pd(V), qd(V);
    std::size_t accepted = 0;
    std::unordered_set<detail::TupleKey, detail::TupleKeyHash> seen;

    auto pick = [&](const ProbVector& dist, bool keyed, SecretKey key) -> TokenId {
        if (!keyed) return dist.id(rng.categorical(dist.probs()));
        std::span<const TokenId> window(out.data() + out.size() - k, k);
        auto r = prf_vector(prf, dist.ids(), window, key);
        return gumbel_select(dist, r).token;
    };

    for (std::size_t i = 0; i < n; ++i) {
        ProbVector p = filtered_dist(target, ctx, config.temperature, config.top_p);
        ProbVector q = filtered_dist(draft, ctx, draft_temperature, config.top_p);
        std::fill(pd.begin(), pd.end(), 0.0);
        std::fill(qd.begin(), qd.end(), 0.0);
        for (std::size_t j = 0; j < p.size(); ++j) pd[p.id(j)] = p.prob(j);
        for (std::size_t j = 0; j < q.size(); ++j) qd[q.id(j)] = q.prob(j);

        // A repeated context would replay the same keyed choices, so it
        // falls back to plain sampling like the masked sampler.
        bool keyed = watermark && out.size() >= k;
        if (keyed) keyed = seen.insert(detail::TupleKey(std::span<const TokenId>(out.data() + out.size() - k, k))).second;
        TokenId x = pick(q, keyed, config.key1);
        TokenId token;
        if (rng.uniform() < std::min(1.0, pd[x] / qd[x])) {
            token = x;
            ++accepted;
        } else {
            std::vector<TokenId> ids;
            std::vector<double> w;
            for (std::size_t v = 0; v < V; ++v) {
                double r = pd[v] - qd[v];
                if (r > 0.0) {
                    ids.push_back(static_cast<TokenId>(v));
                    w.push_back(r);
                }
            }
            token = pick(ProbVector(std::move(ids), std::move(w)), keyed, config.key2);
        }
        out.push_back(token);
        ctx.push_back(token);
    }
    if (accepted_out) *accepted_out = accepted;
    return out;
}

SpecSimResult run_speculative_sim(const Lab& lab, const SpecSimSpec& spec) {
    SpecSimResult out;
    const std::string text = lab.model.decode(lab.corpus);
    for (std::size_t di = 0; di < spec.drafts.size(); ++di) {
        const DraftSetting& d = spec.drafts[di];
        ToyModel draft = train_ngram(text, d.draft_order, lab.model.smoothing());
        SamplerConfig cfg;
        cfg.k = spec.k;
        cfg.strategy = Strategy::dual_key;
        cfg.temperature = spec.temperature;
        cfg.top_p = spec.top_p;

        const std::size_t N = spec.trials;
        std::vector<std::size_t> acc_on(N), acc_off(N);
        std::vector<std::vector<TokenId>> texts(N);
        std::vector<std::vector<SecretKey>> keys(N);
        const auto nt = static_cast<std::ptrdiff_t>(N);
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t t = 0; t < nt; ++t) {
            const auto u = static_cast<std::size_t>(t);
            Rng rng(mix_seed(spec.seed + di, u));
            auto prompt = random_prompt(lab, rng);
            keys[u] = draw_keys(rng);
            SamplerConfig on = cfg;
            on.key1 = keys[u][0];
            on.key2 = keys[u][1];
            SamplerConfig off = on;
            on.rng_seed = rng.next_u64();
            off.rng_seed = rng.next_u64();
            texts[u] = speculative_generate(lab.model, draft, prompt, spec.length, on, d.draft_temperature, true,
                                            &acc_on[u]);
            speculative_generate(lab.model, draft, prompt, spec.length, off, d.draft_temperature, false, &acc_off[u]);
        }
        double total = static_cast<double>(N * spec.length);
        double a_on = 0.0, a_off = 0.0;
        for (std::size_t u = 0; u < N; ++u) {
            a_on += static_cast<double>(acc_on[u]);
            a_off += static_cast<double>(acc_off[u]);
        }
        a_on /= total;
        a_off /= total;
        // Per-trial acceptance fractions give a variance that respects
        // within-text correlation.
        std::vector<double> f_on(N), f_off(N);
        for (std::size_t u = 0; u < N; ++u) {
            f_on[u] = static_cast<double>(acc_on[u]) / static_cast<double>(spec.length);
            f_off[u] = static_cast<double>(acc_off[u]) / static_cast<double>(spec.length);
        }
        double se = std::sqrt((std::pow(stddev(f_on), 2) + std::pow(stddev(f_off), 2)) / static_cast<double>(N));
        double z = se > 0.0 ? (a_on - a_off) / se : 0.0;

        for (double det_alpha : {0.5, std::clamp(1.0 - a_on, 0.0, 1.0)}) {
            std::vector<double> lp(N);
#pragma omp parallel for schedule(dynamic)
            for (std::ptrdiff_t t = 0; t < nt; ++t) {
                const auto u = static_cast<std::size_t>(t);
                lp[u] = neg(weighted_gamma_pvalue(score_tokens(texts[u], keys[u], spec.k, det_alpha)).log10_p);
            }
            out.rows.push_back({d.draft_order, d.draft_temperature, a_on, a_off, z, det_alpha, median(lp)});
        }
    }
    return out;
}

Table SpecSimResult::table() const {
    Table t{"gumbelmark/specsim/v1",
            {"draft_order", "draft_temperature", "acceptance_on", "acceptance_off", "acceptance_z", "detector_alpha",
             "median_neglog10p"},
            {}};
    for (const auto& r : rows)
        t.rows.push_back({std::to_string(r.draft_order), fmt(r.draft_temperature), fmt(r.acceptance_on),
                          fmt(r.acceptance_off), fmt(r.acceptance_z), fmt(r.detector_alpha), fmt(r.median)});
    return t;
}

// ---------------------------------------------------------------------------
// Radioactivity

std::vector<Trace> simulate_student(const Lab& lab, const RadioSpec& spec, double beta, std::uint64_t seed,
                                    std::vector<SecretKey>* keys_out) {
    require(beta >= 0.0 && beta <= 1.0, "simulate_student: beta must be in [0, 1]");
    SamplerConfig teacher;
    teacher.k = spec.k;
    teacher.strategy = Strategy::dual_key;
    teacher.alpha = spec.teacher_alpha;
    teacher.repeated_context_masking = true;
    teacher.temperature = spec.temperature;
    teacher.top_p = spec.top_p;

    Rng rng(seed);
    const auto keys = draw_keys(rng);
    teacher.key1 = keys[0];
    teacher.key2 = keys[1];
    if (keys_out) *keys_out = keys;
    Prf prf(spec.k);
    const auto k = static_cast<std::size_t>(spec.k);
    std::vector<Trace> traces(spec.traces);
    std::vector<double> dense(lab.model.vocab_size());
    for (auto& tr : traces) {
        auto prompt = random_prompt(lab, rng);
        SamplerConfig cfg = teacher;
        cfg.rng_seed = rng.next_u64();
        tr.tokens = generate(lab.model, prompt, spec.trace_length, cfg);
        tr.predictions.assign(tr.tokens.size(), 0);
        tr.entropies.assign(tr.tokens.size(), 0.0);
        std::vector<TokenId> ctx(prompt);
        for (std::size_t i = 0; i < tr.tokens.size(); ++i) {
            if (i >= k) {
                ProbVector p = filtered_dist(lab.model, ctx, spec.temperature, spec.top_p);
                lab.model.next_probs(tail(ctx, lab.model.order()), 1.0, dense);
                tr.entropies[i] = entropy(dense);
                if (rng.bernoulli(beta)) {
                    SecretKey key = keys[rng.bernoulli(spec.teacher_alpha) ? 1 : 0];
                    std::span<const TokenId> window(tr.tokens.data() + i - k, k);
                    auto r = prf_vector(prf, p.ids(), window, key);
                    tr.predictions[i] = gumbel_select(p, r).token;
                } else {
                    tr.predictions[i] = p.id(rng.categorical(p.probs()));
                }
            }
            ctx.push_back(tr.tokens[i]);
        }
    }
    return traces;
}

RadioResult run_radioactivity(const Lab& lab, const RadioSpec& spec) {
    RadioResult out;
    const std::size_t B = spec.betas.size(), W = spec.weightings.size(), N = spec.trials;
    out.log10_p.assign(B, std::vector<std::vector<double>>(W, std::vector<double>(N)));
    for (std::size_t b = 0; b < B; ++b) {
        const auto nt = static_cast<std::ptrdiff_t>(N);
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t t = 0; t < nt; ++t) {
            std::vector<SecretKey> keys;
            auto traces =
                simulate_student(lab, spec, spec.betas[b], mix_seed(spec.seed + b, static_cast<std::uint64_t>(t)), &keys);
            for (std::size_t w = 0; w < W; ++w)
                out.log10_p[b][w][static_cast<std::size_t>(t)] =
                    radioactivity_pvalue(traces, keys, spec.k, spec.teacher_alpha, spec.weightings[w]).log10_p;
        }
        for (std::size_t w = 0; w < W; ++w) {
            std::vector<double> negs, u;
            for (double lp : out.log10_p[b][w]) {
                negs.push_back(-lp);
                u.push_back(std::pow(10.0, lp));
            }
            out.rows.push_back({spec.betas[b], weighting_name(spec.weightings[w]), median(negs),
                                ks_pvalue(ks_uniform_statistic(u), u.size())});
        }
    }
    return out;
}

Table RadioResult::table() const {
    Table t{"gumbelmark/radioactivity/v1", {"beta", "weighting", "median_neglog10p", "ks_pvalue"}, {}};
    for (const auto& r : rows) t.rows.push_back({fmt(r.beta), r.weighting, fmt(r.median), fmt(r.ks_pvalue)});
    return t;
}

// ---------------------------------------------------------------------------
// Microbenchmark

BenchResult bench_sampling(const BenchSpec& spec) {
    require(spec.survivors >= 1 && spec.steps >= 1, "bench_sampling: survivors and steps must be positive");
    Rng rng(spec.seed);
    std::vector<ProbVector> stream;
    for (int j = 0; j < 16; ++j) {
        std::vector<TokenId> ids(spec.survivors);
        std::vector<double> w(spec.survivors);
        for (std::size_t i = 0; i < spec.survivors; ++i) {
            ids[i] = static_cast<TokenId>(i * 37 + j);
            w[i] = 1.0 / (1.0 + static_cast<double>(i)) * (0.5 + rng.uniform());
        }
        stream.emplace_back(std::move(ids), std::move(w));
    }
    struct Case {
        std::string name;
        Strategy strategy;
    };
    const std::vector<Case> cases = {{"single_key", Strategy::single_key}, {"dual_key", Strategy::dual_key},
                                     {"mixing", Strategy::mixing},         {"periodic_skip", Strategy::periodic_skip},
                                     {"entropy_skip", Strategy::entropy_skip}, {"tournament", Strategy::tournament}};
    BenchResult out;
    for (const Case& c : cases) {
        SamplerConfig cfg;
        cfg.strategy = c.strategy;
        cfg.key1 = kKey1;
        cfg.key2 = kKey2;
        cfg.alpha = c.strategy == Strategy::dual_key ? 0.25 : 0.2;
        cfg.depth = spec.depth;
        cfg.rng_seed = spec.seed;
        GenState state(cfg);
        state.reserve(spec.steps + 8, spec.survivors);
        for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.k); ++i) step(state, stream[i % 16], cfg);
        const std::uint64_t calls0 = prf_call_count();
        auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < spec.steps; ++i) step(state, stream[i % 16], cfg);
        auto t1 = std::chrono::steady_clock::now();
        const double ns = std::chrono::duration<double, std::nano>(t1 - t0).count();
        out.rows.push_back({c.name, ns / static_cast<double>(spec.steps),
                            static_cast<double>(prf_call_count() - calls0) / static_cast<double>(spec.steps)});
    }
    return out;
}

Table BenchResult::table() const {
    Table t{"gumbelmark/bench/v1", {"strategy", "ns_per_token", "prf_calls_per_step"}, {}};
    for (const auto& r : rows) t.rows.push_back({r.strategy, fmt(r.ns_per_token), fmt(r.prf_calls_per_step)});
    return t;
}

}  // namespace gumbelmark
