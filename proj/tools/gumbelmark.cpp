// Command-line front end: model training, generation, detection and the
// experiment harness. JSONL in, JSONL or CSV out.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gumbelmark/config.hpp"
#include "gumbelmark/harness.hpp"

using namespace gumbelmark;
using nlohmann::json;

namespace {

struct Common {
    std::string config_path;
    std::string corpus;
    std::string model_path;
    std::string out;
    int order = 4;
    int proxy_order = 2;
    double smoothing = 0.1;
    std::uint64_t seed = 0;
    bool full_scale = false;
};

ToolkitConfig load(const Common& c) {
    ToolkitConfig cfg = c.config_path.empty() ? ToolkitConfig{} : load_config(c.config_path);
    apply_env_keys(cfg);
    return cfg;
}

Lab lab_from(const Common& c) {
    LabOptions o;
    o.corpus_path = c.corpus;
    o.order = c.order;
    o.proxy_order = c.proxy_order;
    o.smoothing = c.smoothing;
    Lab lab = make_lab(o);
    if (!c.model_path.empty()) lab.model = ToyModel::load(c.model_path);
    return lab;
}

// Owns a file stream when --out is given, otherwise writes to stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            require(static_cast<bool>(*file_), "cannot open output file");
        }
    }
    std::ostream& get() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

template <class F>
void each_jsonl(const std::string& path, F&& f) {
    std::ifstream file;
    std::istream* in = &std::cin;
    if (path != "-") {
        file.open(path);
        require(static_cast<bool>(file), "cannot open input file");
        in = &file;
    }
    std::string line;
    std::size_t n = 0;
    while (std::getline(*in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        f(json::parse(line), n++);
    }
}

json record_id(const json& rec, std::size_t n) {
    if (auto it = rec.find("id"); it != rec.end()) return *it;
    if (auto it = rec.find("prompt_id"); it != rec.end()) return *it;
    return n;
}

std::vector<SecretKey> detector_keys(const ToolkitConfig& cfg) {
    if (!cfg.detector.keys.empty()) return cfg.detector.keys;
    std::vector<SecretKey> keys{cfg.sampler.key1};
    if (cfg.sampler.strategy == Strategy::dual_key) keys.push_back(cfg.sampler.key2);
    return keys;
}

ScoreSeries series_for(const std::vector<TokenId>& tokens, const ToolkitConfig& cfg, const ToyModel* proxy) {
    auto keys = detector_keys(cfg);
    ScoreSeries s = score_tokens(tokens, keys, cfg.detector.k, cfg.detector.alpha);
    if (cfg.detector.weighting == Weighting::entropy) {
        require(proxy != nullptr, "entropy weighting needs a proxy model (--proxy)");
        apply_entropy_weights(s, position_entropies(*proxy, tokens));
    }
    return s;
}

json rle(const std::vector<bool>& mask) {
    json runs = json::array();
    for (auto [start, end] : mask_runs(mask)) runs.push_back({start, end});
    return runs;
}

void add_common(CLI::App* app, Common& c, bool lab_options) {
    app->add_option("--config", c.config_path, "Structured JSON config file");
    app->add_option("-o,--out", c.out, "Output file (default stdout)");
    app->add_option("--seed", c.seed, "Base seed");
    if (lab_options) {
        app->add_option("--corpus", c.corpus, "Training corpus (default: bundled excerpt)");
        app->add_option("--model", c.model_path, "Saved toy model used as the target");
        app->add_option("--order", c.order, "Target n-gram order");
        app->add_option("--proxy-order", c.proxy_order, "Proxy n-gram order for entropy weights");
        app->add_option("--smoothing", c.smoothing, "Additive smoothing");
        app->add_flag("--full-scale", c.full_scale, "Use full-scale trial counts (1e6 null texts, 5000 prompts)");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gumbelmark: dual-key Gumbel-max watermark toolkit"};
    app.require_subcommand(1);
    Common c;

    // train-toylm
    auto* train = app.add_subcommand("train-toylm", "Train and save a character n-gram model");
    add_common(train, c, true);
    train->callback([&] {
        require(!c.out.empty(), "train-toylm needs --out");
        ToyModel m = train_ngram(read_text_file(c.corpus.empty() ? default_corpus_path() : c.corpus), c.order,
                                 c.smoothing);
        m.save(c.out);
    });

    // generate
    std::size_t gen_count = 1, gen_length = 200, prompt_len = 32;
    auto* gen = app.add_subcommand("generate", "Generate watermarked token streams as JSONL");
    add_common(gen, c, true);
    gen->add_option("-n,--count", gen_count, "Number of generations");
    gen->add_option("--length", gen_length, "Tokens per generation");
    gen->add_option("--prompt-length", prompt_len, "Prompt tokens drawn from the corpus");
    gen->callback([&] {
        ToolkitConfig cfg = load(c);
        Lab lab = lab_from(c);
        Output out(c.out);
        for (std::size_t i = 0; i < gen_count; ++i) {
            std::uint64_t seed = mix_seed(c.seed, i);
            Rng rng(seed);
            auto prompt = random_prompt(lab, rng, prompt_len);
            SamplerConfig s = cfg.sampler;
            s.rng_seed = seed;
            auto tokens = generate(lab.model, prompt, gen_length, s);
            out.get() << json{{"prompt_id", i},
                              {"tokens", tokens},
                              {"strategy", strategy_name(s.strategy)},
                              {"seed", seed},
                              {"text", lab.model.decode(tokens)}}
                             .dump()
                      << "\n";
        }
    });

    // detect
    std::string input = "-", proxy_path;
    bool any_not_detected = false;
    auto* det = app.add_subcommand("detect", "Score JSONL token records");
    add_common(det, c, false);
    det->add_option("-i,--input", input, "JSONL with a tokens array per line ('-' for stdin)");
    det->add_option("--proxy", proxy_path, "Proxy toy model for entropy weighting");
    det->callback([&] {
        ToolkitConfig cfg = load(c);
        std::unique_ptr<ToyModel> proxy;
        if (!proxy_path.empty()) proxy = std::make_unique<ToyModel>(ToyModel::load(proxy_path));
        Output out(c.out);
        each_jsonl(input, [&](const json& rec, std::size_t n) {
            auto tokens = rec.at("tokens").get<std::vector<TokenId>>();
            json v;
            double lp;
            if (cfg.detector.method == Method::synthid) {
                TournamentConfig tc;
                tc.depth = cfg.detector.synthid_depth;
                tc.key = detector_keys(cfg)[0];
                tc.k = cfg.detector.k;
                SynthIdVerdict s = synthid_detect(tokens, tc);
                lp = s.log10_p;
                v = {{"method", "synthid"}, {"n_valid", s.n_valid}, {"statistic", s.z}};
            } else {
                DetectionVerdict d = weighted_gamma_pvalue(series_for(tokens, cfg, proxy.get()));
                lp = d.log10_p;
                v = {{"method", "gumbel"}, {"n_valid", d.n_valid}, {"statistic", d.statistic}};
            }
            v["id"] = record_id(rec, n);
            v["log10_p"] = lp;
            v["detected"] = lp <= cfg.detector.threshold_log10_p;
            any_not_detected |= !(lp <= cfg.detector.threshold_log10_p);
            out.get() << v.dump() << "\n";
        });
    });

    // localize
    bool with_mask = false;
    auto* loc = app.add_subcommand("localize", "Find watermarked regions in JSONL token records");
    add_common(loc, c, false);
    loc->add_option("-i,--input", input, "JSONL with a tokens array per line ('-' for stdin)");
    loc->add_option("--proxy", proxy_path, "Proxy toy model for entropy weighting");
    loc->add_flag("--annotate", with_mask, "Emit the run-length encoded annotation mask");
    loc->callback([&] {
        ToolkitConfig cfg = load(c);
        std::unique_ptr<ToyModel> proxy;
        if (!proxy_path.empty()) proxy = std::make_unique<ToyModel>(ToyModel::load(proxy_path));
        Output out(c.out);
        each_jsonl(input, [&](const json& rec, std::size_t n) {
            auto tokens = rec.at("tokens").get<std::vector<TokenId>>();
            ScoreSeries s = series_for(tokens, cfg, proxy.get());
            EnsembleVerdict v = ensemble_detect(s, cfg.localize);
            json regions = json::array();
            for (const Region& r : v.regions)
                regions.push_back({{"start", r.start}, {"end", r.end}, {"log10_p", r.log10_p_raw}});
            json o = {{"id", record_id(rec, n)},
                      {"regions", regions},
                      {"log10_p_global", v.log10_p_global},
                      {"log10_p_final", v.log10_p_final},
                      {"path_chosen", v.path_chosen}};
            if (with_mask)
                o["annotation_mask"] = rle(annotate_boundaries(s, cfg.localize.annot_tau, cfg.localize.annot_window));
            out.get() << o.dump() << "\n";
        });
    });

    // radioactivity
    std::string weighting = "sqrt_norm";
    bool cross_trace = false;
    auto* radio = app.add_subcommand("radioactivity", "Pooled radioactivity test over JSONL traces");
    add_common(radio, c, false);
    radio->add_option("-i,--input", input, "JSONL with tokens, predictions and entropies per trace");
    radio->add_option("--weighting", weighting, "uniform, sqrt_norm, log_norm, linear_norm, tanh_norm or power:<b>");
    radio->add_flag("--cross-trace-only", cross_trace, "Deduplicate across traces only");
    radio->callback([&] {
        ToolkitConfig cfg = load(c);
        std::vector<Trace> traces;
        each_jsonl(input, [&](const json& rec, std::size_t) {
            traces.push_back({rec.at("tokens").get<std::vector<TokenId>>(),
                              rec.at("predictions").get<std::vector<TokenId>>(),
                              rec.at("entropies").get<std::vector<double>>()});
        });
        auto keys = detector_keys(cfg);
        DetectionVerdict v = radioactivity_pvalue(traces, keys, cfg.detector.k, cfg.detector.alpha,
                                                  parse_weighting(weighting), !cross_trace);
        Output out(c.out);
        out.get() << json{{"traces", traces.size()},
                          {"weighting", weighting},
                          {"n_valid", v.n_valid},
                          {"statistic", v.statistic},
                          {"log10_p", v.log10_p}}
                         .dump()
                  << "\n";
    });

    // calibrate-fpr
    FprSpec fpr;
    auto* cal = app.add_subcommand("calibrate-fpr", "False positive rates on unwatermarked text");
    add_common(cal, c, true);
    cal->add_option("--trials", fpr.trials, "Null texts");
    cal->add_option("--length", fpr.length, "Tokens per text");
    cal->add_option("--detector-k", fpr.detector_k, "Detector context width");
    cal->callback([&] {
        if (c.full_scale) fpr.trials = 1000000;
        fpr.seed = c.seed;
        Output out(c.out);
        run_fpr_calibration(lab_from(c), fpr).table().write_csv(out.get());
    });

    // pareto
    ParetoSpec par;
    auto* pareto = app.add_subcommand("pareto", "Diversity versus detectability sweep");
    add_common(pareto, c, true);
    pareto->add_option("--prompts", par.prompts, "Prompts per grid point");
    pareto->add_option("--length", par.length, "Tokens per generation");
    pareto->callback([&] {
        if (c.full_scale) par.prompts = 5000;
        par.seed = c.seed;
        Output out(c.out);
        run_pareto_sweep(lab_from(c), par).table().write_csv(out.get());
    });

    // dilution
    DilutionSpec dil;
    auto* dilution = app.add_subcommand("dilution", "Localization under dilution and fragmentation");
    add_common(dilution, c, true);
    dilution->add_option("--trials", dil.trials, "Documents per configuration");
    dilution->add_option("--planted", dil.planted, "Watermarked tokens per document");
    dilution->add_option("--lengths", dil.lengths, "Document lengths");
    dilution->add_option("--fragments", dil.fragments, "Fragment counts");
    dilution->callback([&] {
        if (c.full_scale) dil.trials = 1000;
        dil.seed = c.seed;
        Output out(c.out);
        run_dilution_experiment(lab_from(c), dil).table().write_csv(out.get());
    });

    // power-mc
    PowerSpec pow;
    auto* power = app.add_subcommand("power-mc", "Early versus late fusion on synthetic scores");
    add_common(power, c, false);
    power->add_option("--trials", pow.trials, "Monte Carlo trials");
    power->add_option("--n", pow.n, "Tokens per trial");
    power->add_option("--mu", pow.mu, "Mean watermarked score");
    power->add_option("--alphas", pow.alphas, "Routing probabilities");
    power->callback([&] {
        pow.seed = c.seed;
        Output out(c.out);
        run_power_mc(pow).table().write_csv(out.get());
    });

    // spec-sim
    SpecSimSpec sim;
    auto* spec = app.add_subcommand("spec-sim", "Watermarked speculative decoding simulation");
    add_common(spec, c, true);
    spec->add_option("--trials", sim.trials, "Generations per draft");
    spec->add_option("--length", sim.length, "Tokens per generation");
    spec->callback([&] {
        sim.seed = c.seed;
        Output out(c.out);
        run_speculative_sim(lab_from(c), sim).table().write_csv(out.get());
    });

    // bench
    BenchSpec bench;
    auto* b = app.add_subcommand("bench", "Per-token sampling cost by strategy");
    add_common(b, c, false);
    b->add_option("--steps", bench.steps, "Timed steps per strategy");
    b->add_option("--survivors", bench.survivors, "Top-p survivors per step");
    b->callback([&] {
        bench.seed = c.seed;
        Output out(c.out);
        bench_sampling(bench).table().write_csv(out.get());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (det->parsed()) return any_not_detected ? 1 : 0;
    return 0;
}
