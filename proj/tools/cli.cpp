#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "influence/ablation.hpp"
#include "influence/attack.hpp"
#include "influence/influence.hpp"
#include "influence/rag.hpp"
#include "influence/serialize.hpp"

namespace influence::cli {

namespace {

/// Flags shared by every command. Unset optionals leave lower layers alone.
struct CommonFlags {
    std::optional<std::string> config;
    bool mock = false;
    std::optional<std::string> llm_script;
    std::optional<std::string> llm_provider, llm_endpoint, llm_model;
    std::optional<std::string> embed_provider, embed_endpoint, embed_model;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> n_samples;
    std::optional<double> temperature;
    std::optional<int> max_tokens;
    std::optional<std::string> estimator;
    std::optional<double> threshold;
    std::optional<std::string> out_dir;
    bool budget_2k1 = false;
    bool unconditioned = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON config file (default: $INFLUENCE_CONFIG)");
    cmd->add_flag("--mock", f.mock, "Use the scripted mock LLM and the mock embedder");
    cmd->add_option("--llm-script", f.llm_script, "Mock LLM script (JSON)");
    cmd->add_option("--llm-provider", f.llm_provider, "mock or remote");
    cmd->add_option("--llm-endpoint", f.llm_endpoint, "Chat completions URL");
    cmd->add_option("--llm-model", f.llm_model, "Chat model name");
    cmd->add_option("--embed-provider", f.embed_provider, "mock or remote");
    cmd->add_option("--embed-endpoint", f.embed_endpoint, "Embeddings URL");
    cmd->add_option("--embed-model", f.embed_model, "Embedding model name");
    cmd->add_option("--seed", f.seed, "Root seed for every random draw");
    cmd->add_option("--workers", f.workers, "Concurrent episodes");
    cmd->add_option("-n,--n-samples", f.n_samples, "Samples per context (N)");
    cmd->add_option("--temperature", f.temperature, "Sampling temperature");
    cmd->add_option("--max-tokens", f.max_tokens, "Completion length cap");
    cmd->add_option("--estimator", f.estimator, "clustered or literal");
    cmd->add_option("--threshold", f.threshold, "Cluster threshold on (cos+1)/2");
    cmd->add_option("--out-dir", f.out_dir, "Directory for result files");
    cmd->add_flag("--budget-2k1", f.budget_2k1, "Also sample the k leave-one-out contexts");
    cmd->add_flag("--unconditioned", f.unconditioned, "Also sample H(Y) and report the PID breakdown");
}

RunConfig resolve(const CommonFlags& f, const EnvLookup& env) {
    RunConfig cfg;
    if (f.config) {
        apply_config_file(cfg, *f.config);
    } else if (auto path = env("INFLUENCE_CONFIG")) {
        apply_config_file(cfg, *path);
    }
    apply_env(cfg, env);

    if (f.mock) {
        cfg.llm.provider = "mock";
        cfg.embedding.provider = "mock";
    }
    if (f.llm_provider) cfg.llm.provider = *f.llm_provider;
    if (f.llm_endpoint) cfg.llm.endpoint = *f.llm_endpoint;
    if (f.llm_model) cfg.llm.model = *f.llm_model;
    if (f.llm_script) cfg.llm.script = *f.llm_script;
    if (f.embed_provider) cfg.embedding.provider = *f.embed_provider;
    if (f.embed_endpoint) cfg.embedding.endpoint = *f.embed_endpoint;
    if (f.embed_model) cfg.embedding.model = *f.embed_model;
    if (f.seed) cfg.seed = *f.seed;
    if (f.workers) cfg.workers = *f.workers;
    if (f.n_samples) cfg.n_samples = *f.n_samples;
    if (f.temperature) cfg.temperature = *f.temperature;
    if (f.max_tokens) cfg.max_tokens = *f.max_tokens;
    if (f.estimator) {
        try {
            cfg.estimator = estimator_from_string(*f.estimator);
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    }
    if (f.threshold) cfg.cluster_threshold = *f.threshold;
    if (f.out_dir) cfg.output_dir = *f.out_dir;
    if (f.budget_2k1) cfg.budget_2k1 = true;
    if (f.unconditioned) cfg.compute_unconditioned = true;
    cfg.validate();
    return cfg;
}

std::vector<DatasetRecord> load_dataset(const std::string& path, std::ostream& err,
                                        std::size_t expected_documents = 5) {
    IngestOptions opts;
    opts.expected_documents = expected_documents;
    auto result = ingest(path, opts);
    for (const auto& d : result.diagnostics) {
        err << path << ":" << d.line << ": skipped: " << d.message << "\n";
    }
    return std::move(result.records);
}

const DatasetRecord& find_record(const std::vector<DatasetRecord>& records, const std::string& id) {
    for (const auto& r : records) {
        if (r.query.id == id) return r;
    }
    throw ConfigError("no record with id '" + id + "'");
}

std::vector<Document> load_documents(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read documents file " + path);
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto row = nlohmann::json::parse(line);
            docs.push_back({row.at("id").get<std::string>(), row.at("text").get<std::string>(),
                            Origin::Dataset, std::nullopt});
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return docs;
}

// ---------------------------------------------------------------------------

struct ScoreArgs {
    std::optional<std::string> dataset, id, query, docs, corpus, out;
    std::optional<std::size_t> k;
    bool json = false;
};

int cmd_score(const ScoreArgs& a, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Query query;
    RetrievedSet retrieved;
    std::optional<DatasetRecord> record;
    if (a.dataset) {
        if (!a.id) throw ConfigError("--dataset needs --id");
        auto records = load_dataset(*a.dataset, err);
        record = find_record(records, *a.id);
        query = record->query;
        query.incorrect_target.reset();
        retrieved = record->retrieved();
    } else if (a.query) {
        query.id = a.id.value_or("query");
        query.text = *a.query;
    } else {
        throw ConfigError("score needs --dataset/--id or --query");
    }

    auto providers = make_providers(cfg);
    if (a.corpus) {
        const auto corpus = Corpus::load(*a.corpus);
        retrieved = retrieve(corpus, query, a.k.value_or(cfg.k), *providers.embedder);
    } else if (a.docs) {
        retrieved = {query.id, load_documents(*a.docs)};
    } else if (!record) {
        throw ConfigError("--query needs --docs or --corpus");
    }
    if (retrieved.k() < 2) throw ConfigError("score needs at least 2 documents (k >= 2)");

    EntropyEngine engine(*providers.gateway, *providers.embedder, cfg.entropy_config());
    InfluenceConfig icfg;
    icfg.compute_unconditioned = cfg.compute_unconditioned;
    icfg.include_leave_one_out = cfg.budget_2k1;
    const auto report = influence_scores(query, retrieved, engine, icfg, *cfg.seed);

    const nlohmann::json doc = {
        {"report", report},
        {"meta",
         {{"k", retrieved.k()},
          {"include_leave_one_out", cfg.budget_2k1},
          {"budget", query_budget(retrieved.k(), cfg.budget_2k1)},
          {"contexts_consumed", report.contexts_consumed},
          {"gateway_distinct_contexts", providers.gateway->distinct_contexts()},
          {"estimator", to_string(cfg.estimator)},
          {"n_samples", cfg.n_samples},
          {"seed", *cfg.seed},
          {"llm", providers.gateway->provider().name()},
          {"embedder", providers.embedder->id()}}}};
    if (a.out) write_text_file(*a.out, doc.dump(2) + "\n");
    if (a.json) {
        out << doc.dump(2) << "\n";
    } else {
        out << format_report_table(report);
    }
    return kSuccess;
}

struct EntropyArgs {
    std::optional<std::string> prompt, dataset, id;
    std::string context = "all";
    bool json = false;
};

int cmd_entropy(const EntropyArgs& a, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    auto providers = make_providers(cfg);
    EntropyEngine engine(*providers.gateway, *providers.embedder, cfg.entropy_config());

    ContextEvaluation evaluation;
    if (a.prompt) {
        DecodingParams params = engine.config().decoding;
        params.seed = cfg.seed;
        evaluation = engine.score(providers.gateway->generate(*a.prompt, params));
    } else if (a.dataset && a.id) {
        auto records = load_dataset(*a.dataset, err);
        const auto& rec = find_record(records, *a.id);
        ContextSpec context;
        try {
            context = ContextSpec::parse(a.context);
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
        Query query = rec.query;
        query.incorrect_target.reset();
        evaluation = *engine.evaluate(query, rec.provided_documents, context, *cfg.seed);
    } else {
        throw ConfigError("entropy needs --prompt or --dataset with --id");
    }

    if (a.json) {
        nlohmann::json doc = {{"entropy", evaluation.entropy}, {"samples", evaluation.responses.texts()}};
        if (evaluation.clusters) doc["cluster_labels"] = evaluation.clusters->labels;
        out << doc.dump(2) << "\n";
    } else {
        char line[160];
        std::snprintf(line, sizeof line, "H_S = %.4f bits (%s, N=%zu, context=%s)\n", evaluation.entropy.value,
                      to_string(evaluation.entropy.estimator), evaluation.entropy.n_samples,
                      evaluation.entropy.context.label().c_str());
        out << line;
    }
    return kSuccess;
}

void print_stats(double p_hat, double p0, std::size_t n, std::ostream& out) {
    const double z = z_score(p_hat, p0, n);
    const double p = p_value_one_sided(z);
    char line[200];
    std::snprintf(line, sizeof line, "z=%.2f p_value=%.3g%s wald_half_width=%.4f\n", z, p,
                  p < 1e-4 ? " (< 0.0001)" : "", wald_half_width(p_hat, n));
    out << line;
}

struct StatsArgs {
    double p_hat = 0.0;
    double p0 = 0.0;
    std::size_t n = 0;
};

struct PoisonArgs {
    std::optional<std::string> dataset;
    std::size_t count = 100;
    std::vector<double> stats;
    bool no_baseline = false;
    std::size_t max_passes = 10;
};

int cmd_poison_eval(const PoisonArgs& a, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (!a.stats.empty()) {
        if (a.stats.size() != 3 || a.stats[2] < 1) throw ConfigError("--stats takes P_HAT P0 N");
        print_stats(a.stats[0], a.stats[1], static_cast<std::size_t>(a.stats[2]), out);
        return kSuccess;
    }
    if (!a.dataset) throw ConfigError("poison-eval needs --dataset");
    const auto records = load_dataset(*a.dataset, err);

    auto providers = make_providers(cfg);
    EntropyEngine engine(*providers.gateway, *providers.embedder, cfg.entropy_config());
    AttackConfig acfg;
    acfg.influence.compute_unconditioned = cfg.compute_unconditioned;
    acfg.influence.include_leave_one_out = cfg.budget_2k1;
    acfg.run_baseline = !a.no_baseline;
    acfg.max_passes = a.max_passes;
    acfg.workers = cfg.workers;
    const auto result = run_poison_eval(records, a.count, engine, acfg, *cfg.seed);

    const std::filesystem::path dir = cfg.output_dir;
    write_text_file(dir / "poison_episodes.jsonl", to_jsonl(result.episodes));
    write_text_file(dir / "poison_summary.json", poison_summary_json(result).dump(2) + "\n");
    out << format_detection_table(result.stats);
    out << "wrote " << (dir / "poison_summary.json").string() << " and "
        << (dir / "poison_episodes.jsonl").string() << "\n";
    if (result.partial) {
        err << "records exhausted after " << result.attempts << " attempts with " << result.stats.n
            << " of " << a.count << " incorrect responses\n";
        return kPartial;
    }
    return kSuccess;
}

struct AblationArgs {
    std::optional<std::string> dataset;
    std::string judge = "embedding";
    std::size_t top_m = 2;
};

int cmd_ablation_eval(const AblationArgs& a, const RunConfig& cfg, const CommonFlags& flags,
                      std::ostream& out, std::ostream& err) {
    if (!a.dataset) throw ConfigError("ablation-eval needs --dataset");
    JudgeKind kind;
    try {
        kind = judge_kind_from_string(a.judge);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (kind == JudgeKind::Llm) {
        const bool scripted = cfg.llm.provider == "mock" && (flags.llm_script || !cfg.llm.script.empty());
        const bool remote = cfg.llm.provider == "remote" && !cfg.llm.endpoint.empty();
        if (!scripted && !remote) {
            throw ConfigError(
                "--judge llm needs an LLM endpoint (llm.endpoint or INFLUENCE_LLM_ENDPOINT) or a mock "
                "script (--llm-script)");
        }
    }
    const auto records = load_dataset(*a.dataset, err);

    auto providers = make_providers(cfg);
    EntropyEngine engine(*providers.gateway, *providers.embedder, cfg.entropy_config());
    AblationConfig acfg;
    acfg.influence.compute_unconditioned = cfg.compute_unconditioned;
    acfg.influence.include_leave_one_out = cfg.budget_2k1;
    acfg.top_m = a.top_m;
    acfg.workers = cfg.workers;

    std::unique_ptr<Judge> judge;
    if (kind == JudgeKind::Llm) {
        DecodingParams d = engine.config().decoding;
        d.temperature = 0.0;
        judge = std::make_unique<LlmJudge>(*providers.gateway, d);
    } else {
        judge = std::make_unique<EmbeddingJudge>(*providers.embedder);
    }
    const auto result = run_ablation_eval(records, engine, *judge, acfg, *cfg.seed);

    const std::filesystem::path dir = cfg.output_dir;
    write_text_file(dir / "ablation_episodes.jsonl", to_jsonl(result.episodes));
    write_text_file(dir / "ablation_summary.json", ablation_summary_json(result).dump(2) + "\n");
    char line[200];
    std::snprintf(line, sizeof line, "episodes: %zu\nRate Response B is Chosen  %.1f%%\nRate Response C is Chosen  %.1f%%\nIndeterminate              %.1f%%\n",
                  result.summary.n, 100.0 * result.summary.rate_b, 100.0 * result.summary.rate_c,
                  100.0 * result.summary.rate_indeterminate);
    out << line;
    return kSuccess;
}

struct IngestArgs {
    std::string dataset;
    std::string format = "jsonl";
    std::size_t expected_docs = 5;
    std::optional<std::string> corpus_out;
};

int cmd_ingest(const IngestArgs& a, const CommonFlags& flags, const EnvLookup& env, std::ostream& out,
               std::ostream& err) {
    IngestOptions opts;
    opts.format = a.format;
    opts.expected_documents = a.expected_docs;
    const auto result = ingest(a.dataset, opts);
    for (const auto& d : result.diagnostics) {
        err << a.dataset << ":" << d.line << ": skipped: " << d.message << "\n";
    }
    std::size_t docs = 0;
    for (const auto& r : result.records) docs += r.provided_documents.size();
    out << result.records.size() << " records, " << docs << " documents, " << result.diagnostics.size()
        << " skipped rows\n";

    if (a.corpus_out) {
        const auto cfg = resolve(flags, env);
        auto providers = make_providers(cfg);
        std::vector<Document> unique;
        std::set<std::string> seen;
        for (const auto& r : result.records) {
            for (const auto& d : r.provided_documents) {
                if (seen.insert(d.id).second) unique.push_back(d);
            }
        }
        const Corpus corpus(std::filesystem::path(a.dataset).stem().string(), std::move(unique),
                            *providers.embedder);
        corpus.save(*a.corpus_out);
        out << "corpus of " << corpus.size() << " documents written to " << *a.corpus_out << "\n";
    }
    return kSuccess;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"Per-document influence scores for retrieval-augmented generation", "influence"};
    app.require_subcommand(1);

    CommonFlags flags;

    ScoreArgs score;
    auto* score_cmd = app.add_subcommand("score", "Influence score of every retrieved document");
    add_common(score_cmd, flags);
    score_cmd->add_option("--dataset", score.dataset, "Dataset JSONL");
    score_cmd->add_option("--id", score.id, "Record id within the dataset");
    score_cmd->add_option("--query", score.query, "Free-text query instead of a record");
    score_cmd->add_option("--docs", score.docs, "Documents JSONL ({\"id\",\"text\"} per line)");
    score_cmd->add_option("--corpus", score.corpus, "Corpus JSONL to retrieve from");
    score_cmd->add_option("-k", score.k, "Documents to retrieve from --corpus");
    score_cmd->add_option("--out", score.out, "Write the JSON report here");
    score_cmd->add_flag("--json", score.json, "Print JSON instead of a table");

    EntropyArgs entropy;
    auto* entropy_cmd = app.add_subcommand("entropy", "Semantic entropy of one context");
    add_common(entropy_cmd, flags);
    entropy_cmd->add_option("--prompt", entropy.prompt, "Raw prompt to sample");
    entropy_cmd->add_option("--dataset", entropy.dataset, "Dataset JSONL");
    entropy_cmd->add_option("--id", entropy.id, "Record id");
    entropy_cmd->add_option("--context", entropy.context, "none | all | doc:I | subset:I,J,...");
    entropy_cmd->add_flag("--json", entropy.json, "Print JSON");

    PoisonArgs poison;
    auto* poison_cmd = app.add_subcommand("poison-eval", "Poison-attack detection experiment");
    add_common(poison_cmd, flags);
    poison_cmd->add_option("--dataset", poison.dataset, "Dataset JSONL");
    poison_cmd->add_option("--count", poison.count, "Incorrect responses to collect");
    poison_cmd->add_option("--stats", poison.stats, "Only compute z and p for P_HAT P0 N")->expected(3);
    poison_cmd->add_flag("--no-baseline", poison.no_baseline, "Skip the prompt-attribution baseline");
    poison_cmd->add_option("--max-passes", poison.max_passes, "Passes over the records before giving up");

    AblationArgs ablation;
    auto* ablation_cmd = app.add_subcommand("ablation-eval", "Top-2 ablation experiment");
    add_common(ablation_cmd, flags);
    ablation_cmd->add_option("--dataset", ablation.dataset, "Dataset JSONL");
    ablation_cmd->add_option("--judge", ablation.judge, "embedding or llm");
    ablation_cmd->add_option("--top-m", ablation.top_m, "Documents in Response B's context");

    IngestArgs ingest_args;
    auto* ingest_cmd = app.add_subcommand("ingest", "Validate a dataset and optionally build a corpus");
    add_common(ingest_cmd, flags);
    ingest_cmd->add_option("--dataset", ingest_args.dataset, "Dataset JSONL")->required();
    ingest_cmd->add_option("--format", ingest_args.format, "Input format (jsonl)");
    ingest_cmd->add_option("--expected-docs", ingest_args.expected_docs, "Documents per record (0 = any)");
    ingest_cmd->add_option("--corpus-out", ingest_args.corpus_out, "Write an embedded corpus JSONL here");

    StatsArgs stats;
    auto* stats_cmd = app.add_subcommand("stats", "One-sample proportion z test");
    stats_cmd->add_option("p_hat", stats.p_hat, "Observed success rate")->required();
    stats_cmd->add_option("p0", stats.p0, "Null success rate")->required();
    stats_cmd->add_option("n", stats.n, "Sample count")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (*stats_cmd) {
            print_stats(stats.p_hat, stats.p0, stats.n, out);
            return kSuccess;
        }
        if (*ingest_cmd) return cmd_ingest(ingest_args, flags, env, out, err);
        if (*poison_cmd && !poison.stats.empty()) return cmd_poison_eval(poison, RunConfig{}, out, err);

        const RunConfig cfg = resolve(flags, env);
        if (*score_cmd) return cmd_score(score, cfg, out, err);
        if (*entropy_cmd) return cmd_entropy(entropy, cfg, out, err);
        if (*poison_cmd) return cmd_poison_eval(poison, cfg, out, err);
        if (*ablation_cmd) return cmd_ablation_eval(ablation, cfg, flags, out, err);
    } catch (const PartialInfluenceError& e) {
        err << "provider failure: " << e.what() << " (" << e.completed() << " contexts finished)\n";
        return kProviderFailure;
    } catch (const GatewayError& e) {
        err << "provider failure: " << e.what() << "\n";
        return kProviderFailure;
    } catch (const ProtocolError& e) {
        err << "provider protocol error: " << e.what() << "\n";
        if (!e.raw_body().empty()) err << "raw reply: " << e.raw_body() << "\n";
        return kProviderFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace influence::cli
