#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lclfqa/chunking.hpp"
#include "lclfqa/error.hpp"
#include "lclfqa/evaluator.hpp"
#include "lclfqa/layout.hpp"
#include "lclfqa/pipeline.hpp"
#include "lclfqa/provider.hpp"
#include "lclfqa/retrieval.hpp"
#include "lclfqa/rewriter.hpp"
#include "lclfqa/synthgen.hpp"
#include "lclfqa/templates.hpp"
#include "lclfqa/text.hpp"

namespace lclfqa::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Contents of the --config file. Paths inside it are relative to the file.
struct AppConfig {
    json provider = {{"kind", "http"}};
    PipelineConfig pipeline;
    std::optional<fs::path> templates_dir;
    json ingest = json::object();
    json eval = json::object();
    json synth = json::object();
};

AppConfig load_config(const std::string& path) {
    AppConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
    const auto base = fs::path(path).parent_path();
    if (j.contains("provider")) cfg.provider = j.at("provider");
    if (j.contains("pipeline")) cfg.pipeline = pipeline_config_from_json(j.at("pipeline"));
    if (j.contains("templates_dir")) cfg.templates_dir = base / j.at("templates_dir").get<std::string>();
    for (auto [key, slot] : {std::pair{"ingest", &cfg.ingest}, {"eval", &cfg.eval}, {"synth", &cfg.synth}}) {
        if (j.contains(key)) *slot = j.at(key);
    }
    return cfg;
}

TemplateStore load_templates(const AppConfig& cfg, const std::string& flag) {
    if (!flag.empty()) return TemplateStore::with_overrides(flag);
    if (cfg.templates_dir) return TemplateStore::with_overrides(*cfg.templates_dir);
    return {};
}

void require_file(const std::string& path, std::string_view what) {
    if (!fs::is_regular_file(path)) throw StoreError(std::string(what) + " not found: " + path);
}

template <typename T>
T setting(const json& section, const char* key, T fallback) {
    try {
        return section.value(key, fallback);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw StoreError("cannot write " + path.string());
    out << content;
    if (!out) throw StoreError("failed writing " + path.string());
}

void set_log_level(const std::string& level) {
    static const std::map<std::string, spdlog::level::level_enum> levels{
        {"error", spdlog::level::err}, {"warn", spdlog::level::warn}, {"info", spdlog::level::info},
        {"debug", spdlog::level::debug}};
    static const bool installed = [] {
        auto logger = spdlog::stderr_color_mt("lclfqa");
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)installed;
    spdlog::set_level(levels.at(level));
}

struct Common {
    std::string config;
    std::string templates;
    std::string log_level = "warn";
};

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string layout;
    std::string store;
    std::optional<std::size_t> parent_size;
    std::optional<std::size_t> child_size;
    std::string chunking;
    std::string corpus_id;
};

int cmd_ingest(const Common& common, const IngestArgs& a, std::ostream& out, std::ostream& err) {
    const auto cfg = load_config(common.config);
    require_file(a.layout, "layout file");

    ChunkingOptions chunking;
    chunking.parent_size = a.parent_size.value_or(setting(cfg.ingest, "parent_size", chunking.parent_size));
    chunking.child_size = a.child_size.value_or(setting(cfg.ingest, "child_size", chunking.child_size));
    auto mode_name = a.chunking;
    if (mode_name.empty()) {
        mode_name = setting<std::string>(cfg.ingest, "chunking",
                                         cfg.pipeline.toggles.use_smart_chunking ? "layout" : "naive");
    }
    const auto mode = parse_chunking_mode(mode_name);
    if (!mode) throw ConfigError("unknown chunking mode '" + mode_name + "'");
    chunking.mode = *mode;

    const auto elements = parse_layout(fs::path(a.layout));
    auto corpus = chunk_corpus(elements, chunking);
    for (const auto& w : corpus.warnings) err << "warning: " << w << '\n';
    if (corpus.children.empty()) throw PreconditionError("layout file " + a.layout + " produced no chunks");

    auto providers = make_providers(cfg.provider);
    BuildOptions build;
    build.corpus_id = a.corpus_id.empty() ? setting<std::string>(cfg.ingest, "corpus_id",
                                                                 fs::path(a.layout).stem().string())
                                          : a.corpus_id;
    build.chunking = chunking;
    build.bm25.k1 = setting(cfg.ingest, "k1", build.bm25.k1);
    build.bm25.b = setting(cfg.ingest, "b", build.bm25.b);
    build.embed_batch_size = setting(cfg.ingest, "embed_batch_size", build.embed_batch_size);
    build.max_in_flight = setting(cfg.ingest, "max_in_flight", build.max_in_flight);

    const auto parents = corpus.parents.size();
    const auto footnotes = static_cast<std::size_t>(std::count_if(
        corpus.children.begin(), corpus.children.end(),
        [](const ChildChunk& c) { return c.kind == ChildKind::FootnoteBased; }));
    const auto bundle =
        build_indexes(std::move(corpus.parents), std::move(corpus.children), *providers.embedder, build);
    const auto manifest = persist_store(bundle, a.store);
    out << "ingested " << elements.size() << " elements into " << a.store << ": " << parents << " parents, "
        << manifest.child_count << " children (" << footnotes << " footnote), " << manifest.term_count
        << " terms, dim " << manifest.dimension << " [" << to_string(chunking.mode) << "]\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct QueryArgs {
    std::string store;
    std::string question;
    std::optional<std::size_t> rewrites;
    std::optional<std::size_t> k;
    bool no_rewriter = false;
    bool no_extractor = false;
    bool no_filter = false;
    bool basic_reader = false;
    bool json_output = false;
};

PipelineConfig apply_flags(PipelineConfig c, const QueryArgs& a) {
    if (a.rewrites) {
        c.n_rewrites = *a.rewrites;
        if (c.n_rewrites == 0) c.toggles.use_rewriter = false;
    }
    if (a.k) c.k = *a.k;
    if (a.no_rewriter) c.toggles.use_rewriter = false;
    if (a.no_extractor) c.toggles.use_extractor = false;
    if (a.no_filter) c.toggles.use_filter = false;
    if (a.basic_reader) c.toggles.use_domain_reader = false;
    validate(c);
    return c;
}

int cmd_query(const Common& common, const QueryArgs& a, std::ostream& out, std::ostream& err) {
    const auto cfg = load_config(common.config);
    const auto bundle = load_store(a.store);
    Pipeline pipeline(apply_flags(cfg.pipeline, a), bundle, make_providers(cfg.provider),
                      load_templates(cfg, common.templates));
    const auto record = pipeline.answer(a.question);
    if (a.json_output) {
        out << to_json(record).dump(2) << '\n';
    } else if (record.ok()) {
        out << record.answer << '\n';
    }
    if (!record.ok()) {
        err << "error: " << record.error->stage << " stage failed: " << record.error->message << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string store;
    std::string qa;
    std::string out;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> workers;
    std::string judge_source;
    QueryArgs flags;
};

int cmd_eval(const Common& common, const EvalArgs& a, std::ostream& out, std::ostream& err) {
    const auto cfg = load_config(common.config);
    require_file(a.qa, "QA file");
    const auto items = read_qa_file(a.qa);
    if (items.empty()) throw PreconditionError("QA file " + a.qa + " holds no items");
    const auto bundle = load_store(a.store);
    auto providers = make_providers(cfg.provider);
    const auto templates = load_templates(cfg, common.templates);
    Pipeline pipeline(apply_flags(cfg.pipeline, a.flags), bundle, providers, templates);

    EvaluateOptions options;
    options.runs = a.runs.value_or(setting<std::size_t>(cfg.eval, "runs", 1));
    options.max_workers = a.workers.value_or(setting<std::size_t>(cfg.eval, "max_workers", 1));
    const auto source = a.judge_source.empty() ? setting<std::string>(cfg.eval, "judge_source", "gold")
                                               : a.judge_source;
    if (source == "document") {
        options.source = JudgeSource::Document;
        options.document_text = [&bundle](const QaItem& item) {
            std::vector<std::string> texts;
            for (const auto& p : bundle.parents()) {
                if (p.doc_id == item.doc_id) texts.push_back(p.text);
            }
            if (texts.empty()) throw PreconditionError("document " + item.doc_id + " is not in the store");
            return text::join(texts, "\n");
        };
    } else if (source != "gold") {
        throw ConfigError("judge_source must be 'gold' or 'document'");
    }

    const auto report = evaluate_dataset(
        items,
        [&pipeline](const QaItem& item) {
            auto record = pipeline.answer(item.question);
            if (!record.ok()) throw PipelineError(record.error->stage, record.error->message);
            return record.answer;
        },
        *providers.chat, templates, options);
    write_text(a.out, to_json(report).dump(2) + "\n");

    const auto& c = report.coverage;
    out << "records " << report.records.size() << ": complete " << c.counts.complete << ", partial "
        << c.counts.partial << ", incorrect " << c.counts.incorrect << ", uncategorized " << c.uncategorized
        << ", failed " << report.failures.size() << '\n';
    if (c.denominator > 0) {
        out << "coverage score " << json(c.score).dump();
        if (c.mean_recall) out << ", mean recall " << json(*c.mean_recall).dump();
        out << '\n';
    } else {
        err << "error: no record could be scored\n";
        return kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string layout;
    std::string out;
    std::optional<std::size_t> budget;
    std::optional<std::size_t> k;
    std::optional<std::size_t> n;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> styles;
    std::vector<std::string> docs;
};

int cmd_synth(const Common& common, const SynthArgs& a, std::ostream& out, std::ostream& err) {
    const auto cfg = load_config(common.config);
    require_file(a.layout, "layout file");
    const auto templates = load_templates(cfg, common.templates);
    auto providers = make_providers(cfg.provider);

    SynthOptions options;
    options.budget = a.budget.value_or(setting(cfg.synth, "budget", options.budget));
    options.k = a.k.value_or(setting(cfg.synth, "k", options.k));
    options.n = a.n.value_or(setting(cfg.synth, "n", options.n));
    options.seed = a.seed.value_or(setting(cfg.synth, "seed", options.seed));
    options.pairs_per_iteration = setting(cfg.synth, "pairs_per_iteration", options.pairs_per_iteration);
    options.max_workers = setting(cfg.synth, "max_workers", options.max_workers);
    auto style_names = a.styles.empty() ? setting(cfg.synth, "styles", std::vector<std::string>{}) : a.styles;
    if (!style_names.empty()) {
        options.styles.clear();
        for (const auto& s : style_names) {
            const auto style = parse_question_style(s);
            if (!style) throw ConfigError("unknown question style '" + s + "'");
            options.styles.push_back(*style);
        }
    }

    const auto pages = pages_from_layout(parse_layout(fs::path(a.layout)));
    std::vector<std::string> docs = a.docs;
    if (docs.empty()) {
        std::set<std::string> seen;
        for (const auto& p : pages) {
            if (seen.insert(p.doc_id).second) docs.push_back(p.doc_id);
        }
    }

    std::string lines;
    std::size_t total = 0;
    bool aborted = false;
    for (const auto& doc : docs) {
        const auto result = synthesize(doc, pages, *providers.chat, *providers.embedder, templates, options);
        for (const auto& w : result.warnings) err << "warning: " << doc << ": " << w << '\n';
        for (const auto& p : result.pairs) lines += to_json(p).dump() + "\n";
        total += result.pairs.size();
        out << doc << ": " << result.pairs.size() << " pairs from " << result.attempts << " attempts ("
            << result.failures << " failed)\n";
        if (result.aborted) {
            aborted = true;
            break;
        }
    }
    write_text(a.out, lines);
    out << "wrote " << total << " pairs to " << a.out << '\n';
    if (aborted) {
        err << "error: synthesis aborted after too many failures; partial results kept\n";
        return kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct FilterArgs {
    std::string pairs;
    std::string store;
    std::string out;
    std::string report;
    std::optional<std::size_t> workers;
};

json ranks_json(const DocumentRanks& r) {
    auto one = [](std::size_t v) { return v == kUnranked ? json(nullptr) : json(v); };
    return {{"sparse", one(r.sparse)}, {"dense", one(r.dense)}};
}

int cmd_filter(const Common& common, const FilterArgs& a, std::ostream& out, std::ostream& err) {
    const auto cfg = load_config(common.config);
    require_file(a.pairs, "pairs file");
    const auto pairs = read_pairs(a.pairs);
    const auto bundle = load_store(a.store);
    auto providers = make_providers(cfg.provider);
    const auto result = filter_rewrite_pairs(pairs, bundle, *providers.embedder, a.workers.value_or(1));

    if (result.retained.empty()) {
        write_text(a.out, "");
    } else {
        export_training_pairs(result.retained, a.out);
    }
    if (!a.report.empty()) {
        json decisions = json::array();
        for (const auto& d : result.decisions) {
            decisions.push_back({{"query", d.pair.query},
                                 {"rewrite", d.pair.rewrite},
                                 {"source_doc_id", d.pair.source_doc_id},
                                 {"query_ranks", ranks_json(d.query_ranks)},
                                 {"rewrite_ranks", ranks_json(d.rewrite_ranks)},
                                 {"retained", d.retained}});
        }
        write_text(a.report, json{{"decisions", decisions}, {"errors", result.errors}}.dump(2) + "\n");
    }
    for (const auto& e : result.errors) err << "warning: " << e << '\n';
    out << "retained " << result.retained.size() << " of " << pairs.size() << " pairs (" << result.errors.size()
        << " skipped)\n";
    return kExitOk;
}

void add_pipeline_flags(CLI::App* cmd, QueryArgs& q) {
    cmd->add_option("--rewrites", q.rewrites, "Number of query rewrites (0, 1 or 3)")
        ->check(CLI::IsMember({0, 1, 3}));
    cmd->add_option("--k", q.k, "Children retrieved per question")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-rewriter", q.no_rewriter, "Use the original question only");
    cmd->add_flag("--no-extractor", q.no_extractor, "Skip the long-context extractor");
    cmd->add_flag("--no-filter", q.no_filter, "Keep every retrieved child");
    cmd->add_flag("--basic-reader", q.basic_reader, "Use the basic reader prompt");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Layout-aware long-context question answering over legal documents", "lclfqa"};
    app.require_subcommand(1);
    app.fallthrough();

    Common common;
    app.add_option("--config", common.config, "JSON config file");
    app.add_option("--templates", common.templates, "Directory of prompt template overrides");
    app.add_option("--log-level", common.log_level, "error, warn, info or debug")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Chunk a layout file and build a store");
    c_ingest->add_option("--layout", ingest.layout, "Layout JSON-lines file")->required();
    c_ingest->add_option("--store", ingest.store, "Store directory to write")->required();
    c_ingest->add_option("--parent-size", ingest.parent_size, "Parent chunk size in words")
        ->check(CLI::PositiveNumber);
    c_ingest->add_option("--child-size", ingest.child_size, "Child chunk size in words")->check(CLI::PositiveNumber);
    c_ingest->add_option("--chunking", ingest.chunking, "layout or naive")->check(CLI::IsMember({"layout", "naive"}));
    c_ingest->add_option("--corpus-id", ingest.corpus_id, "Corpus name recorded in the manifest");

    QueryArgs query;
    auto* c_query = app.add_subcommand("query", "Answer one question");
    c_query->add_option("--store", query.store, "Store directory")->required();
    c_query->add_option("question", query.question, "Question text")->required();
    c_query->add_flag("--json", query.json_output, "Print the full answer record as JSON");
    add_pipeline_flags(c_query, query);

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Answer and score a QA dataset");
    c_eval->add_option("--store", eval.store, "Store directory")->required();
    c_eval->add_option("--qa", eval.qa, "QA JSON-lines file")->required();
    c_eval->add_option("--out", eval.out, "Report JSON file")->required();
    c_eval->add_option("--runs", eval.runs, "Runs per question")->check(CLI::PositiveNumber);
    c_eval->add_option("--workers", eval.workers, "Questions evaluated in parallel")->check(CLI::PositiveNumber);
    c_eval->add_option("--judge-source", eval.judge_source, "gold or document")
        ->check(CLI::IsMember({"gold", "document"}));
    add_pipeline_flags(c_eval, eval.flags);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate synthetic QA pairs from a layout file");
    c_synth->add_option("--layout", synth.layout, "Layout JSON-lines file")->required();
    c_synth->add_option("--out", synth.out, "Output JSON-lines file")->required();
    c_synth->add_option("--budget", synth.budget, "Pairs per document")->check(CLI::PositiveNumber);
    c_synth->add_option("--k", synth.k, "Cluster count")->check(CLI::PositiveNumber);
    c_synth->add_option("--n", synth.n, "Pages per generation call")->check(CLI::PositiveNumber);
    c_synth->add_option("--seed", synth.seed, "Random seed");
    c_synth->add_option("--styles", synth.styles, "Question styles, in round-robin order")->delimiter(',');
    c_synth->add_option("--doc", synth.docs, "Restrict to these documents")->delimiter(',');

    FilterArgs filter;
    auto* c_filter = app.add_subcommand("filter-rewrites", "Keep rewrite pairs that improve retrieval");
    c_filter->add_option("--pairs", filter.pairs, "Pairs JSON-lines file")->required();
    c_filter->add_option("--store", filter.store, "Store directory")->required();
    c_filter->add_option("--out", filter.out, "Retained pairs JSON-lines file")->required();
    c_filter->add_option("--report", filter.report, "Per-pair decisions JSON file");
    c_filter->add_option("--workers", filter.workers, "Queries ranked in parallel")->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        set_log_level(common.log_level);
        if (c_ingest->parsed()) return cmd_ingest(common, ingest, out, err);
        if (c_query->parsed()) return cmd_query(common, query, out, err);
        if (c_eval->parsed()) return cmd_eval(common, eval, out, err);
        if (c_synth->parsed()) return cmd_synth(common, synth, out, err);
        if (c_filter->parsed()) return cmd_filter(common, filter, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace lclfqa::cli
