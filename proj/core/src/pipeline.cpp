#include "lclfqa/pipeline.hpp"

#include <chrono>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lclfqa/error.hpp"
#include "lclfqa/tags.hpp"
#include "lclfqa/text.hpp"

namespace lclfqa {

using nlohmann::json;

void validate(const PipelineConfig& config) {
    if (config.k < 1) throw ConfigError("pipeline k must be >= 1");
    if (config.n_rewrites != 0 && config.n_rewrites != 1 && config.n_rewrites != 3) {
        throw ConfigError("n_rewrites must be 0, 1 or 3, got " + std::to_string(config.n_rewrites));
    }
    if (!(config.lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (config.depth_multiplier < 1) throw ConfigError("depth_multiplier must be >= 1");
}

PipelineConfig pipeline_config_from_json(const json& j) {
    PipelineConfig c;
    if (!j.is_object()) throw ConfigError("pipeline settings must be a JSON object");
    try {
        c.k = j.value("k", c.k);
        c.n_rewrites = j.value("n_rewrites", c.n_rewrites);
        c.lambda = j.value("lambda", c.lambda);
        c.depth_multiplier = j.value("depth_multiplier", c.depth_multiplier);
        c.domain_phrases = j.value("domain_phrases", c.domain_phrases);
        c.rewrite_examples = j.value("rewrite_examples", c.rewrite_examples);
        if (j.contains("reader_examples")) {
            for (const auto& e : j.at("reader_examples")) {
                c.reader_examples.push_back({e.at("question").get<std::string>(), e.at("answer").get<std::string>()});
            }
        }
        if (j.contains("toggles")) {
            const auto& t = j.at("toggles");
            auto& o = c.toggles;
            o.use_rewriter = t.value("use_rewriter", o.use_rewriter);
            o.use_smart_chunking = t.value("use_smart_chunking", o.use_smart_chunking);
            o.use_domain_reader = t.value("use_domain_reader", o.use_domain_reader);
            o.use_extractor = t.value("use_extractor", o.use_extractor);
            o.use_filter = t.value("use_filter", o.use_filter);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid pipeline settings: ") + e.what());
    }
    validate(c);
    return c;
}

std::string format_examples(const std::vector<QaExample>& examples) {
    std::string out;
    for (const auto& e : examples) {
        if (!out.empty()) out += "\n\n";
        out += "Question: " + e.question + "\nAnswer: " + e.answer;
    }
    return out;
}

json to_json(const AnswerRecord& r, bool include_timing) {
    json j{{"question", r.question},
           {"rewrites", r.rewrites},
           {"answer", r.answer},
           {"refused", r.refused},
           {"provenance", {{"child_ids", r.child_ids}, {"parent_ids", r.parent_ids}}},
           {"ranking_sources", r.ranking_sources},
           {"extracted", r.extracted},
           {"thought", r.thought},
           {"verdicts", r.verdicts},
           {"kept_child_ids", r.kept_child_ids},
           {"warnings", r.warnings}};
    if (r.error) j["error"] = {{"stage", r.error->stage}, {"message", r.error->message}};
    if (include_timing) j["timings_ms"] = r.timings_ms;
    return j;
}

namespace {

std::string translated_question(const QuerySet& queries) {
    return queries.rewrites.empty() ? std::string() : queries.rewrites.front();
}

void note_degraded(const TaggedText& t, std::string_view stage, std::string_view tag,
                   std::vector<std::string>& warnings) {
    if (!t.degraded()) return;
    warnings.push_back(std::string(stage) + ": " +
                       (t.match == TagMatch::OpenOnly ? "missing </" + std::string(tag) + ">, took text after opening tag"
                                                      : "no <" + std::string(tag) + "> tag, took whole response"));
    spdlog::warn("{}", warnings.back());
}

std::string call(ChatModel& chat, const std::string& prompt, std::string_view stage) {
    try {
        return chat.complete(prompt);
    } catch (const ProviderError& e) {
        throw PipelineError(std::string(stage), e.what());
    }
}

/// True/false read from the first verdict word in `unit`, if any.
std::optional<bool> verdict_of(std::string_view unit) {
    const auto lower = text::to_lower(unit);
    const auto t = lower.find("true");
    const auto f = lower.find("false");
    if (t == std::string::npos && f == std::string::npos) return std::nullopt;
    return t < f;
}

}  // namespace

ExtractorOutput extract_global(const QuerySet& queries, const std::vector<ParentChunk>& parents, ChatModel& chat,
                               const TemplateStore& templates) {
    ExtractorOutput out;
    if (parents.empty()) return out;
    std::vector<std::string> texts;
    texts.reserve(parents.size());
    for (const auto& p : parents) texts.push_back(p.text);
    const auto prompt = templates.render(templates::kExtractor, {{"context", text::join(texts, "\n\n")},
                                                                 {"question", queries.original},
                                                                 {"translated_question", translated_question(queries)}});
    const auto tagged = extract_tag(call(chat, prompt, "extractor"), "information");
    note_degraded(tagged, "extractor", "information", out.warnings);
    out.text = tagged.text;
    return out;
}

std::vector<bool> parse_verdicts(std::string_view response, std::size_t count, std::vector<std::string>& warnings) {
    std::vector<std::string_view> lines;
    for (std::size_t pos = 0; pos < response.size();) {
        auto nl = response.find('\n', pos);
        if (nl == std::string_view::npos) nl = response.size();
        const auto line = text::trim(response.substr(pos, nl - pos));
        if (!line.empty()) lines.push_back(line);
        pos = nl + 1;
    }
    const auto units = lines.size() >= 2 ? lines : text::split_words(response);

    std::vector<bool> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count && i < units.size(); ++i) {
        const auto v = verdict_of(units[i]);
        if (!v) warnings.push_back("verdict " + std::to_string(i + 1) + " unreadable ('" + std::string(units[i]) +
                                   "'), kept");
        out.push_back(v.value_or(true));
    }
    if (units.size() < count) {
        warnings.push_back("expected " + std::to_string(count) + " verdicts, got " + std::to_string(units.size()) +
                           "; missing ones kept");
        out.resize(count, true);
    } else if (units.size() > count) {
        warnings.push_back("expected " + std::to_string(count) + " verdicts, got " + std::to_string(units.size()) +
                           "; extra ones ignored");
    }
    return out;
}

FilterOutput cot_filter(const QuerySet& queries, const std::vector<ChildChunk>& children, ChatModel& chat,
                        const TemplateStore& templates) {
    if (children.empty()) throw PreconditionError("cot_filter requires at least one child chunk");
    FilterOutput out;

    std::string wrapped;
    std::vector<std::string> bodies;
    for (const auto& c : children) {
        if (!wrapped.empty()) wrapped += "\n";
        wrapped += wrap_tag("reference", c.text);
        bodies.push_back(c.text);
    }
    const auto tq = translated_question(queries);

    const auto cot_prompt = templates.render(
        templates::kFilterCot, {{"context", wrapped}, {"question", queries.original}, {"translated_question", tq}});
    const auto thought = extract_tag(call(chat, cot_prompt, "filter"), "thought_process");
    note_degraded(thought, "filter", "thought_process", out.warnings);
    out.thought = thought.text;

    // The validation template already wraps {context} in one reference pair.
    const auto validate_prompt =
        templates.render(templates::kFilterValidate, {{"context", text::join(bodies, " </reference>\n<reference> ")},
                                                      {"question", queries.original},
                                                      {"translated_question", tq},
                                                      {"cot_info", wrap_tag("thought_process", out.thought)}});
    const auto validation = extract_tag(call(chat, validate_prompt, "filter"), "validation");
    note_degraded(validation, "filter", "validation", out.warnings);

    std::vector<std::string> verdict_warnings;
    out.verdicts = parse_verdicts(validation.text, children.size(), verdict_warnings);
    for (auto& w : verdict_warnings) {
        spdlog::warn("filter: {}", w);
        out.warnings.push_back("filter: " + std::move(w));
    }
    for (std::size_t i = 0; i < children.size(); ++i) {
        if (out.verdicts[i]) out.kept.push_back(children[i]);
    }
    return out;
}

std::string render_reader_prompt(const QuerySet& queries, const std::string& context, const PipelineConfig& config,
                                 const TemplateStore& templates) {
    Bindings b{{"context", context},
               {"chat_history", ""},
               {"examples", format_examples(config.reader_examples)},
               {"question", queries.original},
               {"translated_questions", text::join(queries.rewrites, "\n")}};
    if (config.toggles.use_domain_reader) {
        b.emplace("domain_phrases", config.domain_phrases);
        return templates.render(templates::kReaderDomain, b);
    }
    return templates.render(templates::kReaderBasic, b);
}

AnswerRecord generate_answer(const QuerySet& queries, const ExtractorOutput& extracted, const FilterOutput& filtered,
                             const PipelineConfig& config, ChatModel& chat, const TemplateStore& templates) {
    AnswerRecord r;
    r.question = queries.original;
    r.rewrites = queries.rewrites;
    r.extracted = extracted.text;
    r.thought = filtered.thought;
    r.verdicts = filtered.verdicts;
    for (const auto& c : filtered.kept) r.kept_child_ids.push_back(c.child_id);

    std::vector<std::string> parts;
    if (!text::trim(extracted.text).empty()) parts.push_back(extracted.text);
    for (const auto& c : filtered.kept) parts.push_back(c.text);
    if (parts.empty()) {
        r.refused = true;
        r.answer = std::string(kRefusal);
        r.warnings.push_back("reader: no extracted information and no kept chunks");
        return r;
    }

    const auto prompt = render_reader_prompt(queries, text::join(parts, "\n\n"), config, templates);
    const auto tagged = extract_tag(call(chat, prompt, "reader"), "answer");
    note_degraded(tagged, "reader", "answer", r.warnings);
    r.answer = tagged.text;
    return r;
}

Pipeline::Pipeline(PipelineConfig config, const RetrievalBundle& bundle, Providers providers, TemplateStore templates)
    : config_(std::move(config)), bundle_(&bundle), providers_(std::move(providers)), templates_(std::move(templates)) {
    validate(config_);
    if (!providers_.chat || !providers_.embedder) throw ConfigError("pipeline needs a chat model and an embedder");
    const bool layout = bundle.manifest().chunking.mode == ChunkingMode::Layout;
    if (layout != config_.toggles.use_smart_chunking) {
        spdlog::warn("use_smart_chunking={} but the store was chunked in {} mode", config_.toggles.use_smart_chunking,
                     to_string(bundle.manifest().chunking.mode));
    }
}

AnswerRecord Pipeline::answer(const std::string& question) const {
    using clock = std::chrono::steady_clock;
    std::map<std::string, double> timings;
    std::string stage = "rewriter";
    auto started = clock::now();
    auto lap = [&](const std::string& name) {
        const auto now = clock::now();
        timings[name] = std::chrono::duration<double, std::milli>(now - started).count();
        started = now;
    };

    auto& chat = *providers_.chat;
    try {
        QuerySet queries;
        queries.original = question;
        if (config_.toggles.use_rewriter && config_.n_rewrites > 0) {
            queries = rewrite(question, chat, templates_, {config_.n_rewrites, config_.rewrite_examples});
        }
        lap("rewriter");

        stage = "retrieval";
        const auto retrieved = retrieve(queries.all(), *bundle_, *providers_.embedder,
                                        {config_.k, config_.lambda, config_.depth_multiplier});
        lap("retrieval");

        stage = "extractor";
        ExtractorOutput extracted;
        if (config_.toggles.use_extractor) extracted = extract_global(queries, retrieved.parents, chat, templates_);
        lap("extractor");

        stage = "filter";
        FilterOutput filtered;
        if (config_.toggles.use_filter) {
            filtered = cot_filter(queries, retrieved.children, chat, templates_);
        } else {
            filtered.kept = retrieved.children;
            filtered.verdicts.assign(retrieved.children.size(), true);
        }
        lap("filter");

        stage = "reader";
        auto record = generate_answer(queries, extracted, filtered, config_, chat, templates_);
        lap("reader");

        for (const auto& c : retrieved.children) record.child_ids.push_back(c.child_id);
        for (const auto& p : retrieved.parents) record.parent_ids.push_back(p.parent_id);
        for (const auto& rk : retrieved.rankings) record.ranking_sources.push_back(rk.source);
        std::vector<std::string> warnings = queries.warnings;
        warnings.insert(warnings.end(), extracted.warnings.begin(), extracted.warnings.end());
        warnings.insert(warnings.end(), filtered.warnings.begin(), filtered.warnings.end());
        warnings.insert(warnings.end(), record.warnings.begin(), record.warnings.end());
        record.warnings = std::move(warnings);
        record.timings_ms = std::move(timings);
        return record;
    } catch (const PipelineError& e) {
        stage = e.stage();
        AnswerRecord failed;
        failed.question = question;
        failed.error = StageError{stage, e.what()};
        spdlog::error("{} stage failed for '{}': {}", stage, question, e.what());
        return failed;
    } catch (const Error& e) {
        AnswerRecord failed;
        failed.question = question;
        failed.error = StageError{stage, e.what()};
        spdlog::error("{} stage failed for '{}': {}", stage, question, e.what());
        return failed;
    }
}

}  // namespace lclfqa
