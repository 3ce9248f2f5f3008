#include "lclfqa/evaluator.hpp"

#include <fstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lclfqa/error.hpp"
#include "lclfqa/parallel.hpp"
#include "lclfqa/tags.hpp"
#include "lclfqa/text.hpp"

namespace lclfqa {

using nlohmann::json;

std::string_view to_string(Category c) noexcept {
    switch (c) {
        case Category::Complete: return "COMPLETE";
        case Category::Partial: return "PARTIAL";
        case Category::Incorrect: return "INCORRECT";
    }
    return "INCORRECT";
}

std::optional<Category> parse_category(std::string_view s) noexcept {
    const auto upper = text::to_upper(text::trim(s));
    if (upper == "COMPLETE") return Category::Complete;
    if (upper == "PARTIAL") return Category::Partial;
    if (upper == "INCORRECT") return Category::Incorrect;
    return std::nullopt;
}

ClaimExtraction extract_claims(const std::string& question, const std::string& answer, ChatModel& chat,
                               const TemplateStore& templates) {
    if (text::trim(answer).empty()) throw PreconditionError("claim extraction needs a non-empty answer");
    const auto prompt = templates.render(templates::kClaimExtraction, {{"question", question}, {"answer", answer}});
    std::string response;
    try {
        response = chat.complete(prompt);
    } catch (const ProviderError& e) {
        throw GenerationError(std::string("claim extraction failed: ") + e.what());
    }
    auto parsed = parse_claims(response);
    if (parsed.claims.empty()) throw GenerationError("claim extraction produced no parseable triples");
    for (const auto& w : parsed.warnings) spdlog::warn("claims: {}", w);
    return {std::move(parsed.claims), std::move(parsed.warnings)};
}

std::vector<bool> parse_entailment_verdicts(std::string_view response, std::size_t count,
                                            std::vector<std::string>& warnings) {
    std::vector<std::string_view> lines;
    for (std::size_t pos = 0; pos < response.size();) {
        auto nl = response.find('\n', pos);
        if (nl == std::string_view::npos) nl = response.size();
        const auto line = text::trim(response.substr(pos, nl - pos));
        if (!line.empty()) lines.push_back(line);
        pos = nl + 1;
    }
    const auto units = lines.size() >= 2 ? lines : text::split_words(response);
    std::vector<bool> out(count, false);
    for (std::size_t i = 0; i < count && i < units.size(); ++i) {
        const auto lower = text::to_lower(units[i]);
        const auto t = lower.find("true");
        const auto f = lower.find("false");
        if (t == std::string::npos && f == std::string::npos) {
            warnings.push_back("entailment verdict " + std::to_string(i + 1) + " unreadable, counted as not entailed");
            continue;
        }
        out[i] = t < f;
    }
    if (units.size() < count) {
        warnings.push_back("expected " + std::to_string(count) + " entailment verdicts, got " +
                           std::to_string(units.size()) + "; missing ones counted as not entailed");
    }
    return out;
}

RecallResult compute_recall(const std::string& question, const std::string& gold_answer,
                            const std::string& generated_answer, ChatModel& chat, const TemplateStore& templates) {
    if (text::trim(generated_answer).empty()) throw PreconditionError("recall needs a non-empty generated answer");
    RecallResult r;
    auto extraction = extract_claims(question, gold_answer, chat, templates);
    r.claims = std::move(extraction.claims);
    r.warnings = std::move(extraction.warnings);

    std::string listing;
    for (std::size_t i = 0; i < r.claims.size(); ++i) {
        if (i > 0) listing += '\n';
        listing += std::to_string(i + 1) + ". " + to_string(r.claims[i]);
    }
    const auto prompt =
        templates.render(templates::kClaimEntailment, {{"answer", generated_answer}, {"claims", listing}});
    std::string response;
    try {
        response = chat.complete(prompt);
    } catch (const ProviderError& e) {
        throw GenerationError(std::string("entailment check failed: ") + e.what());
    }
    const auto tagged = extract_tag(response, "verdicts");
    if (tagged.degraded()) r.warnings.push_back("entailment: <verdicts> tag incomplete");
    r.verdicts = parse_entailment_verdicts(tagged.text, r.claims.size(), r.warnings);
    r.entailed = static_cast<std::size_t>(std::count(r.verdicts.begin(), r.verdicts.end(), true));
    r.recall = static_cast<double>(r.entailed) / static_cast<double>(r.claims.size());
    return r;
}

JudgeResult judge_coverage(const std::string& question, const std::string& source, const std::string& answer,
                           ChatModel& chat, const TemplateStore& templates) {
    if (text::trim(question).empty() || text::trim(source).empty() || text::trim(answer).empty()) {
        throw PreconditionError("judge needs a question, a source and an answer");
    }
    const auto prompt =
        templates.render(templates::kCoverageJudge, {{"question", question}, {"source", source}, {"answer", answer}});
    std::string response;
    try {
        response = chat.complete(prompt);
    } catch (const ProviderError& e) {
        throw GenerationError(std::string("judge call failed: ") + e.what());
    }
    JudgeResult out;
    const auto thought = extract_tag(response, "thought_process");
    if (thought.match != TagMatch::Missing) out.thought = thought.text;
    const auto decision = extract_tag(response, "decision");
    if (decision.match == TagMatch::Missing) throw GenerationError("judge response has no <decision> tag");
    if (decision.degraded()) out.warnings.push_back("judge: missing </decision>");
    // With the closing tag absent the decision is the first word after the opening tag.
    const auto words = text::split_words(decision.text);
    const auto category = parse_category(decision.match == TagMatch::Complete || words.empty()
                                             ? std::string_view(decision.text)
                                             : words.front());
    if (!category) throw GenerationError("judge decision '" + decision.text + "' is not a known category");
    out.category = *category;
    return out;
}

double round_ratio(std::uint64_t numerator, std::uint64_t denominator, int digits) {
    if (denominator == 0) throw PreconditionError("ratio with zero denominator");
    std::uint64_t scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    const std::uint64_t scaled = (2 * numerator * scale + denominator) / (2 * denominator);
    return static_cast<double>(scaled) / static_cast<double>(scale);
}

CoverageReport coverage_score(const CoverageCounts& counts) {
    if (counts.total() == 0) throw PreconditionError("coverage score needs at least one categorized record");
    CoverageReport r;
    r.counts = counts;
    r.numerator = 2 * counts.complete + counts.partial;
    r.denominator = 2 * counts.total();
    r.score = round_ratio(r.numerator, r.denominator);
    return r;
}

CoverageReport coverage_score(const std::vector<EvalRecord>& records) {
    CoverageCounts counts;
    std::size_t uncategorized = 0;
    double recall_sum = 0.0;
    std::size_t recall_n = 0;
    for (const auto& r : records) {
        if (r.recall) {
            recall_sum += *r.recall;
            ++recall_n;
        }
        if (!r.category) {
            ++uncategorized;
            continue;
        }
        switch (*r.category) {
            case Category::Complete: ++counts.complete; break;
            case Category::Partial: ++counts.partial; break;
            case Category::Incorrect: ++counts.incorrect; break;
        }
    }
    auto report = coverage_score(counts);
    report.uncategorized = uncategorized;
    if (recall_n > 0) report.mean_recall = recall_sum / static_cast<double>(recall_n);
    return report;
}

std::vector<QaItem> read_qa_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read QA file " + path.string());
    std::vector<QaItem> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            QaItem item;
            item.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
            item.question = j.at("question").get<std::string>();
            item.gold_answer = j.at("gold_answer").get<std::string>();
            item.doc_id = j.value("doc_id", std::string());
            out.push_back(std::move(item));
        } catch (const json::exception& e) {
            throw ParseError(path.filename().string() + ": " + e.what() + " at line " + std::to_string(line_no));
        }
    }
    return out;
}

namespace {

json record_to_json(const EvalRecord& r) {
    json j{{"id", r.id}, {"run", r.run}, {"question", r.question}, {"gold_answer", r.gold_answer}};
    if (r.error) {
        j["error"] = *r.error;
        return j;
    }
    j["generated_answer"] = r.generated_answer;
    j["recall"] = r.recall ? json(*r.recall) : json(nullptr);
    j["category"] = r.category ? json(std::string(to_string(*r.category))) : json(nullptr);
    j["judge_thought"] = r.judge_thought;
    j["warnings"] = r.warnings;
    return j;
}

}  // namespace

json to_json(const DatasetReport& report) {
    const auto& c = report.coverage;
    json j;
    j["counts"] = {{"complete", c.counts.complete},
                   {"partial", c.counts.partial},
                   {"incorrect", c.counts.incorrect},
                   {"total", c.counts.total()},
                   {"uncategorized", c.uncategorized},
                   {"failed", report.failures.size()}};
    j["score"] = c.denominator == 0 ? json(nullptr) : json(c.score);
    j["score_fraction"] = {c.numerator, c.denominator};
    j["mean_recall"] = c.mean_recall ? json(*c.mean_recall) : json(nullptr);
    j["records"] = json::array();
    for (const auto& r : report.records) j["records"].push_back(record_to_json(r));
    j["pairs"] = json::array();
    for (const auto& p : report.pairs) {
        json cats = json::array();
        for (const auto& cat : p.categories) cats.push_back(cat ? json(std::string(to_string(*cat))) : json(nullptr));
        j["pairs"].push_back({{"id", p.id},
                              {"mean_recall", p.mean_recall ? json(*p.mean_recall) : json(nullptr)},
                              {"categories", std::move(cats)}});
    }
    j["failures"] = report.failures;
    return j;
}

DatasetReport evaluate_dataset(const std::vector<QaItem>& items, const AnswerFn& system, ChatModel& chat,
                               const TemplateStore& templates, const EvaluateOptions& options) {
    if (options.runs < 1) throw PreconditionError("evaluation needs runs >= 1");
    if (options.source == JudgeSource::Document && !options.document_text) {
        throw PreconditionError("document judge source needs a document_text callback");
    }

    DatasetReport report;
    report.records.resize(items.size() * options.runs);
    parallel_for(report.records.size(), options.max_workers, [&](std::size_t slot) {
        const auto& item = items[slot / options.runs];
        auto& rec = report.records[slot];
        rec.id = item.id;
        rec.run = slot % options.runs;
        rec.question = item.question;
        rec.gold_answer = item.gold_answer;
        try {
            rec.generated_answer = system(item);
        } catch (const std::exception& e) {
            rec.error = e.what();
            return;
        }
        try {
            auto recall = compute_recall(item.question, item.gold_answer, rec.generated_answer, chat, templates);
            rec.recall = recall.recall;
            for (auto& w : recall.warnings) rec.warnings.push_back(std::move(w));
        } catch (const Error& e) {
            rec.warnings.push_back(std::string("recall unavailable: ") + e.what());
        }
        try {
            const auto source =
                options.source == JudgeSource::Document ? options.document_text(item) : item.gold_answer;
            auto judged = judge_coverage(item.question, source, rec.generated_answer, chat, templates);
            rec.category = judged.category;
            rec.judge_thought = std::move(judged.thought);
            for (auto& w : judged.warnings) rec.warnings.push_back(std::move(w));
        } catch (const Error& e) {
            rec.warnings.push_back(std::string("judge failed, record left uncategorized: ") + e.what());
        }
    });

    for (std::size_t i = 0; i < items.size(); ++i) {
        PairSummary pair;
        pair.id = items[i].id;
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t run = 0; run < options.runs; ++run) {
            const auto& rec = report.records[i * options.runs + run];
            if (rec.error) {
                report.failures.push_back(rec.id + " run " + std::to_string(run) + ": " + *rec.error);
                pair.categories.push_back(std::nullopt);
                continue;
            }
            pair.categories.push_back(rec.category);
            if (rec.recall) {
                sum += *rec.recall;
                ++n;
            }
        }
        if (n > 0) pair.mean_recall = sum / static_cast<double>(n);
        report.pairs.push_back(std::move(pair));
    }

    std::vector<EvalRecord> answered;
    for (const auto& r : report.records) {
        if (!r.error) answered.push_back(r);
    }
    try {
        report.coverage = coverage_score(answered);
    } catch (const PreconditionError&) {
        spdlog::warn("no record could be categorized; coverage score unavailable");
        for (const auto& r : answered) {
            if (!r.category) ++report.coverage.uncategorized;
        }
    }
    for (const auto& f : report.failures) spdlog::warn("evaluation failure: {}", f);
    return report;
}

}  // namespace lclfqa
