#include "lclfqa/synthgen.hpp"

#include <algorithm>
#include <array>
#include <map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lclfqa/error.hpp"
#include "lclfqa/parallel.hpp"
#include "lclfqa/tags.hpp"
#include "lclfqa/text.hpp"

namespace lclfqa {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<QuestionStyle, std::string_view>, 6> kStyleNames{{
    {QuestionStyle::Instruction, "instruction"},
    {QuestionStyle::Reason, "reason"},
    {QuestionStyle::Evidence, "evidence"},
    {QuestionStyle::Comparison, "comparison"},
    {QuestionStyle::List, "list"},
    {QuestionStyle::Domain, "domain"},
}};

}  // namespace

std::string_view to_string(QuestionStyle style) noexcept {
    for (const auto& [s, name] : kStyleNames) {
        if (s == style) return name;
    }
    return "instruction";
}

std::optional<QuestionStyle> parse_question_style(std::string_view name) noexcept {
    for (const auto& [s, n] : kStyleNames) {
        if (n == name) return s;
    }
    return std::nullopt;
}

const std::vector<QuestionStyle>& all_question_styles() {
    static const std::vector<QuestionStyle> styles = [] {
        std::vector<QuestionStyle> out;
        for (const auto& [s, name] : kStyleNames) out.push_back(s);
        return out;
    }();
    return styles;
}

std::string template_name(QuestionStyle style) { return "qgen_" + std::string(to_string(style)); }

std::vector<PageText> pages_from_layout(const std::vector<LayoutElement>& elements) {
    std::map<std::pair<std::string, int>, std::vector<const LayoutElement*>> grouped;
    for (const auto& e : elements) {
        if (e.kind == ElementKind::PageHeader || e.kind == ElementKind::PageFooter) continue;
        grouped[{e.doc_id, e.page}].push_back(&e);
    }
    std::vector<PageText> out;
    for (auto& [key, list] : grouped) {
        std::stable_sort(list.begin(), list.end(), [](const auto* a, const auto* b) { return a->order < b->order; });
        std::vector<std::string> parts;
        for (const auto* e : list) parts.push_back(e->text);
        out.push_back({key.first, key.second, text::join(parts, "\n")});
    }
    return out;
}

SummaryResult summarize_pages(const std::vector<PageText>& pages, ChatModel& chat, Embedder& embedder,
                              const TemplateStore& templates, std::size_t max_workers) {
    if (pages.empty()) throw PreconditionError("summarize_pages needs at least one page");
    std::vector<std::optional<std::string>> summaries(pages.size());
    std::vector<std::string> errors(pages.size());
    parallel_for(pages.size(), max_workers, [&](std::size_t i) {
        if (text::trim(pages[i].text).empty()) return;
        try {
            const auto response = chat.complete(templates.render(templates::kSummarizePage, {{"text", pages[i].text}}));
            auto s = std::string(text::trim(response));
            if (s.empty()) {
                errors[i] = "empty summary";
                return;
            }
            summaries[i] = std::move(s);
        } catch (const ProviderError& e) {
            errors[i] = e.what();
        }
    });

    SummaryResult out;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < pages.size(); ++i) {
        if (!errors[i].empty()) {
            out.warnings.push_back(pages[i].doc_id + " page " + std::to_string(pages[i].page) +
                                   " skipped: " + errors[i]);
            spdlog::warn("summarize: {}", out.warnings.back());
        }
        if (!summaries[i]) continue;
        out.summaries.push_back({pages[i].doc_id, pages[i].page, *summaries[i], pages[i].text, {}});
        texts.push_back(*summaries[i]);
    }
    if (texts.empty()) return out;
    auto vectors = embedder.embed(texts);
    if (vectors.size() != texts.size()) throw ProviderError("embedder dropped summary vectors");
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        normalize(vectors[i]);
        out.summaries[i].embedding = std::move(vectors[i]);
    }
    return out;
}

KMeansResult cluster_summaries(const std::vector<PageSummary>& summaries, std::size_t k, std::uint64_t seed) {
    std::vector<std::vector<double>> points;
    points.reserve(summaries.size());
    for (const auto& s : summaries) points.emplace_back(s.embedding.begin(), s.embedding.end());
    if (k > points.size()) {
        throw PreconditionError("cannot form " + std::to_string(k) + " clusters from " +
                                std::to_string(points.size()) + " summaries");
    }
    return kmeans(points, k, seed);
}

ClusterSample sample_cluster_chunks(const KMeansResult& assignment, std::size_t n, Rng& rng) {
    if (n < 1) throw PreconditionError("sample size must be >= 1");
    const auto members = assignment.members();
    std::vector<std::size_t> candidates(members.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) candidates[c] = c;

    ClusterSample out;
    while (!candidates.empty()) {
        const auto pick = uniform_below(rng, candidates.size());
        const auto cluster = candidates[pick];
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
        ++out.clusters_tried;
        if (members[cluster].size() < n) continue;

        auto pool = members[cluster];
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = i + uniform_below(rng, pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(n);
        std::sort(pool.begin(), pool.end());
        out.cluster = cluster;
        out.members = std::move(pool);
        return out;
    }
    throw PreconditionError("no cluster has " + std::to_string(n) + " members");
}

json to_json(const QAPair& p) {
    return {{"id", p.id},
            {"question", p.question},
            {"gold_answer", p.answer},
            {"doc_id", p.doc_id},
            {"style", std::string(to_string(p.style))},
            {"pages", p.pages}};
}

namespace {

struct Marker {
    std::size_t start = 0;
    std::size_t content = 0;
    bool question = true;
    int index = 1;
};

/// Finds "question N:" / "answer N:" labels, tolerating markdown bold around the label.
std::vector<Marker> find_markers(std::string_view response) {
    const auto lower = text::to_lower(response);
    std::vector<Marker> out;
    for (const bool question : {true, false}) {
        for (const int index : {1, 2}) {
            const auto label = std::string(question ? "question " : "answer ") + std::to_string(index);
            for (auto pos = lower.find(label); pos != std::string::npos; pos = lower.find(label, pos + 1)) {
                auto end = pos + label.size();
                while (end < lower.size() && lower[end] == '*') ++end;
                if (end < lower.size() && lower[end] == ':') {
                    ++end;
                    while (end < lower.size() && lower[end] == '*') ++end;
                    out.push_back({pos, end, question, index});
                    break;
                }
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Marker& a, const Marker& b) { return a.start < b.start; });
    return out;
}

std::string clean_value(std::string_view v) {
    auto s = text::trim(v);
    // Drop the bullet that opens the next label, and markdown bold left behind.
    while (!s.empty() && (s.back() == '-' || s.back() == '*' || s.back() == ' ' || s.back() == '\n' ||
                          s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    while (!s.empty() && s.front() == '*') s.remove_prefix(1);
    return std::string(text::trim(s));
}

}  // namespace

GeneratedPairs parse_generated_pairs(std::string_view response, QuestionStyle style) {
    const auto markers = find_markers(response);
    std::map<int, std::pair<std::string, std::string>> found;
    for (std::size_t i = 0; i < markers.size(); ++i) {
        const auto end = i + 1 < markers.size() ? markers[i + 1].start : response.size();
        auto value = clean_value(response.substr(markers[i].content, end - markers[i].content));
        auto& slot = found[markers[i].index];
        (markers[i].question ? slot.first : slot.second) = std::move(value);
    }
    GeneratedPairs out;
    for (const int index : {1, 2}) {
        const auto it = found.find(index);
        if (it == found.end() || it->second.first.empty() || it->second.second.empty()) {
            out.warnings.push_back("generator output lacks question/answer " + std::to_string(index));
            continue;
        }
        QAPair p;
        p.question = it->second.first;
        p.answer = it->second.second;
        p.style = style;
        out.pairs.push_back(std::move(p));
    }
    return out;
}

GeneratedPairs generate_qa(const std::vector<std::string>& chunks, QuestionStyle style, ChatModel& chat,
                           const TemplateStore& templates) {
    if (chunks.empty()) throw PreconditionError("generate_qa needs at least one chunk");
    std::string wrapped;
    for (const auto& c : chunks) {
        if (!wrapped.empty()) wrapped += '\n';
        wrapped += wrap_tag("chunk", c);
    }
    std::string response;
    try {
        response = chat.complete(templates.render(template_name(style), {{"text", wrapped}}));
    } catch (const ProviderError& e) {
        throw GenerationError(std::string("question generation failed: ") + e.what());
    }
    auto out = parse_generated_pairs(response, style);
    if (out.pairs.empty()) throw GenerationError("generator output has no question/answer pair");
    return out;
}

SynthResult synthesize(const std::string& doc_id, const std::vector<PageText>& pages, ChatModel& chat,
                       Embedder& embedder, const TemplateStore& templates, const SynthOptions& options) {
    if (options.budget < 1) throw PreconditionError("synthesis budget must be >= 1");
    if (options.styles.empty()) throw PreconditionError("synthesis needs at least one question style");
    if (options.pairs_per_iteration < 1 || options.pairs_per_iteration > 2) {
        throw PreconditionError("pairs_per_iteration must be 1 or 2");
    }

    std::vector<PageText> doc_pages;
    for (const auto& p : pages) {
        if (p.doc_id == doc_id) doc_pages.push_back(p);
    }
    if (doc_pages.empty()) throw PreconditionError("document " + doc_id + " has no pages");

    SynthResult result;
    auto summarized = summarize_pages(doc_pages, chat, embedder, templates, options.max_workers);
    result.warnings = std::move(summarized.warnings);
    const auto& summaries = summarized.summaries;
    if (summaries.empty()) throw GenerationError("no page of " + doc_id + " could be summarised");

    const std::uint64_t seed = options.seed ^ text::fnv1a64(doc_id);
    const std::size_t k = options.k == 0 ? std::min<std::size_t>(8, summaries.size())
                                         : std::min(options.k, summaries.size());
    if (options.k > summaries.size()) {
        result.warnings.push_back("k lowered to " + std::to_string(k) + " (pages with summaries)");
    }
    result.clusters = cluster_summaries(summaries, k, seed);
    Rng rng(seed);

    std::size_t style_cursor = 0;
    while (result.pairs.size() < options.budget) {
        ++result.attempts;
        const auto style = options.styles[style_cursor % options.styles.size()];
        try {
            const auto sample = sample_cluster_chunks(*result.clusters, options.n, rng);
            std::vector<std::string> chunks;
            std::vector<int> page_numbers;
            for (const auto m : sample.members) {
                chunks.push_back(summaries[m].text);
                page_numbers.push_back(summaries[m].page);
            }
            auto generated = generate_qa(chunks, style, chat, templates);
            for (auto& w : generated.warnings) result.warnings.push_back(std::move(w));
            std::size_t taken = 0;
            for (auto& p : generated.pairs) {
                if (taken == options.pairs_per_iteration || result.pairs.size() == options.budget) break;
                p.id = doc_id + ":q" + std::to_string(result.pairs.size());
                p.doc_id = doc_id;
                p.pages = page_numbers;
                result.pairs.push_back(std::move(p));
                ++taken;
            }
            ++style_cursor;
        } catch (const Error& e) {
            ++result.failures;
            result.warnings.push_back("iteration " + std::to_string(result.attempts) + " failed: " + e.what());
            spdlog::warn("synth {}: {}", doc_id, result.warnings.back());
            const double rate = static_cast<double>(result.failures) / static_cast<double>(result.attempts);
            if (result.attempts >= options.min_attempts_before_abort && rate > options.max_failure_rate) {
                result.aborted = true;
                spdlog::error("synth {}: failure rate {:.0f}% after {} attempts, stopping with {} pairs", doc_id,
                              100.0 * rate, result.attempts, result.pairs.size());
                break;
            }
        }
    }
    return result;
}

}  // namespace lclfqa
