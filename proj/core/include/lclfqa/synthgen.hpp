#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lclfqa/kmeans.hpp"
#include "lclfqa/layout.hpp"
#include "lclfqa/provider.hpp"
#include "lclfqa/random.hpp"
#include "lclfqa/templates.hpp"

namespace lclfqa {

enum class QuestionStyle { Instruction, Reason, Evidence, Comparison, List, Domain };

std::string_view to_string(QuestionStyle style) noexcept;
std::optional<QuestionStyle> parse_question_style(std::string_view name) noexcept;
/// All six styles in round-robin order.
const std::vector<QuestionStyle>& all_question_styles();
/// Template name of a style's generator prompt, e.g. "qgen_instruction".
std::string template_name(QuestionStyle style);

struct PageText {
    std::string doc_id;
    int page = 1;
    std::string text;
};

/// One entry per (doc_id, page) holding that page's headers, paragraphs and
/// footnotes in reading order; running page headers and footers are dropped.
std::vector<PageText> pages_from_layout(const std::vector<LayoutElement>& elements);

struct PageSummary {
    std::string doc_id;
    int page = 1;
    std::string summary;
    std::string text;
    Embedding embedding;  ///< unit length
};

struct SummaryResult {
    std::vector<PageSummary> summaries;  ///< page order; failed and blank pages absent
    std::vector<std::string> warnings;
};

/// One summariser call per non-blank page, then one embedding batch over the
/// summaries. A page whose call fails is skipped with a warning.
SummaryResult summarize_pages(const std::vector<PageText>& pages, ChatModel& chat, Embedder& embedder,
                              const TemplateStore& templates, std::size_t max_workers = 1);

/// k-means over the summary embeddings.
KMeansResult cluster_summaries(const std::vector<PageSummary>& summaries, std::size_t k, std::uint64_t seed);

struct ClusterSample {
    std::size_t cluster = 0;
    std::vector<std::size_t> members;  ///< indexes into the clustered summaries, ascending
    std::size_t clusters_tried = 0;
};

/// Draws clusters uniformly without replacement until one has at least n members,
/// then n of its members uniformly without replacement. Throws PreconditionError
/// when no cluster is large enough.
ClusterSample sample_cluster_chunks(const KMeansResult& assignment, std::size_t n, Rng& rng);

struct QAPair {
    std::string id;
    std::string question;
    std::string answer;
    QuestionStyle style = QuestionStyle::Instruction;
    std::string doc_id;
    std::vector<int> pages;
};

nlohmann::json to_json(const QAPair& pair);

struct GeneratedPairs {
    std::vector<QAPair> pairs;
    std::vector<std::string> warnings;
};

/// Parses "Question 1:/Answer 1:/Question 2:/Answer 2:" bullets. Pairs lacking
/// either half are dropped with a warning.
GeneratedPairs parse_generated_pairs(std::string_view response, QuestionStyle style);

/// One generator call over <chunk>-wrapped texts. Throws GenerationError when no
/// pair parses.
GeneratedPairs generate_qa(const std::vector<std::string>& chunks, QuestionStyle style, ChatModel& chat,
                           const TemplateStore& templates);

struct SynthOptions {
    std::size_t budget = 6;  ///< pairs per document
    std::vector<QuestionStyle> styles = all_question_styles();
    std::size_t k = 0;       ///< 0 picks min(8, page count)
    std::size_t n = 2;
    std::uint64_t seed = 0;
    std::size_t pairs_per_iteration = 1;  ///< of the two pairs each call yields
    double max_failure_rate = 0.5;
    std::size_t min_attempts_before_abort = 4;
    std::size_t max_workers = 1;
};

struct SynthResult {
    std::vector<QAPair> pairs;
    std::vector<std::string> warnings;
    std::size_t attempts = 0;
    std::size_t failures = 0;
    bool aborted = false;
    std::optional<KMeansResult> clusters;
};

/// Summarise, cluster, then repeat sampling and generation with styles taken
/// round-robin until `budget` pairs exist. Aborts, keeping what it has, once the
/// failure rate exceeds max_failure_rate.
SynthResult synthesize(const std::string& doc_id, const std::vector<PageText>& pages, ChatModel& chat,
                       Embedder& embedder, const TemplateStore& templates, const SynthOptions& options = {});

}  // namespace lclfqa
