#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lclfqa/provider.hpp"
#include "lclfqa/retrieval.hpp"
#include "lclfqa/rewriter.hpp"
#include "lclfqa/templates.hpp"

namespace lclfqa {

struct PipelineToggles {
    bool use_rewriter = true;
    bool use_smart_chunking = true;  ///< ingest-time: layout chunking vs fixed word windows
    bool use_domain_reader = true;
    bool use_extractor = true;
    bool use_filter = true;
};

struct QaExample {
    std::string question;
    std::string answer;
};

struct PipelineConfig {
    std::size_t k = 8;
    std::size_t n_rewrites = 3;  ///< 0, 1 or 3
    double lambda = 60.0;
    std::size_t depth_multiplier = 4;
    PipelineToggles toggles;
    std::vector<QaExample> reader_examples;
    std::string domain_phrases;
    std::string rewrite_examples;
};

/// Throws ConfigError when k < 1, n_rewrites is not 0, 1 or 3, or lambda <= 0.
void validate(const PipelineConfig& config);

/// Reads the keys of PipelineConfig (toggles nested under "toggles"); missing keys
/// keep their defaults.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// "Question: ...\nAnswer: ..." blocks separated by blank lines.
std::string format_examples(const std::vector<QaExample>& examples);

struct ExtractorOutput {
    std::string text;
    std::vector<std::string> warnings;
};

struct FilterOutput {
    std::vector<ChildChunk> kept;
    std::string thought;
    std::vector<bool> verdicts;  ///< one per input child
    std::vector<std::string> warnings;
};

struct StageError {
    std::string stage;
    std::string message;
};

struct AnswerRecord {
    std::string question;
    std::vector<std::string> rewrites;
    std::string answer;
    bool refused = false;
    std::vector<std::string> child_ids;
    std::vector<std::string> parent_ids;
    std::vector<std::string> ranking_sources;  ///< one per retrieval list fused
    std::string extracted;                     ///< I_g
    std::string thought;
    std::vector<bool> verdicts;
    std::vector<std::string> kept_child_ids;
    std::vector<std::string> warnings;
    std::map<std::string, double> timings_ms;
    std::optional<StageError> error;

    [[nodiscard]] bool ok() const noexcept { return !error.has_value(); }
};

/// Serialises a record. Timings are left out when include_timing is false, which
/// makes records from identical runs byte-identical.
nlohmann::json to_json(const AnswerRecord& record, bool include_timing = true);

inline constexpr std::string_view kRefusal = "insufficient context";

/// Σ: one extractor call over the parents' texts in the given order. No call is
/// made when `parents` is empty.
ExtractorOutput extract_global(const QuerySet& queries, const std::vector<ParentChunk>& parents, ChatModel& chat,
                               const TemplateStore& templates);

/// Φ: a thought-process call over all children, then a validation call returning
/// one True/False per child. Missing or unreadable verdicts count as True.
FilterOutput cot_filter(const QuerySet& queries, const std::vector<ChildChunk>& children, ChatModel& chat,
                        const TemplateStore& templates);

/// Reads one verdict per child from a validation response. Units are lines when the
/// response has two or more non-empty lines, whitespace tokens otherwise.
std::vector<bool> parse_verdicts(std::string_view response, std::size_t count, std::vector<std::string>& warnings);

/// Reader call over I_g followed by the kept children. Returns a refusal without a
/// provider call when both are empty.
AnswerRecord generate_answer(const QuerySet& queries, const ExtractorOutput& extracted, const FilterOutput& filtered,
                             const PipelineConfig& config, ChatModel& chat, const TemplateStore& templates);

/// Prompt the reader stage would send; exposed for inspection and tests.
std::string render_reader_prompt(const QuerySet& queries, const std::string& context, const PipelineConfig& config,
                                 const TemplateStore& templates);

/// End-to-end question answering over one loaded store.
class Pipeline {
public:
    Pipeline(PipelineConfig config, const RetrievalBundle& bundle, Providers providers,
             TemplateStore templates = {});

    /// Never throws for stage failures: the record then carries `error` and no answer.
    [[nodiscard]] AnswerRecord answer(const std::string& question) const;

    [[nodiscard]] const PipelineConfig& config() const noexcept { return config_; }

private:
    PipelineConfig config_;
    const RetrievalBundle* bundle_;
    Providers providers_;
    TemplateStore templates_;
};

}  // namespace lclfqa
