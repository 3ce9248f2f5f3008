#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lclfqa/claims.hpp"
#include "lclfqa/provider.hpp"
#include "lclfqa/templates.hpp"

namespace lclfqa {

enum class Category { Complete, Partial, Incorrect };

std::string_view to_string(Category c) noexcept;
/// Case-insensitive match against COMPLETE, PARTIAL and INCORRECT.
std::optional<Category> parse_category(std::string_view s) noexcept;

struct ClaimExtraction {
    std::vector<Claim> claims;
    std::vector<std::string> warnings;
};

/// One claim-extraction call. Throws PreconditionError for an empty answer and
/// GenerationError when no triple parses.
ClaimExtraction extract_claims(const std::string& question, const std::string& answer, ChatModel& chat,
                               const TemplateStore& templates);

struct RecallResult {
    double recall = 0.0;
    std::size_t entailed = 0;
    std::vector<Claim> claims;
    std::vector<bool> verdicts;
    std::vector<std::string> warnings;
};

/// Claims are extracted from the gold answer, then a single entailment call checks
/// all of them against the generated answer. Missing or unreadable verdicts count
/// as not entailed.
RecallResult compute_recall(const std::string& question, const std::string& gold_answer,
                            const std::string& generated_answer, ChatModel& chat, const TemplateStore& templates);

/// One verdict per claim; lines when there are two or more, whitespace tokens
/// otherwise. Missing or unreadable verdicts are false.
std::vector<bool> parse_entailment_verdicts(std::string_view response, std::size_t count,
                                            std::vector<std::string>& warnings);

struct JudgeResult {
    Category category = Category::Incorrect;
    std::string thought;
    std::vector<std::string> warnings;
};

/// Throws GenerationError when the decision is not one of the three categories.
JudgeResult judge_coverage(const std::string& question, const std::string& source, const std::string& answer,
                           ChatModel& chat, const TemplateStore& templates);

struct CoverageCounts {
    std::uint64_t complete = 0;
    std::uint64_t partial = 0;
    std::uint64_t incorrect = 0;

    [[nodiscard]] std::uint64_t total() const noexcept { return complete + partial + incorrect; }
    friend bool operator==(const CoverageCounts&, const CoverageCounts&) = default;
};

struct CoverageReport {
    CoverageCounts counts;
    std::uint64_t numerator = 0;    ///< 2 * complete + partial
    std::uint64_t denominator = 0;  ///< 2 * total
    double score = 0.0;             ///< numerator / denominator rounded half-up to 4 decimals
    std::size_t uncategorized = 0;  ///< records left out because judging failed
    std::optional<double> mean_recall;

    [[nodiscard]] double exact() const noexcept {
        return static_cast<double>(numerator) / static_cast<double>(denominator);
    }
};

/// Throws PreconditionError when counts.total() is zero.
CoverageReport coverage_score(const CoverageCounts& counts);

/// numerator / denominator rounded half-up to `digits` decimals using integer arithmetic.
double round_ratio(std::uint64_t numerator, std::uint64_t denominator, int digits = 4);

struct QaItem {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::string doc_id;
};

/// JSON lines of {id, question, gold_answer, doc_id}.
std::vector<QaItem> read_qa_file(const std::filesystem::path& path);

struct EvalRecord {
    std::string id;
    std::size_t run = 0;
    std::string question;
    std::string gold_answer;
    std::string generated_answer;
    std::optional<double> recall;
    std::optional<Category> category;
    std::string judge_thought;
    std::vector<std::string> warnings;
    std::optional<std::string> error;  ///< the system under test failed; nothing else is set
};

/// Records with a category are counted; the rest are reported as uncategorized.
/// Throws PreconditionError when no record is categorized.
CoverageReport coverage_score(const std::vector<EvalRecord>& records);

enum class JudgeSource { GoldAnswer, Document };

struct EvaluateOptions {
    std::size_t runs = 1;
    std::size_t max_workers = 1;
    JudgeSource source = JudgeSource::GoldAnswer;
    /// Supplies the judge's SOURCE text when source == Document.
    std::function<std::string(const QaItem&)> document_text;
};

struct PairSummary {
    std::string id;
    std::optional<double> mean_recall;  ///< over runs whose recall succeeded
    std::vector<std::optional<Category>> categories;
};

struct DatasetReport {
    CoverageReport coverage;
    std::vector<EvalRecord> records;  ///< item-major, run-minor
    std::vector<PairSummary> pairs;
    std::vector<std::string> failures;
};

nlohmann::json to_json(const DatasetReport& report);

using AnswerFn = std::function<std::string(const QaItem&)>;

/// Answers every item `runs` times and scores each answer. A failing system call or
/// judge is recorded and evaluation continues.
DatasetReport evaluate_dataset(const std::vector<QaItem>& items, const AnswerFn& system, ChatModel& chat,
                               const TemplateStore& templates, const EvaluateOptions& options = {});

}  // namespace lclfqa
