#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lclfqa {

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Replaces every `{name}` placeholder (name = [A-Za-z0-9_]+) in one pass. Bound
/// values are inserted verbatim and never re-expanded; braces that do not enclose
/// an identifier are left alone. Throws RenderError naming the first unbound
/// placeholder.
std::string render_text(std::string_view tmpl, const Bindings& bindings);

/// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(std::string_view tmpl);

/// Named prompt templates. Starts from the built-in set; a directory of
/// `<name>.txt` files can override or extend it.
class TemplateStore {
public:
    /// Built-in templates only.
    TemplateStore();

    /// Built-ins overlaid with every `*.txt` file in `dir`.
    static TemplateStore with_overrides(const std::filesystem::path& dir);

    [[nodiscard]] bool contains(std::string_view name) const;
    [[nodiscard]] const std::string& get(std::string_view name) const;
    [[nodiscard]] std::vector<std::string> names() const;

    void set(std::string name, std::string text);

    std::string render(std::string_view name, const Bindings& bindings) const;

    /// Writes every template as `<name>.txt` into `dir`.
    void dump(const std::filesystem::path& dir) const;

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

namespace templates {
inline constexpr std::string_view kExtractor = "extractor";
inline constexpr std::string_view kFilterCot = "filter_cot";
inline constexpr std::string_view kFilterValidate = "filter_validate";
inline constexpr std::string_view kReaderBasic = "reader_basic";
inline constexpr std::string_view kReaderDomain = "reader_domain";
inline constexpr std::string_view kRewritePassage = "rewrite_passage";
inline constexpr std::string_view kRewriteQueries = "rewrite_queries";
inline constexpr std::string_view kClaimExtraction = "claim_extraction";
inline constexpr std::string_view kClaimEntailment = "claim_entailment";
inline constexpr std::string_view kCoverageJudge = "coverage_judge";
inline constexpr std::string_view kSummarizePage = "summarize_page";
}  // namespace templates

}  // namespace lclfqa
