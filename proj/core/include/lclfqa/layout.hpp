#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lclfqa {

enum class ElementKind { PageHeader, PageFooter, SectionHeader, Footnote, Paragraph };

std::string_view to_string(ElementKind kind) noexcept;
std::optional<ElementKind> parse_element_kind(std::string_view name) noexcept;

/// One typed unit of a parsed page stream, as produced by an upstream layout detector.
struct LayoutElement {
    std::string element_id;
    std::string doc_id;
    int page = 1;
    std::int64_t order = 0;
    ElementKind kind = ElementKind::Paragraph;
    std::string text;

    friend bool operator==(const LayoutElement&, const LayoutElement&) = default;
};

/// Reads JSON-lines layout elements, one object per line with keys element_id,
/// doc_id, page, order, kind, text. Blank lines are ignored. The result is sorted
/// by (doc_id, order).
///
/// Throws ParseError naming the 1-based line number for malformed lines, unknown
/// kinds, page < 1, negative order or blank text; IntegrityError for a repeated
/// (doc_id, order) or element_id.
std::vector<LayoutElement> parse_layout(const std::filesystem::path& path);
std::vector<LayoutElement> parse_layout(std::istream& in);

/// Elements grouped per document, documents in ascending doc_id order.
std::vector<std::vector<LayoutElement>> group_by_document(std::vector<LayoutElement> elements);

}  // namespace lclfqa
