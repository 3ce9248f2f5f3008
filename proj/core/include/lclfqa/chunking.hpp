#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lclfqa/layout.hpp"
#include "lclfqa/text.hpp"

namespace lclfqa {

/// Inclusive page range.
struct PageRange {
    int first = 1;
    int last = 1;

    [[nodiscard]] bool contains(int page) const noexcept { return first <= page && page <= last; }
    friend bool operator==(const PageRange&, const PageRange&) = default;
};

/// A run of paragraphs governed by one section header. Paragraphs that precede
/// the first header form a section without header_text.
struct Section {
    std::string section_id;
    std::string doc_id;
    std::optional<std::string> header_text;
    std::optional<std::string> header_element_id;
    std::vector<std::string> element_ids;  ///< paragraph elements only
    std::string body_text;                 ///< paragraphs joined by a blank line
    PageRange pages;
    std::size_t word_count = 0;

    /// Header (if any) and body, separated by a newline.
    [[nodiscard]] std::string text() const;

    friend bool operator==(const Section&, const Section&) = default;
};

struct Footnote {
    std::string footnote_id;
    std::string doc_id;
    int page = 1;
    std::string text;
    std::string source_element_id;

    friend bool operator==(const Footnote&, const Footnote&) = default;
};

/// Where one section sits inside a parent's text.
struct ParentSection {
    std::string section_id;
    std::optional<std::string> header;
    text::Span span;

    friend bool operator==(const ParentSection&, const ParentSection&) = default;
};

struct ParentChunk {
    std::string parent_id;
    std::string doc_id;
    std::vector<ParentSection> sections;
    std::string text;  ///< section texts joined by a single newline
    std::size_t word_count = 0;
    PageRange pages;
    std::vector<std::string> footnote_ids;  ///< metadata only; never part of text

    [[nodiscard]] std::vector<std::string> section_ids() const;

    friend bool operator==(const ParentChunk&, const ParentChunk&) = default;
};

enum class ChildKind { SectionBased, FootnoteBased };

std::string_view to_string(ChildKind kind) noexcept;
std::optional<ChildKind> parse_child_kind(std::string_view name) noexcept;

struct ChildChunk {
    std::string child_id;
    std::string doc_id;
    ChildKind kind = ChildKind::SectionBased;
    std::vector<std::string> parent_ids;
    std::string text;
    std::size_t word_count = 0;                ///< words of the body, tags excluded
    std::optional<int> page;                   ///< footnote-based only
    std::optional<text::Span> parent_span;     ///< section-based only: body range in the parent text
    std::vector<std::string> footnote_ids;     ///< footnote-based only

    friend bool operator==(const ChildChunk&, const ChildChunk&) = default;
};

inline constexpr std::string_view kSectionHeaderTag = "section-header";
inline constexpr std::string_view kFootnoteTag = "footnote";

/// Removes the leading <section-header>...</section-header> block (and the newline
/// that follows it) from a section-based child's text, leaving its body.
std::string strip_section_header_tags(std::string_view child_text);

struct Segmentation {
    std::vector<Section> sections;
    std::vector<Footnote> footnotes;
};

/// Splits one document's elements (sorted by order) into sections and footnotes.
/// Page headers and footers are dropped.
Segmentation segment_sections(const std::vector<LayoutElement>& elements);

/// Greedily merges sections until a parent reaches `max_words` (the last parent may
/// be smaller). A parent whose last section is shorter than `max_words` overlaps
/// into its successor.
std::vector<ParentChunk> build_parent_chunks(const std::vector<Section>& sections, std::size_t max_words);

/// Packs a parent's sentences into section-based children of at most `max_words`
/// words (an over-long sentence stands alone) and prefixes each with the headers of
/// every section it overlaps.
std::vector<ChildChunk> build_child_chunks(const ParentChunk& parent, std::size_t max_words);

struct FootnoteChunking {
    std::vector<ChildChunk> children;
    std::vector<std::string> warnings;
};

/// Groups footnotes by page into footnote-based children, links each to every
/// parent whose page range contains the page, and records footnote ids on those
/// parents.
FootnoteChunking build_footnote_chunks(const std::vector<Footnote>& footnotes,
                                       std::vector<ParentChunk>& parents);

enum class ChunkingMode {
    Layout,  ///< section-based parents, tagged children, footnote links
    Naive,   ///< fixed word windows over body text, no tags, footnotes ignored
};

std::string_view to_string(ChunkingMode mode) noexcept;
std::optional<ChunkingMode> parse_chunking_mode(std::string_view name) noexcept;

struct ChunkingOptions {
    std::size_t parent_size = 1024;
    std::size_t child_size = 200;
    ChunkingMode mode = ChunkingMode::Layout;

    friend bool operator==(const ChunkingOptions&, const ChunkingOptions&) = default;
};

struct ChunkedCorpus {
    std::vector<ParentChunk> parents;
    std::vector<ChildChunk> children;
    std::vector<std::string> warnings;
};

/// Chunks every document in `elements`; documents are processed in doc_id order.
ChunkedCorpus chunk_corpus(const std::vector<LayoutElement>& elements, const ChunkingOptions& options);

}  // namespace lclfqa
