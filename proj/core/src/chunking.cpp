#include "lclfqa/chunking.hpp"

#include <algorithm>
#include <map>

#include "lclfqa/error.hpp"
#include "lclfqa/tags.hpp"

namespace lclfqa {

namespace {

PageRange merge(PageRange a, PageRange b) {
    return {std::min(a.first, b.first), std::max(a.last, b.last)};
}

}  // namespace

std::string Section::text() const {
    if (!header_text) return body_text;
    if (body_text.empty()) return *header_text;
    return *header_text + "\n" + body_text;
}

std::vector<std::string> ParentChunk::section_ids() const {
    std::vector<std::string> ids;
    ids.reserve(sections.size());
    for (const auto& s : sections) ids.push_back(s.section_id);
    return ids;
}

std::string_view to_string(ChildKind kind) noexcept {
    return kind == ChildKind::SectionBased ? "section_based" : "footnote_based";
}

std::optional<ChildKind> parse_child_kind(std::string_view name) noexcept {
    if (name == "section_based") return ChildKind::SectionBased;
    if (name == "footnote_based") return ChildKind::FootnoteBased;
    return std::nullopt;
}

std::string_view to_string(ChunkingMode mode) noexcept {
    return mode == ChunkingMode::Layout ? "layout" : "naive";
}

std::optional<ChunkingMode> parse_chunking_mode(std::string_view name) noexcept {
    if (name == "layout") return ChunkingMode::Layout;
    if (name == "naive") return ChunkingMode::Naive;
    return std::nullopt;
}

std::string strip_section_header_tags(std::string_view child_text) {
    const std::string open = "<" + std::string(kSectionHeaderTag) + ">";
    const std::string close = "</" + std::string(kSectionHeaderTag) + ">";
    std::string_view rest = child_text;
    bool stripped = false;
    while (rest.starts_with(open)) {
        const auto e = rest.find(close);
        if (e == std::string_view::npos) break;
        rest.remove_prefix(e + close.size());
        stripped = true;
    }
    if (stripped && rest.starts_with('\n')) rest.remove_prefix(1);
    return std::string(rest);
}

Segmentation segment_sections(const std::vector<LayoutElement>& elements) {
    Segmentation out;
    std::optional<Section> current;
    std::vector<std::string> paragraphs;

    auto flush = [&] {
        if (!current) return;
        current->body_text = text::join(paragraphs, "\n\n");
        current->word_count = text::word_count(current->text());
        out.sections.push_back(std::move(*current));
        current.reset();
        paragraphs.clear();
    };
    auto open_section = [&](const LayoutElement& e) {
        Section s;
        s.section_id = e.doc_id + ":s" + std::to_string(out.sections.size());
        s.doc_id = e.doc_id;
        s.pages = {e.page, e.page};
        current = std::move(s);
    };

    for (const auto& e : elements) {
        switch (e.kind) {
            case ElementKind::PageHeader:
            case ElementKind::PageFooter:
                break;
            case ElementKind::Footnote:
                out.footnotes.push_back({e.doc_id + ":n" + std::to_string(out.footnotes.size()), e.doc_id,
                                         e.page, std::string(text::trim(e.text)), e.element_id});
                break;
            case ElementKind::SectionHeader:
                flush();
                open_section(e);
                current->header_text = std::string(text::trim(e.text));
                current->header_element_id = e.element_id;
                break;
            case ElementKind::Paragraph:
                if (!current) open_section(e);
                current->element_ids.push_back(e.element_id);
                current->pages = merge(current->pages, {e.page, e.page});
                paragraphs.emplace_back(text::trim(e.text));
                break;
        }
    }
    flush();
    return out;
}

namespace {

ParentChunk make_parent(const std::vector<Section>& sections, std::size_t first, std::size_t last,
                        std::size_t index) {
    ParentChunk p;
    p.doc_id = sections[first].doc_id;
    p.parent_id = p.doc_id + ":p" + std::to_string(index);
    p.pages = sections[first].pages;
    for (std::size_t i = first; i <= last; ++i) {
        const auto& s = sections[i];
        if (i > first) p.text.push_back('\n');
        const auto begin = p.text.size();
        p.text += s.text();
        p.sections.push_back({s.section_id, s.header_text, {begin, p.text.size()}});
        p.word_count += s.word_count;
        p.pages = merge(p.pages, s.pages);
    }
    return p;
}

}  // namespace

std::vector<ParentChunk> build_parent_chunks(const std::vector<Section>& sections, std::size_t max_words) {
    if (max_words < 1) throw PreconditionError("parent size must be >= 1");
    for (const auto& s : sections) {
        if (s.doc_id != sections.front().doc_id) {
            throw PreconditionError("build_parent_chunks expects sections of a single document");
        }
    }
    std::vector<ParentChunk> parents;
    const std::size_t n = sections.size();
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start;
        std::size_t total = sections[start].word_count;
        while (total < max_words && end + 1 < n) {
            ++end;
            total += sections[end].word_count;
        }
        parents.push_back(make_parent(sections, start, end, parents.size()));
        // Once the last section is consumed any overlap seed would only repeat a
        // subset of this parent.
        if (end + 1 >= n) break;
        start = sections[end].word_count < max_words ? end : end + 1;
    }
    return parents;
}

std::vector<ChildChunk> build_child_chunks(const ParentChunk& parent, std::size_t max_words) {
    if (max_words < 1) throw PreconditionError("child size must be >= 1");

    struct Unit {
        text::Span span;
        std::size_t words;
    };
    std::vector<Unit> units;
    const std::string_view full = parent.text;
    for (const auto& section : parent.sections) {
        const auto slice = full.substr(section.span.begin, section.span.size());
        for (const auto& s : text::sentence_spans(slice)) {
            const text::Span abs{section.span.begin + s.begin, section.span.begin + s.end};
            units.push_back({abs, text::word_count(full.substr(abs.begin, abs.size()))});
        }
    }

    std::vector<ChildChunk> children;
    auto emit = [&](std::size_t first, std::size_t last) {
        const text::Span span{units[first].span.begin, units[last].span.end};
        std::string prefix;
        for (const auto& section : parent.sections) {
            if (section.header && section.span.overlaps(span)) {
                prefix += wrap_tag(kSectionHeaderTag, *section.header);
            }
        }
        if (!prefix.empty()) prefix.push_back('\n');

        ChildChunk c;
        c.child_id = parent.parent_id + ":c" + std::to_string(children.size());
        c.doc_id = parent.doc_id;
        c.kind = ChildKind::SectionBased;
        c.parent_ids = {parent.parent_id};
        const auto body = full.substr(span.begin, span.size());
        c.text = prefix + std::string(body);
        c.word_count = text::word_count(body);
        c.parent_span = span;
        children.push_back(std::move(c));
    };

    std::size_t group_start = 0;
    std::size_t group_words = 0;
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (i > group_start && group_words + units[i].words > max_words) {
            emit(group_start, i - 1);
            group_start = i;
            group_words = 0;
        }
        group_words += units[i].words;
    }
    if (!units.empty()) emit(group_start, units.size() - 1);
    return children;
}

FootnoteChunking build_footnote_chunks(const std::vector<Footnote>& footnotes,
                                       std::vector<ParentChunk>& parents) {
    FootnoteChunking out;
    std::map<std::pair<std::string, int>, std::vector<const Footnote*>> by_page;
    for (const auto& f : footnotes) by_page[{f.doc_id, f.page}].push_back(&f);

    for (auto& p : parents) {
        p.footnote_ids.clear();
        for (const auto& f : footnotes) {
            if (f.doc_id == p.doc_id && p.pages.contains(f.page)) p.footnote_ids.push_back(f.footnote_id);
        }
    }

    for (const auto& [key, notes] : by_page) {
        const int page = key.second;
        ChildChunk c;
        c.doc_id = notes.front()->doc_id;
        c.child_id = c.doc_id + ":f" + std::to_string(page);
        c.kind = ChildKind::FootnoteBased;
        c.page = page;
        std::vector<std::string> texts;
        for (const auto* f : notes) {
            texts.push_back(f->text);
            c.footnote_ids.push_back(f->footnote_id);
        }
        c.text = text::join(texts, "\n");
        c.word_count = text::word_count(c.text);
        for (const auto& p : parents) {
            if (p.doc_id == c.doc_id && p.pages.contains(page)) c.parent_ids.push_back(p.parent_id);
        }
        if (c.parent_ids.empty()) {
            out.warnings.push_back("footnote chunk " + c.child_id + " on page " + std::to_string(page) +
                                   " is covered by no parent chunk");
        }
        out.children.push_back(std::move(c));
    }
    return out;
}

namespace {

struct Word {
    std::string_view text;
    int page;
};

ChunkedCorpus naive_chunk_document(const std::vector<LayoutElement>& elements, const ChunkingOptions& options) {
    ChunkedCorpus out;
    std::vector<Word> words;
    for (const auto& e : elements) {
        if (e.kind != ElementKind::Paragraph && e.kind != ElementKind::SectionHeader) continue;
        for (auto w : text::split_words(e.text)) words.push_back({w, e.page});
    }
    if (words.empty()) return out;
    const auto& doc_id = elements.front().doc_id;

    for (std::size_t start = 0; start < words.size(); start += options.parent_size) {
        const std::size_t end = std::min(words.size(), start + options.parent_size);
        ParentChunk p;
        p.doc_id = doc_id;
        p.parent_id = doc_id + ":p" + std::to_string(out.parents.size());
        p.pages = {words[start].page, words[start].page};
        std::vector<text::Span> word_spans;
        for (std::size_t i = start; i < end; ++i) {
            if (i > start) p.text.push_back(' ');
            word_spans.push_back({p.text.size(), p.text.size() + words[i].text.size()});
            p.text.append(words[i].text);
            p.pages = merge(p.pages, {words[i].page, words[i].page});
        }
        p.word_count = end - start;
        p.sections.push_back({p.parent_id + ":w", std::nullopt, {0, p.text.size()}});

        for (std::size_t c0 = 0; c0 < word_spans.size(); c0 += options.child_size) {
            const std::size_t c1 = std::min(word_spans.size(), c0 + options.child_size);
            ChildChunk c;
            c.doc_id = doc_id;
            c.child_id = p.parent_id + ":c" + std::to_string(c0 / options.child_size);
            c.kind = ChildKind::SectionBased;
            c.parent_ids = {p.parent_id};
            c.parent_span = text::Span{word_spans[c0].begin, word_spans[c1 - 1].end};
            c.text = p.text.substr(c.parent_span->begin, c.parent_span->size());
            c.word_count = c1 - c0;
            out.children.push_back(std::move(c));
        }
        out.parents.push_back(std::move(p));
    }
    return out;
}

ChunkedCorpus layout_chunk_document(const std::vector<LayoutElement>& elements, const ChunkingOptions& options) {
    ChunkedCorpus out;
    auto seg = segment_sections(elements);
    out.parents = build_parent_chunks(seg.sections, options.parent_size);
    for (const auto& p : out.parents) {
        auto children = build_child_chunks(p, options.child_size);
        std::move(children.begin(), children.end(), std::back_inserter(out.children));
    }
    auto notes = build_footnote_chunks(seg.footnotes, out.parents);
    std::move(notes.children.begin(), notes.children.end(), std::back_inserter(out.children));
    out.warnings = std::move(notes.warnings);
    return out;
}

}  // namespace

ChunkedCorpus chunk_corpus(const std::vector<LayoutElement>& elements, const ChunkingOptions& options) {
    if (options.parent_size < 1 || options.child_size < 1) {
        throw PreconditionError("chunk sizes must be >= 1");
    }
    ChunkedCorpus out;
    for (const auto& doc : group_by_document(elements)) {
        auto part = options.mode == ChunkingMode::Layout ? layout_chunk_document(doc, options)
                                                         : naive_chunk_document(doc, options);
        std::move(part.parents.begin(), part.parents.end(), std::back_inserter(out.parents));
        std::move(part.children.begin(), part.children.end(), std::back_inserter(out.children));
        std::move(part.warnings.begin(), part.warnings.end(), std::back_inserter(out.warnings));
    }
    return out;
}

}  // namespace lclfqa
