#include "lclfqa/layout.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "lclfqa/error.hpp"
#include "lclfqa/text.hpp"

namespace lclfqa {

namespace {

constexpr std::array<std::pair<ElementKind, std::string_view>, 5> kKindNames{{
    {ElementKind::PageHeader, "page_header"},
    {ElementKind::PageFooter, "page_footer"},
    {ElementKind::SectionHeader, "section_header"},
    {ElementKind::Footnote, "footnote"},
    {ElementKind::Paragraph, "paragraph"},
}};

std::string at_line(std::size_t line) { return " at line " + std::to_string(line); }

template <typename T>
T required(const nlohmann::json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(std::string("missing field '") + key + "'" + at_line(line));
    }
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(std::string("wrong type for field '") + key + "'" + at_line(line));
    }
}

}  // namespace

std::string_view to_string(ElementKind kind) noexcept {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "paragraph";
}

std::optional<ElementKind> parse_element_kind(std::string_view name) noexcept {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    return std::nullopt;
}

std::vector<LayoutElement> parse_layout(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open layout file " + path.string());
    return parse_layout(in);
}

std::vector<LayoutElement> parse_layout(std::istream& in) {
    std::vector<LayoutElement> elements;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;

        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw ParseError("malformed JSON" + at_line(line_no));
        }
        if (!obj.is_object()) throw ParseError("expected a JSON object" + at_line(line_no));

        LayoutElement e;
        e.element_id = required<std::string>(obj, "element_id", line_no);
        e.doc_id = required<std::string>(obj, "doc_id", line_no);
        e.page = required<int>(obj, "page", line_no);
        e.order = required<std::int64_t>(obj, "order", line_no);
        const auto kind_name = required<std::string>(obj, "kind", line_no);
        e.text = required<std::string>(obj, "text", line_no);

        const auto kind = parse_element_kind(kind_name);
        if (!kind) throw ParseError("unknown element kind" + at_line(line_no));
        e.kind = *kind;
        if (e.page < 1) throw ParseError("page must be >= 1" + at_line(line_no));
        if (e.order < 0) throw ParseError("order must be non-negative" + at_line(line_no));
        if (text::trim(e.text).empty()) throw ParseError("empty element text" + at_line(line_no));
        if (e.element_id.empty()) throw ParseError("empty element_id" + at_line(line_no));

        elements.push_back(std::move(e));
    }

    std::stable_sort(elements.begin(), elements.end(), [](const auto& a, const auto& b) {
        return std::tie(a.doc_id, a.order) < std::tie(b.doc_id, b.order);
    });
    for (std::size_t i = 1; i < elements.size(); ++i) {
        if (elements[i].doc_id == elements[i - 1].doc_id && elements[i].order == elements[i - 1].order) {
            throw IntegrityError("duplicate (doc_id, order) = (" + elements[i].doc_id + ", " +
                                 std::to_string(elements[i].order) + ")");
        }
    }
    std::set<std::string_view> ids;
    for (const auto& e : elements) {
        if (!ids.insert(e.element_id).second) {
            throw IntegrityError("duplicate element_id " + e.element_id);
        }
    }
    return elements;
}

std::vector<std::vector<LayoutElement>> group_by_document(std::vector<LayoutElement> elements) {
    std::map<std::string, std::vector<LayoutElement>> by_doc;
    for (auto& e : elements) by_doc[e.doc_id].push_back(std::move(e));
    std::vector<std::vector<LayoutElement>> out;
    out.reserve(by_doc.size());
    for (auto& [doc, elems] : by_doc) {
        std::stable_sort(elems.begin(), elems.end(),
                         [](const auto& a, const auto& b) { return a.order < b.order; });
        out.push_back(std::move(elems));
    }
    return out;
}

}  // namespace lclfqa
