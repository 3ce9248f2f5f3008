#include "lclfqa/tags.hpp"

#include "lclfqa/text.hpp"

namespace lclfqa {

TaggedText extract_tag(std::string_view response, std::string_view tag) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    const auto b = response.find(open);
    if (b == std::string_view::npos) {
        return {std::string(text::trim(response)), TagMatch::Missing};
    }
    const auto content_begin = b + open.size();
    const auto e = response.find(close, content_begin);
    if (e == std::string_view::npos) {
        return {std::string(text::trim(response.substr(content_begin))), TagMatch::OpenOnly};
    }
    return {std::string(text::trim(response.substr(content_begin, e - content_begin))),
            TagMatch::Complete};
}

std::string wrap_tag(std::string_view tag, std::string_view content) {
    std::string out;
    out.reserve(content.size() + 2 * tag.size() + 5);
    out.append("<").append(tag).append(">");
    out.append(content);
    out.append("</").append(tag).append(">");
    return out;
}

}  // namespace lclfqa
