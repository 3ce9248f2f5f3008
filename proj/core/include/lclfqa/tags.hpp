#pragma once

#include <string>
#include <string_view>

namespace lclfqa {

/// How a tagged span was recovered from model output.
enum class TagMatch {
    Complete,     ///< both <tag> and </tag> present
    OpenOnly,     ///< closing tag missing; text after the opening tag taken
    Missing,      ///< no opening tag; whole response taken
};

struct TaggedText {
    std::string text;
    TagMatch match = TagMatch::Complete;

    [[nodiscard]] bool degraded() const noexcept { return match != TagMatch::Complete; }
};

/// Extracts the trimmed content of the first <tag>...</tag> in `response`.
/// This is the one fallback rule used for every prompt-output parser.
TaggedText extract_tag(std::string_view response, std::string_view tag);

/// Wraps `content` as <tag>content</tag>.
std::string wrap_tag(std::string_view tag, std::string_view content);

}  // namespace lclfqa
