#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lclfqa::text {

std::string_view trim(std::string_view s);

/// Number of maximal runs of non-whitespace characters.
std::size_t word_count(std::string_view s);

std::vector<std::string_view> split_words(std::string_view s);

/// Lowercased alphanumeric terms; bytes >= 0x80 are kept as term characters so
/// UTF-8 words survive intact.
std::vector<std::string> tokenize_terms(std::string_view s);

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Half-open byte range into some owning string.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
    [[nodiscard]] bool overlaps(const Span& other) const noexcept {
        return begin < other.end && other.begin < end;
    }
    friend bool operator==(const Span&, const Span&) = default;
};

/// Splits `s` into sentence spans. A sentence ends after '.', '?' or '!' that is
/// followed by whitespace, and at blank lines. Abbreviations are not special-cased.
/// Spans exclude surrounding whitespace; whitespace-only input yields nothing.
std::vector<Span> sentence_spans(std::string_view s);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view s) noexcept;

}  // namespace lclfqa::text
