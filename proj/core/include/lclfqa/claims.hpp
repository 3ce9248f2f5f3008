#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lclfqa {

struct Claim;

/// Subject or object of a claim: plain text or a nested claim.
using Term = std::variant<std::string, std::shared_ptr<const Claim>>;

/// A ("subject", "predicate", "object") triple; subject and object may nest.
struct Claim {
    Term subject;
    std::string predicate;
    Term object;

    /// Nesting depth; a flat triple has depth 1.
    [[nodiscard]] std::size_t depth() const;
};

bool operator==(const Claim& a, const Claim& b);
bool operator==(const Term& a, const Term& b);

/// Renders a claim in the ("s", "p", "o") form it is parsed from.
std::string to_string(const Claim& claim);
std::string to_string(const Term& term);

/// Parses one triple starting at the first '(' of `line`. Returns nullopt when the
/// line has no '(' at all; throws ParseError for a malformed triple.
std::optional<Claim> parse_claim_line(std::string_view line);

struct ClaimParse {
    std::vector<Claim> claims;
    std::vector<std::string> warnings;
};

/// Parses every line of a KG listing; malformed lines are skipped with a warning.
ClaimParse parse_claims(std::string_view text);

}  // namespace lclfqa
