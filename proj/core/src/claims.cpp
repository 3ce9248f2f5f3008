#include "lclfqa/claims.hpp"

#include <algorithm>

#include "lclfqa/error.hpp"
#include "lclfqa/text.hpp"

namespace lclfqa {

namespace {

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    Claim claim() {
        expect('(');
        Claim c;
        c.subject = term();
        expect(',');
        auto predicate = term();
        if (!std::holds_alternative<std::string>(predicate)) fail("predicate must be a string");
        c.predicate = std::get<std::string>(std::move(predicate));
        if (text::trim(c.predicate).empty()) fail("empty predicate");
        expect(',');
        c.object = term();
        expect(')');
        return c;
    }

    [[nodiscard]] std::size_t position() const noexcept { return i_; }

private:
    Term term() {
        skip_space();
        if (i_ >= s_.size()) fail("unexpected end of line");
        if (s_[i_] == '(') return std::make_shared<const Claim>(claim());
        if (s_[i_] == '"') return quoted();
        fail("expected a quoted string or a nested triple");
    }

    std::string quoted() {
        ++i_;
        std::string out;
        while (i_ < s_.size()) {
            const char c = s_[i_++];
            if (c == '\\' && i_ < s_.size()) {
                out.push_back(s_[i_++]);
            } else if (c == '"') {
                return out;
            } else {
                out.push_back(c);
            }
        }
        fail("unterminated string");
    }

    void expect(char c) {
        skip_space();
        if (i_ >= s_.size() || s_[i_] != c) fail(std::string("expected '") + c + "'");
        ++i_;
    }

    void skip_space() {
        while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r')) ++i_;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(what + " at column " + std::to_string(i_ + 1));
    }

    std::string_view s_;
    std::size_t i_ = 0;
};

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::size_t term_depth(const Term& t) {
    if (const auto* c = std::get_if<std::shared_ptr<const Claim>>(&t)) return (*c)->depth();
    return 0;
}

}  // namespace

std::size_t Claim::depth() const { return 1 + std::max(term_depth(subject), term_depth(object)); }

bool operator==(const Term& a, const Term& b) {
    if (a.index() != b.index()) return false;
    if (const auto* s = std::get_if<std::string>(&a)) return *s == std::get<std::string>(b);
    return *std::get<1>(a) == *std::get<1>(b);
}

bool operator==(const Claim& a, const Claim& b) {
    return a.predicate == b.predicate && a.subject == b.subject && a.object == b.object;
}

std::string to_string(const Term& term) {
    if (const auto* s = std::get_if<std::string>(&term)) return quote(*s);
    return to_string(*std::get<1>(term));
}

std::string to_string(const Claim& claim) {
    return "(" + to_string(claim.subject) + ", " + quote(claim.predicate) + ", " + to_string(claim.object) + ")";
}

std::optional<Claim> parse_claim_line(std::string_view line) {
    const auto open = line.find('(');
    if (open == std::string_view::npos) return std::nullopt;
    Parser p(line.substr(open));
    return p.claim();
}

ClaimParse parse_claims(std::string_view text) {
    ClaimParse out;
    std::size_t line_no = 0;
    for (std::size_t pos = 0; pos < text.size();) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = text::trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            if (auto c = parse_claim_line(line)) out.claims.push_back(std::move(*c));
        } catch (const ParseError& e) {
            out.warnings.push_back("claim line " + std::to_string(line_no) + " skipped: " + e.what());
        }
    }
    return out;
}

}  // namespace lclfqa
