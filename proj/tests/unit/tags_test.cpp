#include <gtest/gtest.h>

#include "lclfqa/tags.hpp"

using lclfqa::extract_tag;
using lclfqa::TagMatch;

TEST(Tags, CompleteTagIsTrimmed) {
    const auto t = extract_tag("noise <answer>\n 30 percent \n</answer> tail", "answer");
    EXPECT_EQ(t.text, "30 percent");
    EXPECT_EQ(t.match, TagMatch::Complete);
    EXPECT_FALSE(t.degraded());
}

TEST(Tags, FirstOccurrenceWins) {
    EXPECT_EQ(extract_tag("<a>one</a><a>two</a>", "a").text, "one");
}

TEST(Tags, MissingCloseTakesRest) {
    const auto t = extract_tag("x <answer> open ended", "answer");
    EXPECT_EQ(t.text, "open ended");
    EXPECT_EQ(t.match, TagMatch::OpenOnly);
}

TEST(Tags, MissingOpenTakesWholeResponse) {
    const auto t = extract_tag("  plain reply ", "answer");
    EXPECT_EQ(t.text, "plain reply");
    EXPECT_EQ(t.match, TagMatch::Missing);
    EXPECT_TRUE(t.degraded());
}

TEST(Tags, WrapRoundTrips) {
    const auto w = lclfqa::wrap_tag("footnote", "1 See above.");
    EXPECT_EQ(w, "<footnote>1 See above.</footnote>");
    EXPECT_EQ(extract_tag(w, "footnote").text, "1 See above.");
}
