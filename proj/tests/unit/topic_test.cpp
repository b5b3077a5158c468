#include <gtest/gtest.h>

#include <random>

#include "generators.hpp"
#include "twinet/mqtt/topic.hpp"

using namespace twinet::mqtt;

TEST(TopicFilter, Examples) {
    EXPECT_EQ(validate_filter("a/+/c").levels(), (std::vector<std::string>{"a", "+", "c"}));
    EXPECT_EQ(validate_filter("#").levels(), (std::vector<std::string>{"#"}));
    EXPECT_EQ(validate_filter("a//b").levels(), (std::vector<std::string>{"a", "", "b"}));
    EXPECT_THROW(validate_filter("a/#/b"), TopicError);
    EXPECT_THROW(validate_filter("a/b#"), TopicError);
    EXPECT_THROW(validate_filter("a+/b"), TopicError);
    EXPECT_THROW(validate_filter(""), TopicError);
}

TEST(TopicMatch, Examples) {
    auto m = [](const char* f, const char* t) { return topic_matches(validate_filter(f), t); };
    EXPECT_TRUE(m("a/+", "a/b"));
    EXPECT_FALSE(m("a/+", "a/b/c"));
    EXPECT_TRUE(m("a/#", "a"));
    EXPECT_TRUE(m("a/#", "a/b/c"));
    EXPECT_TRUE(m("+/+", "/x"));
    EXPECT_TRUE(m("+", ""));
    EXPECT_FALSE(m("#", "$SYS/x"));
    EXPECT_FALSE(m("+/x", "$SYS/x"));
    EXPECT_TRUE(m("$SYS/#", "$SYS/x"));
}

TEST(TopicMatch, AgreesWithReferenceMatcher) {
    std::mt19937_64 rng(21);
    int matched = 0;
    for (int i = 0; i < 20'000; ++i) {
        const auto f = twinet::gen::random_filter(rng);
        const auto t = twinet::gen::random_topic(rng);
        const bool expect = twinet::gen::reference_topic_match(f, t);
        ASSERT_EQ(topic_matches(validate_filter(f), t), expect) << f << " vs " << t;
        matched += expect;
    }
    // Both outcomes must be well represented or the comparison means little.
    EXPECT_GT(matched, 1000);
    EXPECT_LT(matched, 19'000);
}

TEST(TopicName, Validity) {
    EXPECT_TRUE(is_valid_topic_name("a/b"));
    EXPECT_FALSE(is_valid_topic_name(""));
    EXPECT_FALSE(is_valid_topic_name("a/+"));
    EXPECT_FALSE(is_valid_topic_name("#"));
}
