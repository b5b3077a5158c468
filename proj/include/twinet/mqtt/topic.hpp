#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace twinet::mqtt {

class TopicError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A subscription filter split into '/'-separated levels. '+' matches one
/// level, a trailing '#' matches zero or more levels.
class TopicFilter {
public:
    /// Throws TopicError when wildcard placement is invalid.
    static TopicFilter parse(std::string_view filter);

    const std::vector<std::string>& levels() const noexcept { return levels_; }
    const std::string& str() const noexcept { return text_; }
    bool has_wildcards() const noexcept;

    bool operator==(const TopicFilter& other) const { return text_ == other.text_; }

private:
    std::string text_;
    std::vector<std::string> levels_;
};

inline TopicFilter validate_filter(std::string_view filter) { return TopicFilter::parse(filter); }

/// Non-empty, wildcard-free, no U+0000.
bool is_valid_topic_name(std::string_view topic) noexcept;

bool topic_matches(const TopicFilter& filter, std::string_view topic) noexcept;

std::vector<std::string_view> split_levels(std::string_view text);

}  // namespace twinet::mqtt
