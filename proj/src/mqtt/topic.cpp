#include "twinet/mqtt/topic.hpp"

#include <fmt/format.h>

namespace twinet::mqtt {

std::vector<std::string_view> split_levels(std::string_view text) {
    std::vector<std::string_view> levels;
    std::size_t start = 0;
    while (true) {
        const auto slash = text.find('/', start);
        if (slash == std::string_view::npos) {
            levels.push_back(text.substr(start));
            return levels;
        }
        levels.push_back(text.substr(start, slash - start));
        start = slash + 1;
    }
}

TopicFilter TopicFilter::parse(std::string_view filter) {
    if (filter.empty()) throw TopicError("topic filter must not be empty");
    if (filter.find('\0') != std::string_view::npos) throw TopicError("topic filter contains U+0000");
    TopicFilter tf;
    tf.text_ = std::string(filter);
    const auto levels = split_levels(filter);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto level = levels[i];
        if (level.find('#') != std::string_view::npos) {
            if (level != "#") throw TopicError(fmt::format("'#' must occupy a whole level in '{}'", filter));
            if (i + 1 != levels.size()) throw TopicError(fmt::format("'#' must be the last level in '{}'", filter));
        }
        if (level.find('+') != std::string_view::npos && level != "+") {
            throw TopicError(fmt::format("'+' must occupy a whole level in '{}'", filter));
        }
        tf.levels_.emplace_back(level);
    }
    return tf;
}

bool TopicFilter::has_wildcards() const noexcept {
    return text_.find_first_of("+#") != std::string::npos;
}

bool is_valid_topic_name(std::string_view topic) noexcept {
    return !topic.empty() && topic.find_first_of(std::string_view("+#\0", 3)) == std::string_view::npos;
}

bool topic_matches(const TopicFilter& filter, std::string_view topic) noexcept {
    const auto& fl = filter.levels();
    // Wildcards in the first level never match topics reserved with a leading '$'.
    if (!topic.empty() && topic.front() == '$' && (fl.front() == "+" || fl.front() == "#")) return false;

    std::size_t fi = 0;
    std::size_t pos = 0;
    bool topic_exhausted = false;
    while (fi < fl.size()) {
        const std::string& f = fl[fi];
        if (f == "#") return true;
        if (topic_exhausted) return false;
        const auto slash = topic.find('/', pos);
        const auto level = topic.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos);
        if (f != "+" && f != level) return false;
        ++fi;
        if (slash == std::string_view::npos) topic_exhausted = true;
        else pos = slash + 1;
    }
    return topic_exhausted;
}

}  // namespace twinet::mqtt
