#pragma once

#include <chrono>
#include <cstdint>

namespace twinet::link {

/// Microseconds since the Unix epoch. Endpoints on one host share this clock.
inline std::int64_t now_us() noexcept {
    using namespace std::chrono;
    return duration_cast<microseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace twinet::link
