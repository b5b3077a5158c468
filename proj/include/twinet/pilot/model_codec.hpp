#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "twinet/pilot/classifier.hpp"

namespace twinet::pilot {

/// Blob layout, little-endian:
///   magic "TWCM" | format u32 | model version u32 | seed u64 | K u32 | P u32 |
///   label length u16 | label bytes | P x u32 pilot indices |
///   (P+1)K f64 weights (row-major) | (P+1) f64 bias | K f64 mean | K f64 std |
///   crc32 u32 over everything before it
inline constexpr std::uint32_t kModelFormatVersion = 1;

enum class ModelCodecErrc { BadMagic, ChecksumMismatch, UnknownVersion, Truncated, Inconsistent };

class ModelCodecError : public std::runtime_error {
public:
    ModelCodecError(ModelCodecErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ModelCodecErrc code() const noexcept { return code_; }

private:
    ModelCodecErrc code_;
};

/// Size of everything before the f64 arrays.
std::size_t model_header_size(const ClassifierModel& model);

std::vector<std::uint8_t> encode_model(const ClassifierModel& model);
ClassifierModel decode_model(std::span<const std::uint8_t> blob);

}  // namespace twinet::pilot
