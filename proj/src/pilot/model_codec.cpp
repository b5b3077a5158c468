#include "twinet/pilot/model_codec.hpp"

#include <boost/crc.hpp>
#include <fmt/format.h>

#include <bit>
#include <cstring>

namespace twinet::pilot {

namespace {

constexpr std::uint8_t kMagic[4] = {'T', 'W', 'C', 'M'};

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

class Writer {
public:
    template <std::unsigned_integral T>
    void put(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void put_f64(double d) { put(std::bit_cast<std::uint64_t>(d)); }
    void put_bytes(std::span<const std::uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); }

    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

    template <std::unsigned_integral T>
    T get() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return v;
    }
    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::span<const std::uint8_t> get_bytes(std::size_t n) {
        need(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw ModelCodecError(ModelCodecErrc::Truncated, "model blob truncated");
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t model_header_size(const ClassifierModel& model) {
    return 4 + 4 + 4 + 8 + 4 + 4 + 2 + model.pilot_config.label.size() + 4 * model.pilot_config.pilots();
}

std::vector<std::uint8_t> encode_model(const ClassifierModel& model) {
    const auto& pc = model.pilot_config;
    pc.validate();
    const auto c = static_cast<Eigen::Index>(pc.classes());
    const auto k = static_cast<Eigen::Index>(pc.n_subcarriers);
    if (model.weights.rows() != c || model.weights.cols() != k || model.bias.size() != c || model.norm.mean.size() != k ||
        model.norm.std.size() != k) {
        throw ModelCodecError(ModelCodecErrc::Inconsistent, "model dims do not match its pilot config");
    }
    if (pc.label.size() > 0xFFFF) throw ModelCodecError(ModelCodecErrc::Inconsistent, "label too long");

    Writer w;
    w.put_bytes(kMagic);
    w.put(kModelFormatVersion);
    w.put(model.version);
    w.put(model.seed);
    w.put(static_cast<std::uint32_t>(k));
    w.put(static_cast<std::uint32_t>(pc.pilots()));
    w.put(static_cast<std::uint16_t>(pc.label.size()));
    w.put_bytes({reinterpret_cast<const std::uint8_t*>(pc.label.data()), pc.label.size()});
    for (auto idx : pc.pilot_indices) w.put(static_cast<std::uint32_t>(idx));
    for (Eigen::Index i = 0; i < c; ++i)
        for (Eigen::Index j = 0; j < k; ++j) w.put_f64(model.weights(i, j));
    for (Eigen::Index i = 0; i < c; ++i) w.put_f64(model.bias(i));
    for (Eigen::Index j = 0; j < k; ++j) w.put_f64(model.norm.mean(j));
    for (Eigen::Index j = 0; j < k; ++j) w.put_f64(model.norm.std(j));
    w.put(crc32(w.out));
    return std::move(w.out);
}

ClassifierModel decode_model(std::span<const std::uint8_t> blob) {
    if (blob.size() < 8) throw ModelCodecError(ModelCodecErrc::Truncated, "model blob truncated");
    if (std::memcmp(blob.data(), kMagic, 4) != 0) throw ModelCodecError(ModelCodecErrc::BadMagic, "bad model magic");

    const auto body = blob.first(blob.size() - 4);
    const std::uint32_t stored = Reader(blob.last(4)).get<std::uint32_t>();
    if (crc32(body) != stored) throw ModelCodecError(ModelCodecErrc::ChecksumMismatch, "model checksum mismatch");

    Reader r(body);
    r.get_bytes(4);
    const auto format = r.get<std::uint32_t>();
    if (format != kModelFormatVersion) {
        throw ModelCodecError(ModelCodecErrc::UnknownVersion, fmt::format("unknown model format {}", format));
    }
    ClassifierModel m;
    m.version = r.get<std::uint32_t>();
    m.seed = r.get<std::uint64_t>();
    const auto k = r.get<std::uint32_t>();
    const auto p = r.get<std::uint32_t>();
    const auto label_len = r.get<std::uint16_t>();
    const auto label = r.get_bytes(label_len);
    m.pilot_config.n_subcarriers = k;
    m.pilot_config.label.assign(label.begin(), label.end());
    const std::size_t c = std::size_t{p} + 1;
    // Check the declared dims against what is left before allocating.
    const std::size_t want = 4ull * p + 8ull * (c * k + c + 2ull * k);
    if (r.remaining() != want) {
        throw ModelCodecError(r.remaining() < want ? ModelCodecErrc::Truncated : ModelCodecErrc::Inconsistent,
                              fmt::format("model body is {} bytes, header implies {}", r.remaining(), want));
    }
    for (std::uint32_t i = 0; i < p; ++i) m.pilot_config.pilot_indices.push_back(r.get<std::uint32_t>());
    try {
        m.pilot_config.validate();
    } catch (const std::invalid_argument& e) {
        throw ModelCodecError(ModelCodecErrc::Inconsistent, e.what());
    }

    const auto ci = static_cast<Eigen::Index>(c);
    const auto ki = static_cast<Eigen::Index>(k);
    m.weights.resize(ci, ki);
    m.bias.resize(ci);
    m.norm.mean.resize(ki);
    m.norm.std.resize(ki);
    for (Eigen::Index i = 0; i < ci; ++i)
        for (Eigen::Index j = 0; j < ki; ++j) m.weights(i, j) = r.get_f64();
    for (Eigen::Index i = 0; i < ci; ++i) m.bias(i) = r.get_f64();
    for (Eigen::Index j = 0; j < ki; ++j) m.norm.mean(j) = r.get_f64();
    for (Eigen::Index j = 0; j < ki; ++j) m.norm.std(j) = r.get_f64();
    return m;
}

}  // namespace twinet::pilot
