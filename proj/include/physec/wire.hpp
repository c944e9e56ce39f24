#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace physec::wire {

// Big-endian byte writer/reader for the TLV and handshake formats.
class Writer {
public:
    void u8(uint8_t v) { out_.push_back(v); }
    void u16(uint16_t v) {
        out_.push_back(static_cast<uint8_t>(v >> 8));
        out_.push_back(static_cast<uint8_t>(v));
    }
    void u32(uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<uint8_t>(v >> s));
    }
    void u64(uint64_t v) {
        for (int s = 56; s >= 0; s -= 8) out_.push_back(static_cast<uint8_t>(v >> s));
    }
    void bytes(std::span<const uint8_t> data) { out_.insert(out_.end(), data.begin(), data.end()); }
    void sized_bytes(std::span<const uint8_t> data) {
        if (data.size() > 0xffff) throw std::invalid_argument("wire::Writer: field too long");
        u16(static_cast<uint16_t>(data.size()));
        bytes(data);
    }

    const std::vector<uint8_t>& data() const { return out_; }
    std::vector<uint8_t> take() { return std::move(out_); }

private:
    std::vector<uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        const auto b = take(2);
        return static_cast<uint16_t>((b[0] << 8) | b[1]);
    }
    uint32_t u32() {
        const auto b = take(4);
        return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
               (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
    }
    uint64_t u64() {
        uint64_t v = 0;
        for (const uint8_t b : take(8)) v = (v << 8) | b;
        return v;
    }
    std::vector<uint8_t> bytes(std::size_t n) {
        const auto s = take(n);
        return {s.begin(), s.end()};
    }
    std::vector<uint8_t> sized_bytes() { return bytes(u16()); }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return remaining() == 0; }

private:
    std::span<const uint8_t> take(std::size_t n) {
        if (remaining() < n) throw std::out_of_range("wire::Reader: truncated input");
        const auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::span<const uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace physec::wire
