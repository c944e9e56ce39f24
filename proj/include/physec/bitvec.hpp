#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace physec {

// Sequence of bits with MSB-first byte packing. Stored unpacked (one byte
// per bit) since key material here is at most a few tens of kilobits.
class BitVec {
public:
    BitVec() = default;

    explicit BitVec(std::size_t n, uint8_t fill = 0) : bits_(n, check_bit(fill)) {}

    static BitVec from_string(const std::string& s) {
        BitVec v;
        v.bits_.reserve(s.size());
        for (char c : s) {
            if (c != '0' && c != '1') throw std::invalid_argument("BitVec: expected '0'/'1'");
            v.bits_.push_back(static_cast<uint8_t>(c - '0'));
        }
        return v;
    }

    // Unpack bytes MSB-first; nbits may cut into the final byte.
    static BitVec from_bytes(const std::vector<uint8_t>& bytes, std::size_t nbits) {
        if (nbits > bytes.size() * 8) throw std::invalid_argument("BitVec: nbits exceeds data");
        BitVec v;
        v.bits_.reserve(nbits);
        for (std::size_t i = 0; i < nbits; ++i)
            v.bits_.push_back((bytes[i / 8] >> (7 - i % 8)) & 1u);
        return v;
    }

    std::size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }

    uint8_t operator[](std::size_t i) const { return bits_[i]; }
    void set(std::size_t i, uint8_t b) { bits_.at(i) = check_bit(b); }
    void flip(std::size_t i) { bits_.at(i) ^= 1u; }

    void push_back(uint8_t b) { bits_.push_back(check_bit(b)); }

    void append(const BitVec& other) {
        bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
    }

    BitVec slice(std::size_t begin, std::size_t count) const {
        if (begin + count > bits_.size()) throw std::out_of_range("BitVec::slice");
        BitVec v;
        v.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(begin),
                       bits_.begin() + static_cast<std::ptrdiff_t>(begin + count));
        return v;
    }

    void truncate(std::size_t n) {
        if (n < bits_.size()) bits_.resize(n);
    }

    // MSB-first packing; trailing bits of the last byte are zero.
    std::vector<uint8_t> packed() const {
        std::vector<uint8_t> out((bits_.size() + 7) / 8, 0);
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i]) out[i / 8] |= static_cast<uint8_t>(0x80u >> (i % 8));
        return out;
    }

    std::string to_string() const {
        std::string s;
        s.reserve(bits_.size());
        for (uint8_t b : bits_) s.push_back(static_cast<char>('0' + b));
        return s;
    }

    std::size_t count_ones() const {
        std::size_t n = 0;
        for (uint8_t b : bits_) n += b;
        return n;
    }

    BitVec operator^(const BitVec& other) const {
        if (size() != other.size()) throw std::invalid_argument("BitVec: xor length mismatch");
        BitVec v(*this);
        for (std::size_t i = 0; i < v.bits_.size(); ++i) v.bits_[i] ^= other.bits_[i];
        return v;
    }

    BitVec operator~() const {
        BitVec v(*this);
        for (auto& b : v.bits_) b ^= 1u;
        return v;
    }

    bool operator==(const BitVec& other) const { return bits_ == other.bits_; }
    bool operator!=(const BitVec& other) const { return bits_ != other.bits_; }

private:
    static uint8_t check_bit(uint8_t b) {
        if (b > 1) throw std::invalid_argument("BitVec: bit must be 0 or 1");
        return b;
    }

    std::vector<uint8_t> bits_;
};

inline std::size_t hamming_distance(const BitVec& a, const BitVec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("hamming_distance: length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] ^ b[i];
    return d;
}

// Fraction of agreeing bit positions.
inline double bit_agreement(const BitVec& a, const BitVec& b) {
    if (a.empty()) throw std::invalid_argument("bit_agreement: empty input");
    return 1.0 - static_cast<double>(hamming_distance(a, b)) / static_cast<double>(a.size());
}

} // namespace physec
