#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <sodium.h>

#include "physec/bitvec.hpp"

namespace physec {

inline void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}

using Digest256 = std::array<uint8_t, 32>;

inline Digest256 sha256(std::span<const uint8_t> data) {
    ensure_sodium();
    Digest256 out{};
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

inline Digest256 sha256(std::initializer_list<std::span<const uint8_t>> parts) {
    ensure_sodium();
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    for (const auto& p : parts) crypto_hash_sha256_update(&st, p.data(), p.size());
    Digest256 out{};
    crypto_hash_sha256_final(&st, out.data());
    return out;
}

inline std::span<const uint8_t> as_bytes(std::string_view s) {
    return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

inline std::array<uint8_t, 8> be64(uint64_t v) {
    std::array<uint8_t, 8> out{};
    for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(i)] = static_cast<uint8_t>(v >> (56 - 8 * i));
    return out;
}

inline std::string hex(std::span<const uint8_t> data) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(data.size() * 2);
    for (uint8_t b : data) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

// Domain-separated hash of a bit string. The bit length is appended so keys
// differing only in trailing zero padding hash differently.
inline Digest256 hash_bits(uint8_t domain, const BitVec& bits) {
    const std::vector<uint8_t> packed = bits.packed();
    const std::array<uint8_t, 8> len = be64(bits.size());
    const std::array<uint8_t, 1> dom{domain};
    return sha256({std::span<const uint8_t>(dom), std::span<const uint8_t>(packed),
                   std::span<const uint8_t>(len)});
}

// 32-bit agreement verifier over a (pre-amplification) key; exchanged in the
// clear and not counted as syndrome leakage.
inline uint32_t key_verifier(const BitVec& bits) {
    const Digest256 d = hash_bits(0x01, bits);
    return (static_cast<uint32_t>(d[0]) << 24) | (static_cast<uint32_t>(d[1]) << 16) |
           (static_cast<uint32_t>(d[2]) << 8) | static_cast<uint32_t>(d[3]);
}

inline BitVec digest_bits(const Digest256& d, std::size_t nbits) {
    if (nbits > 256) throw std::invalid_argument("digest_bits: at most 256 bits available");
    return BitVec::from_bytes(std::vector<uint8_t>(d.begin(), d.end()), nbits);
}

} // namespace physec
