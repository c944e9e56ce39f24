#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "physec/aes.hpp"

namespace physec::crypto {

// AES-128 CMAC per NIST SP 800-38B / RFC 4493.
namespace cmac_detail {

// Doubling in GF(2^128): left shift, conditional XOR with Rb = 0x87.
inline std::array<uint8_t, 16> dbl(const std::array<uint8_t, 16>& in) {
    std::array<uint8_t, 16> out{};
    uint8_t carry = 0;
    for (int i = 15; i >= 0; --i) {
        const auto idx = static_cast<std::size_t>(i);
        out[idx] = static_cast<uint8_t>((in[idx] << 1) | carry);
        carry = in[idx] >> 7;
    }
    if (carry) out[15] ^= 0x87;
    return out;
}

} // namespace cmac_detail

inline std::array<uint8_t, 16> cmac(const Aes128::Key& key, std::span<const uint8_t> msg) {
    using Block = Aes128::Block;
    const Aes128 cipher(key);

    const Block l = cipher.encrypt_block(Block{});
    const Block k1 = cmac_detail::dbl(l);
    const Block k2 = cmac_detail::dbl(k1);

    const std::size_t n = msg.size();
    const std::size_t nblocks = (n == 0) ? 1 : (n + 15) / 16;
    const bool last_complete = (n > 0) && (n % 16 == 0);

    Block x{};
    for (std::size_t b = 0; b + 1 < nblocks; ++b) {
        for (std::size_t i = 0; i < 16; ++i) x[i] ^= msg[16 * b + i];
        x = cipher.encrypt_block(x);
    }

    Block last{};
    const std::size_t off = 16 * (nblocks - 1);
    if (last_complete) {
        for (std::size_t i = 0; i < 16; ++i) last[i] = static_cast<uint8_t>(msg[off + i] ^ k1[i]);
    } else {
        const std::size_t rem = n - off;
        for (std::size_t i = 0; i < rem; ++i) last[i] = msg[off + i];
        last[rem] = 0x80;
        for (std::size_t i = 0; i < 16; ++i) last[i] ^= k2[i];
    }
    for (std::size_t i = 0; i < 16; ++i) x[i] ^= last[i];
    return cipher.encrypt_block(x);
}

// Truncation keeps the most significant bytes (SP 800-38B Tlen convention).
inline std::array<uint8_t, 8> cmac64(const Aes128::Key& key, std::span<const uint8_t> msg) {
    const auto full = cmac(key, msg);
    std::array<uint8_t, 8> out{};
    for (std::size_t i = 0; i < 8; ++i) out[i] = full[i];
    return out;
}

// Constant-time tag comparison.
inline bool tags_equal(std::span<const uint8_t> a, std::span<const uint8_t> b) {
    if (a.size() != b.size()) return false;
    uint8_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<uint8_t>(a[i] ^ b[i]);
    return diff == 0;
}

} // namespace physec::crypto
