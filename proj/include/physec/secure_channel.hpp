#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "physec/bitvec.hpp"
#include "physec/cmac.hpp"
#include "physec/errors.hpp"
#include "physec/hash.hpp"
#include "physec/skg.hpp"

namespace physec::secure_channel {

inline constexpr int block_bits = 128;
inline constexpr int tag_bits = 64;

// Message overhead of zero-padding to 128-bit blocks plus an l-bit tag:
// (ceil(n/128)*128 + l)/n - 1, evaluated as (padded + l - n)/n so the
// numerator stays integral.
inline double moh(long n_bits, long l_bits) {
    if (n_bits < 1) throw std::invalid_argument("moh: payload must be at least one bit");
    if (l_bits < 0) throw std::invalid_argument("moh: negative tag size");
    const long padded = (n_bits + block_bits - 1) / block_bits * block_bits;
    return static_cast<double>(padded + l_bits - n_bits) / static_cast<double>(n_bits);
}

struct OverheadPoint {
    long n_bits = 0;
    long l_bits = 0;
    double moh = 0.0;
};

inline std::vector<OverheadPoint> overhead_sweep(long l_bits, long n_min, long n_max, long step) {
    if (n_min < 1 || n_max < n_min || step < 1)
        throw std::invalid_argument("overhead_sweep: bad range");
    std::vector<OverheadPoint> out;
    for (long n = n_min; n <= n_max; n += step) out.push_back({n, l_bits, moh(n, l_bits)});
    return out;
}

struct SessionKeys {
    std::array<uint8_t, 16> enc_key{};
    std::array<uint8_t, 16> mac_key{};
    uint8_t key_epoch = 0;
};

// Key derivation by labeled hashing; deterministic in the material alone so
// re-deriving from the same SKG output is idempotent.
inline SessionKeys derive_session_keys(const BitVec& material, uint8_t epoch) {
    if (material.size() < 128) throw std::invalid_argument("derive_session_keys: material < 128 bits");
    const auto packed = material.packed();
    const auto len = be64(material.size());
    const Digest256 enc = sha256({as_bytes("physec:enc"), std::span<const uint8_t>(packed),
                                  std::span<const uint8_t>(len)});
    const Digest256 mac = sha256({as_bytes("physec:mac"), std::span<const uint8_t>(packed),
                                  std::span<const uint8_t>(len)});
    SessionKeys keys;
    keys.key_epoch = epoch;
    for (std::size_t i = 0; i < 16; ++i) {
        keys.enc_key[i] = enc[i];
        keys.mac_key[i] = mac[i];
    }
    return keys;
}

inline SessionKeys rekey(const SessionKeys& keys, const skg::SecretKey& material) {
    return derive_session_keys(material.bits, static_cast<uint8_t>(keys.key_epoch + 1));
}

// Wire format, big-endian:
// [source_id:16][dest_id:16][key_epoch:8][counter:32][payload_len_bits:16]
// [ciphertext: ceil(N/128)*128][tag:64]
struct Frame {
    uint16_t source_id = 0;
    uint16_t dest_id = 0;
    uint8_t key_epoch = 0;
    uint32_t counter = 0;
    uint16_t payload_len_bits = 0;
    std::vector<uint8_t> ciphertext;
    std::array<uint8_t, 8> tag{};

    static constexpr std::size_t header_bytes = 11;

    std::array<uint8_t, header_bytes> header() const {
        std::array<uint8_t, header_bytes> h{};
        h[0] = static_cast<uint8_t>(source_id >> 8);
        h[1] = static_cast<uint8_t>(source_id);
        h[2] = static_cast<uint8_t>(dest_id >> 8);
        h[3] = static_cast<uint8_t>(dest_id);
        h[4] = key_epoch;
        h[5] = static_cast<uint8_t>(counter >> 24);
        h[6] = static_cast<uint8_t>(counter >> 16);
        h[7] = static_cast<uint8_t>(counter >> 8);
        h[8] = static_cast<uint8_t>(counter);
        h[9] = static_cast<uint8_t>(payload_len_bits >> 8);
        h[10] = static_cast<uint8_t>(payload_len_bits);
        return h;
    }

    std::vector<uint8_t> serialize() const {
        const auto h = header();
        std::vector<uint8_t> out;
        out.reserve(h.size() + ciphertext.size() + tag.size());
        out.insert(out.end(), h.begin(), h.end());
        out.insert(out.end(), ciphertext.begin(), ciphertext.end());
        out.insert(out.end(), tag.begin(), tag.end());
        return out;
    }

    static Frame parse(std::span<const uint8_t> data) {
        if (data.size() < header_bytes + 8)
            throw MalformedFrameError("Frame::parse: truncated frame");
        Frame f;
        f.source_id = static_cast<uint16_t>((data[0] << 8) | data[1]);
        f.dest_id = static_cast<uint16_t>((data[2] << 8) | data[3]);
        f.key_epoch = data[4];
        f.counter = (static_cast<uint32_t>(data[5]) << 24) | (static_cast<uint32_t>(data[6]) << 16) |
                    (static_cast<uint32_t>(data[7]) << 8) | static_cast<uint32_t>(data[8]);
        f.payload_len_bits = static_cast<uint16_t>((data[9] << 8) | data[10]);
        if (f.payload_len_bits == 0) throw MalformedFrameError("Frame::parse: empty payload");
        const std::size_t ct_bytes = expected_ciphertext_bytes(f.payload_len_bits);
        if (data.size() != header_bytes + ct_bytes + 8)
            throw MalformedFrameError("Frame::parse: length inconsistent with payload_len_bits");
        f.ciphertext.assign(data.begin() + header_bytes,
                            data.begin() + static_cast<std::ptrdiff_t>(header_bytes + ct_bytes));
        std::copy(data.end() - 8, data.end(), f.tag.begin());
        return f;
    }

    static std::size_t expected_ciphertext_bytes(uint16_t payload_len_bits) {
        return ((static_cast<std::size_t>(payload_len_bits) + block_bits - 1) / block_bits) *
               (block_bits / 8);
    }
};

namespace detail {

// CTR block j: source_id(16) | epoch(8) | zero(8) | counter(32) |
// block_index(32) | zero(32). Uniqueness within an epoch rests on the
// counter monotonicity the session enforces.
inline crypto::Aes128::Block ctr_block(uint16_t source_id, uint8_t epoch, uint32_t counter,
                                       uint32_t block_index) {
    crypto::Aes128::Block b{};
    b[0] = static_cast<uint8_t>(source_id >> 8);
    b[1] = static_cast<uint8_t>(source_id);
    b[2] = epoch;
    b[3] = 0;
    b[4] = static_cast<uint8_t>(counter >> 24);
    b[5] = static_cast<uint8_t>(counter >> 16);
    b[6] = static_cast<uint8_t>(counter >> 8);
    b[7] = static_cast<uint8_t>(counter);
    b[8] = static_cast<uint8_t>(block_index >> 24);
    b[9] = static_cast<uint8_t>(block_index >> 16);
    b[10] = static_cast<uint8_t>(block_index >> 8);
    b[11] = static_cast<uint8_t>(block_index);
    return b;
}

inline std::vector<uint8_t> ctr_xor(const SessionKeys& keys, uint16_t source_id, uint32_t counter,
                                    std::span<const uint8_t> data) {
    const crypto::Aes128 cipher(keys.enc_key);
    std::vector<uint8_t> out(data.begin(), data.end());
    for (std::size_t off = 0; off < out.size(); off += 16) {
        const auto ks =
            cipher.encrypt_block(ctr_block(source_id, keys.key_epoch, counter,
                                           static_cast<uint32_t>(off / 16)));
        for (std::size_t i = 0; i < 16 && off + i < out.size(); ++i) out[off + i] ^= ks[i];
    }
    return out;
}

} // namespace detail

// Encrypt-then-MAC: zero-pad to a block multiple, CTR-encrypt, tag header
// plus ciphertext (header coverage blocks address spoofing).
inline Frame make_frame(const SessionKeys& keys, uint16_t source_id, uint16_t dest_id,
                        uint32_t counter, const BitVec& payload) {
    if (payload.empty()) throw std::invalid_argument("make_frame: empty payload");
    if (payload.size() > 0xffff) throw std::invalid_argument("make_frame: payload exceeds 16-bit length");
    Frame f;
    f.source_id = source_id;
    f.dest_id = dest_id;
    f.key_epoch = keys.key_epoch;
    f.counter = counter;
    f.payload_len_bits = static_cast<uint16_t>(payload.size());

    std::vector<uint8_t> padded = payload.packed();
    padded.resize(Frame::expected_ciphertext_bytes(f.payload_len_bits), 0);
    f.ciphertext = detail::ctr_xor(keys, source_id, counter, padded);

    const auto h = f.header();
    std::vector<uint8_t> mac_input(h.begin(), h.end());
    mac_input.insert(mac_input.end(), f.ciphertext.begin(), f.ciphertext.end());
    f.tag = crypto::cmac64(keys.mac_key, mac_input);
    return f;
}

// Tag verification precedes everything else; decryption runs last.
inline BitVec open_frame(const SessionKeys& keys, const Frame& f) {
    if (f.payload_len_bits == 0) throw MalformedFrameError("open_frame: empty payload");
    if (f.ciphertext.size() != Frame::expected_ciphertext_bytes(f.payload_len_bits))
        throw MalformedFrameError("open_frame: ciphertext length inconsistent");
    const auto h = f.header();
    std::vector<uint8_t> mac_input(h.begin(), h.end());
    mac_input.insert(mac_input.end(), f.ciphertext.begin(), f.ciphertext.end());
    const auto expected = crypto::cmac64(keys.mac_key, mac_input);
    if (!crypto::tags_equal(expected, f.tag))
        throw TagMismatchError("open_frame: MAC tag mismatch");
    const auto plain = detail::ctr_xor(keys, f.source_id, f.counter, f.ciphertext);
    return BitVec::from_bytes(plain, f.payload_len_bits);
}

// Sliding acceptance window over received counters.
class ReplayWindow {
public:
    explicit ReplayWindow(int size = 64) : size_(size) {
        if (size < 1 || size > 64) throw std::invalid_argument("ReplayWindow: size outside [1,64]");
    }

    // Throws ReplayError for duplicates and for counters older than the
    // window; otherwise records the counter.
    void check_and_mark(uint32_t counter) {
        if (!any_) {
            any_ = true;
            highest_ = counter;
            mask_ = 1;
            return;
        }
        if (counter > highest_) {
            const uint64_t shift = counter - highest_;
            mask_ = (shift >= 64) ? 0 : (mask_ << shift);
            mask_ |= 1;
            highest_ = counter;
            return;
        }
        const uint32_t age = highest_ - counter;
        if (age >= static_cast<uint32_t>(size_))
            throw ReplayError("ReplayWindow: counter older than window");
        if ((mask_ >> age) & 1) throw ReplayError("ReplayWindow: counter already accepted");
        mask_ |= (uint64_t{1} << age);
    }

private:
    int size_;
    bool any_ = false;
    uint32_t highest_ = 0;
    uint64_t mask_ = 0;
};

// One directional secure session: single writer for the send counter, one
// replay window on the receive side.
class SecureSession {
public:
    SecureSession(SessionKeys keys, uint16_t local_id, uint16_t peer_id, int replay_window = 64)
        : keys_(keys), local_id_(local_id), peer_id_(peer_id), window_(replay_window),
          window_size_(replay_window) {}

    const SessionKeys& keys() const { return keys_; }
    uint32_t next_counter() const { return next_counter_; }

    Frame send(const BitVec& payload) {
        if (next_counter_ == 0xffffffffu)
            throw CounterExhaustedError("SecureSession: counter space exhausted, rekey required");
        return make_frame(keys_, local_id_, peer_id_, next_counter_++, payload);
    }

    // Explicit-counter variant; reusing a spent counter is an error.
    Frame send_with_counter(const BitVec& payload, uint32_t counter) {
        if (counter < next_counter_)
            throw CounterReuseError("SecureSession: counter already used in this epoch");
        if (counter == 0xffffffffu)
            throw CounterExhaustedError("SecureSession: counter space exhausted, rekey required");
        next_counter_ = counter + 1;
        return make_frame(keys_, local_id_, peer_id_, counter, payload);
    }

    // Receive order: epoch (selects the key), tag, replay window, decrypt.
    BitVec receive(const Frame& f) {
        if (f.key_epoch != keys_.key_epoch)
            throw ReplayError("SecureSession: frame from a different key epoch");
        if (f.dest_id != local_id_ || f.source_id != peer_id_)
            throw MalformedFrameError("SecureSession: frame not addressed to this session");
        const auto h = f.header();
        std::vector<uint8_t> mac_input(h.begin(), h.end());
        mac_input.insert(mac_input.end(), f.ciphertext.begin(), f.ciphertext.end());
        const auto expected = crypto::cmac64(keys_.mac_key, mac_input);
        if (!crypto::tags_equal(expected, f.tag))
            throw TagMismatchError("SecureSession: MAC tag mismatch");
        window_.check_and_mark(f.counter);
        const auto plain = detail::ctr_xor(keys_, f.source_id, f.counter, f.ciphertext);
        return BitVec::from_bytes(plain, f.payload_len_bits);
    }

    void rekey_from(const skg::SecretKey& material) {
        keys_ = secure_channel::rekey(keys_, material);
        next_counter_ = 0;
        window_ = ReplayWindow(window_size_);
    }

private:
    SessionKeys keys_;
    uint16_t local_id_;
    uint16_t peer_id_;
    uint32_t next_counter_ = 0;
    ReplayWindow window_;
    int window_size_;
};

} // namespace physec::secure_channel
