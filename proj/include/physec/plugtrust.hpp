#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <sodium.h>

#include "physec/errors.hpp"
#include "physec/hash.hpp"
#include "physec/rng.hpp"
#include "physec/secure_channel.hpp"
#include "physec/skg.hpp"
#include "physec/wire.hpp"

namespace physec::plugtrust {

using Bytes = std::vector<uint8_t>;

// --- pluggable crypto -------------------------------------------------------
//
// The protocol logic is written against an abstract signature scheme and a
// commutative key-agreement group; SodiumSuite (Ed25519 + X25519) is the
// default instantiation. Key material is derived from the caller's seeded
// RNG so every run is reproducible.
struct SodiumSuite {
    static constexpr const char* name = "ed25519/x25519";

    struct SigKeyPair {
        Bytes public_key;
        Bytes secret_key;
    };

    static SigKeyPair sig_keypair(Rng& rng) {
        ensure_sodium();
        const auto seed = rng.byte_array<crypto_sign_SEEDBYTES>();
        SigKeyPair kp;
        kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
        kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
        crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
        return kp;
    }

    static Bytes sign(const Bytes& secret_key, std::span<const uint8_t> msg) {
        ensure_sodium();
        Bytes sig(crypto_sign_BYTES);
        crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), secret_key.data());
        return sig;
    }

    static bool verify(const Bytes& public_key, std::span<const uint8_t> msg,
                       std::span<const uint8_t> sig) {
        ensure_sodium();
        if (public_key.size() != crypto_sign_PUBLICKEYBYTES || sig.size() != crypto_sign_BYTES)
            return false;
        return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(),
                                           public_key.data()) == 0;
    }

    struct KaKeyPair {
        Bytes public_share;
        Bytes secret;
    };

    static KaKeyPair ka_keypair(Rng& rng) {
        ensure_sodium();
        KaKeyPair kp;
        const auto secret = rng.byte_array<crypto_scalarmult_SCALARBYTES>();
        kp.secret.assign(secret.begin(), secret.end());
        kp.public_share.resize(crypto_scalarmult_BYTES);
        crypto_scalarmult_base(kp.public_share.data(), kp.secret.data());
        return kp;
    }

    // Throws on a degenerate (small-order) peer share.
    static Bytes ka_shared(const Bytes& secret, const Bytes& peer_share) {
        ensure_sodium();
        if (peer_share.size() != crypto_scalarmult_BYTES)
            throw std::invalid_argument("ka_shared: bad share size");
        Bytes out(crypto_scalarmult_BYTES);
        if (crypto_scalarmult(out.data(), secret.data(), peer_share.data()) != 0)
            throw Error("ka_shared: degenerate key-agreement share");
        return out;
    }
};

// --- certificates -------------------------------------------------------------

enum class CertLevel : uint8_t { device = 0, local = 1, global = 2 };

inline const char* to_string(CertLevel l) {
    switch (l) {
        case CertLevel::device: return "device";
        case CertLevel::local: return "local";
        default: return "global";
    }
}

enum class CertFailure {
    bad_signature,
    expired,
    unknown_root,
    level_order,
    missing_local,
    wrong_operator,
};

inline const char* to_string(CertFailure f) {
    switch (f) {
        case CertFailure::bad_signature: return "bad_signature";
        case CertFailure::expired: return "expired";
        case CertFailure::unknown_root: return "unknown_root";
        case CertFailure::level_order: return "level_order";
        case CertFailure::missing_local: return "missing_local";
        default: return "wrong_operator";
    }
}

class CertificateError : public Error {
public:
    CertificateError(CertFailure reason, const std::string& what)
        : Error(what), reason(reason) {}
    CertFailure reason;
};

// TLV layout (big-endian):
// [level:8][subject_id:32][issuer_id:32][not_before:64][not_after:64]
// [pubkey_len:16][pubkey][sig_len:16][sig]
struct Certificate {
    CertLevel level = CertLevel::device;
    uint32_t subject_id = 0;
    uint32_t issuer_id = 0;
    uint64_t not_before = 0;
    uint64_t not_after = 0;
    Bytes public_key;
    Bytes signature; // by the issuer, over all preceding fields

    Bytes tbs_bytes() const {
        wire::Writer w;
        w.u8(static_cast<uint8_t>(level));
        w.u32(subject_id);
        w.u32(issuer_id);
        w.u64(not_before);
        w.u64(not_after);
        w.sized_bytes(public_key);
        return w.take();
    }

    Bytes serialize() const {
        wire::Writer w;
        w.bytes(tbs_bytes());
        w.sized_bytes(signature);
        return w.take();
    }

    static Certificate parse(wire::Reader& r) {
        Certificate c;
        const uint8_t lvl = r.u8();
        if (lvl > 2) throw std::invalid_argument("Certificate::parse: bad level");
        c.level = static_cast<CertLevel>(lvl);
        c.subject_id = r.u32();
        c.issuer_id = r.u32();
        c.not_before = r.u64();
        c.not_after = r.u64();
        c.public_key = r.sized_bytes();
        c.signature = r.sized_bytes();
        return c;
    }

    static Certificate parse(std::span<const uint8_t> data) {
        wire::Reader r(data);
        Certificate c = parse(r);
        if (!r.done()) throw std::invalid_argument("Certificate::parse: trailing bytes");
        return c;
    }

    bool operator==(const Certificate& other) const { return serialize() == other.serialize(); }
};

// Ordered device -> local... -> global root.
using CertChain = std::vector<Certificate>;

struct TrustStore {
    std::vector<Certificate> roots;     // trusted global CAs
    std::set<uint32_t> local_ca_ids;    // operators this verifier accepts

    bool trusts_root(const Certificate& c) const {
        return std::any_of(roots.begin(), roots.end(),
                           [&](const Certificate& r) { return r == c; });
    }
};

struct VerifiedIdentity {
    uint32_t device_id = 0;
    Certificate device_certificate;
};

// Chain verification in the initial-authentication order: structure, then
// the global root, then each level down to the device certificate.
template <typename Suite = SodiumSuite>
VerifiedIdentity verify_chain(const CertChain& chain, const TrustStore& store, uint64_t now) {
    if (chain.empty()) throw std::invalid_argument("verify_chain: empty chain");
    if (chain.front().level != CertLevel::device)
        throw CertificateError(CertFailure::level_order, "verify_chain: chain must start at a device cert");
    if (chain.back().level != CertLevel::global)
        throw CertificateError(CertFailure::level_order, "verify_chain: chain must end at a global root");
    if (chain.size() < 3)
        throw CertificateError(CertFailure::missing_local, "verify_chain: no local certificate in chain");
    for (std::size_t i = 1; i + 1 < chain.size(); ++i)
        if (chain[i].level != CertLevel::local)
            throw CertificateError(CertFailure::level_order, "verify_chain: levels out of order");

    const Certificate& root = chain.back();
    if (!store.trusts_root(root))
        throw CertificateError(CertFailure::unknown_root, "verify_chain: root not in trust store");
    if (root.issuer_id != root.subject_id ||
        !Suite::verify(root.public_key, root.tbs_bytes(), root.signature))
        throw CertificateError(CertFailure::bad_signature, "verify_chain: root self-signature invalid");
    if (now < root.not_before || now > root.not_after)
        throw CertificateError(CertFailure::expired, "verify_chain: root certificate outside validity");

    for (std::size_t i = chain.size() - 1; i-- > 0;) {
        const Certificate& cert = chain[i];
        const Certificate& issuer = chain[i + 1];
        if (cert.issuer_id != issuer.subject_id)
            throw CertificateError(CertFailure::level_order,
                                   "verify_chain: issuer/subject linkage broken");
        if (!Suite::verify(issuer.public_key, cert.tbs_bytes(), cert.signature))
            throw CertificateError(CertFailure::bad_signature,
                                   std::string("verify_chain: bad signature on ") +
                                       to_string(cert.level) + " certificate");
        if (now < cert.not_before || now > cert.not_after)
            throw CertificateError(CertFailure::expired,
                                   std::string("verify_chain: ") + to_string(cert.level) +
                                       " certificate outside validity");
        if (cert.level == CertLevel::local && !store.local_ca_ids.count(cert.subject_id))
            throw CertificateError(CertFailure::wrong_operator,
                                   "verify_chain: local CA not accepted by this operator");
    }
    return {chain.front().subject_id, chain.front()};
}

// --- credential fabrication (CA hierarchy) ------------------------------------

template <typename Suite = SodiumSuite>
struct CaAuthority {
    Certificate cert;
    typename Suite::SigKeyPair keys;
};

template <typename Suite = SodiumSuite>
struct DeviceCredentials {
    CertChain chain; // device, local, global
    typename Suite::SigKeyPair keys;

    uint32_t device_id() const { return chain.front().subject_id; }
};

struct Validity {
    uint64_t not_before = 0;
    uint64_t not_after = UINT64_MAX;
};

template <typename Suite = SodiumSuite>
CaAuthority<Suite> make_global_ca(uint32_t id, Validity v, Rng& rng) {
    CaAuthority<Suite> ca;
    ca.keys = Suite::sig_keypair(rng);
    ca.cert.level = CertLevel::global;
    ca.cert.subject_id = id;
    ca.cert.issuer_id = id;
    ca.cert.not_before = v.not_before;
    ca.cert.not_after = v.not_after;
    ca.cert.public_key = ca.keys.public_key;
    ca.cert.signature = Suite::sign(ca.keys.secret_key, ca.cert.tbs_bytes());
    return ca;
}

template <typename Suite = SodiumSuite>
CaAuthority<Suite> make_local_ca(const CaAuthority<Suite>& global, uint32_t id, Validity v,
                                 Rng& rng) {
    CaAuthority<Suite> ca;
    ca.keys = Suite::sig_keypair(rng);
    ca.cert.level = CertLevel::local;
    ca.cert.subject_id = id;
    ca.cert.issuer_id = global.cert.subject_id;
    ca.cert.not_before = v.not_before;
    ca.cert.not_after = v.not_after;
    ca.cert.public_key = ca.keys.public_key;
    ca.cert.signature = Suite::sign(global.keys.secret_key, ca.cert.tbs_bytes());
    return ca;
}

template <typename Suite = SodiumSuite>
DeviceCredentials<Suite> make_device(const CaAuthority<Suite>& global,
                                     const CaAuthority<Suite>& local, uint32_t id, Validity v,
                                     Rng& rng) {
    DeviceCredentials<Suite> dev;
    dev.keys = Suite::sig_keypair(rng);
    Certificate c;
    c.level = CertLevel::device;
    c.subject_id = id;
    c.issuer_id = local.cert.subject_id;
    c.not_before = v.not_before;
    c.not_after = v.not_after;
    c.public_key = dev.keys.public_key;
    c.signature = Suite::sign(local.keys.secret_key, c.tbs_bytes());
    dev.chain = {c, local.cert, global.cert};
    return dev;
}

// --- handshake state machine ----------------------------------------------------

enum class Phase {
    idle,
    global_verified,
    local_verified,
    device_certs_exchanged,
    challenge_sent,
    authenticated,
    keys_established,
    failed,
};

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::idle: return "idle";
        case Phase::global_verified: return "global_verified";
        case Phase::local_verified: return "local_verified";
        case Phase::device_certs_exchanged: return "device_certs_exchanged";
        case Phase::challenge_sent: return "challenge_sent";
        case Phase::authenticated: return "authenticated";
        case Phase::keys_established: return "keys_established";
        default: return "failed";
    }
}

enum class FailReason {
    none,
    bad_signature,
    expired_cert,
    unknown_root,
    level_order,
    missing_local,
    wrong_operator,
    nonce_replay,
    transcript_mismatch,
    bad_confirmation,
    out_of_order,
    malformed,
    timeout,
    degenerate_share,
};

inline const char* to_string(FailReason r) {
    switch (r) {
        case FailReason::none: return "none";
        case FailReason::bad_signature: return "bad_signature";
        case FailReason::expired_cert: return "expired_cert";
        case FailReason::unknown_root: return "unknown_root";
        case FailReason::level_order: return "level_order";
        case FailReason::missing_local: return "missing_local";
        case FailReason::wrong_operator: return "wrong_operator";
        case FailReason::nonce_replay: return "nonce_replay";
        case FailReason::transcript_mismatch: return "transcript_mismatch";
        case FailReason::bad_confirmation: return "bad_confirmation";
        case FailReason::out_of_order: return "out_of_order";
        case FailReason::malformed: return "malformed";
        case FailReason::timeout: return "timeout";
        default: return "degenerate_share";
    }
}

inline FailReason fail_reason_of(CertFailure f) {
    switch (f) {
        case CertFailure::bad_signature: return FailReason::bad_signature;
        case CertFailure::expired: return FailReason::expired_cert;
        case CertFailure::unknown_root: return FailReason::unknown_root;
        case CertFailure::level_order: return FailReason::level_order;
        case CertFailure::missing_local: return FailReason::missing_local;
        default: return FailReason::wrong_operator;
    }
}

enum class Role { ed, ap }; // ED initiates, AP responds

// Message types: [msg_type:8][session_id:32][body]
inline constexpr uint8_t msg_chain_offer = 0x01;
inline constexpr uint8_t msg_hs_client_hello = 0x10; // nonce_ED
inline constexpr uint8_t msg_hs_server_share = 0x11; // nonce_AP, share, signature
inline constexpr uint8_t msg_hs_client_share = 0x12; // share, signature
inline constexpr uint8_t msg_hs_confirm = 0x13;      // confirmation MAC

using Nonce = std::array<uint8_t, 16>;

// One party of the Plug&Trust protocol: the one-time certificate exchange
// followed by per-session mutual authentication and key agreement. Pure state
// machine over opaque byte messages; transports and schedulers live outside.
template <typename Suite = SodiumSuite>
class Endpoint {
public:
    Endpoint(Role role, DeviceCredentials<Suite> creds, TrustStore store, uint64_t seed,
             uint64_t now = 1)
        : role_(role), creds_(std::move(creds)), store_(std::move(store)), rng_(seed), now_(now) {}

    Phase phase() const { return phase_; }
    FailReason fail_reason() const { return fail_; }
    bool paired() const { return peer_cert_.has_value(); }
    int signature_verifications() const { return sig_verifications_; }
    const std::optional<secure_channel::SessionKeys>& session_keys() const { return keys_; }
    const Certificate* peer_certificate() const {
        return peer_cert_ ? &*peer_cert_ : nullptr;
    }

    // ED entry point for the initial authentication phase.
    Bytes start_initial_auth(uint32_t session_id) {
        require(role_ == Role::ed, "start_initial_auth: ED initiates");
        session_id_ = session_id;
        return chain_offer_message();
    }

    // ED entry point for the URLLC session handshake (msg 1: fresh nonce).
    Bytes start_session(uint32_t session_id) {
        require(role_ == Role::ed, "start_session: ED initiates");
        if (!paired()) throw std::logic_error("start_session: initial authentication not completed");
        session_id_ = session_id;
        my_nonce_ = fresh_nonce();
        wire::Writer w;
        w.u8(msg_hs_client_hello);
        w.u32(session_id_);
        w.bytes(my_nonce_);
        const Bytes msg = w.take();
        transcript_ = sha256(std::span<const uint8_t>(msg));
        phase_ = Phase::challenge_sent;
        return msg;
    }

    // Feeds one incoming message; returns any messages to send back. A failed
    // endpoint ignores all further input.
    std::vector<Bytes> on_message(const Bytes& msg) {
        if (phase_ == Phase::failed) return {};
        try {
            return dispatch(msg);
        } catch (const CertificateError& e) {
            fail(fail_reason_of(e.reason));
        } catch (const std::out_of_range&) {
            fail(FailReason::malformed);
        } catch (const std::invalid_argument&) {
            fail(FailReason::malformed);
        } catch (const Error&) {
            fail(FailReason::degenerate_share);
        }
        return {};
    }

    void fail(FailReason r) {
        phase_ = Phase::failed;
        fail_ = r;
        keys_.reset();
    }

private:
    static void require(bool cond, const char* what) {
        if (!cond) throw std::logic_error(what);
    }

    Nonce fresh_nonce() { return rng_.byte_array<16>(); }

    Bytes chain_offer_message() const {
        wire::Writer w;
        w.u8(msg_chain_offer);
        w.u32(session_id_);
        w.u8(static_cast<uint8_t>(creds_.chain.size()));
        for (const auto& c : creds_.chain) w.sized_bytes(c.serialize());
        return w.data();
    }

    std::vector<Bytes> dispatch(const Bytes& msg) {
        wire::Reader r(msg);
        const uint8_t type = r.u8();
        const uint32_t sid = r.u32();
        // chain offers and client hellos announce their session id; every
        // later message must match the session in progress
        if (type == msg_chain_offer) return on_chain_offer(r, sid);
        if (type == msg_hs_client_hello) return on_client_hello(msg, r, sid);
        if (sid != session_id_) {
            fail(FailReason::out_of_order);
            return {};
        }
        switch (type) {
            case msg_hs_server_share: return on_server_share(msg, r);
            case msg_hs_client_share: return on_client_share(msg, r);
            case msg_hs_confirm: return on_confirm(r);
            default:
                fail(FailReason::malformed);
                return {};
        }
    }

    std::vector<Bytes> on_chain_offer(wire::Reader& r, uint32_t sid) {
        if (paired()) {
            fail(FailReason::out_of_order);
            return {};
        }
        session_id_ = sid;
        const std::size_t count = r.u8();
        CertChain chain;
        for (std::size_t i = 0; i < count; ++i) {
            const Bytes raw = r.sized_bytes();
            chain.push_back(Certificate::parse(raw));
        }
        if (!r.done()) {
            fail(FailReason::malformed);
            return {};
        }
        // Global level first, then local, then the device certificate; the
        // intermediate phases are observable checkpoints of that order.
        const VerifiedIdentity id = verify_chain<Suite>(chain, store_, now_);
        phase_ = Phase::global_verified;
        phase_ = Phase::local_verified;
        peer_cert_ = id.device_certificate;
        phase_ = Phase::device_certs_exchanged;
        if (role_ == Role::ap) return {chain_offer_message()};
        return {};
    }

    std::vector<Bytes> on_client_hello(const Bytes& raw, wire::Reader& r, uint32_t sid) {
        if (role_ != Role::ap || !paired() || phase_ == Phase::challenge_sent) {
            fail(FailReason::out_of_order);
            return {};
        }
        session_id_ = sid;
        Nonce peer;
        const Bytes nb = r.bytes(16);
        std::copy(nb.begin(), nb.end(), peer.begin());
        if (!r.done()) {
            fail(FailReason::malformed);
            return {};
        }
        if (!nonce_cache_.insert(peer).second) {
            fail(FailReason::nonce_replay);
            return {};
        }
        peer_nonce_ = peer;
        my_nonce_ = fresh_nonce();
        transcript_ = sha256(std::span<const uint8_t>(raw));

        ka_ = Suite::ka_keypair(rng_);
        const Bytes sig = Suite::sign(creds_.keys.secret_key,
                                      share_sig_payload("pt:ap-share", ka_.public_share));
        wire::Writer w;
        w.u8(msg_hs_server_share);
        w.u32(session_id_);
        w.bytes(my_nonce_);
        w.sized_bytes(ka_.public_share);
        w.sized_bytes(sig);
        const Bytes out = w.take();
        absorb_transcript(out);
        phase_ = Phase::challenge_sent;
        return {out};
    }

    std::vector<Bytes> on_server_share(const Bytes& raw, wire::Reader& r) {
        if (role_ != Role::ed || phase_ != Phase::challenge_sent) {
            fail(FailReason::out_of_order);
            return {};
        }
        Nonce peer;
        const Bytes nb = r.bytes(16);
        std::copy(nb.begin(), nb.end(), peer.begin());
        const Bytes share = r.sized_bytes();
        const Bytes sig = r.sized_bytes();
        if (!r.done()) {
            fail(FailReason::malformed);
            return {};
        }
        if (!nonce_cache_.insert(peer).second) {
            fail(FailReason::nonce_replay);
            return {};
        }
        peer_nonce_ = peer;
        // the peer's signature must cover our fresh nonce and this transcript
        if (!Suite::verify(peer_cert_->public_key, share_sig_payload("pt:ap-share", share), sig)) {
            fail(FailReason::bad_signature);
            return {};
        }
        ++sig_verifications_;
        absorb_transcript(raw);

        ka_ = Suite::ka_keypair(rng_);
        const Bytes my_sig = Suite::sign(creds_.keys.secret_key,
                                         share_sig_payload("pt:ed-share", ka_.public_share));
        wire::Writer w;
        w.u8(msg_hs_client_share);
        w.u32(session_id_);
        w.sized_bytes(ka_.public_share);
        w.sized_bytes(my_sig);
        const Bytes out = w.take();
        absorb_transcript(out);
        shared_secret_ = Suite::ka_shared(ka_.secret, share);
        phase_ = Phase::authenticated;
        derive_keys();
        return {out};
    }

    std::vector<Bytes> on_client_share(const Bytes& raw, wire::Reader& r) {
        if (role_ != Role::ap || phase_ != Phase::challenge_sent) {
            fail(FailReason::out_of_order);
            return {};
        }
        const Bytes share = r.sized_bytes();
        const Bytes sig = r.sized_bytes();
        if (!r.done()) {
            fail(FailReason::malformed);
            return {};
        }
        if (!Suite::verify(peer_cert_->public_key, share_sig_payload("pt:ed-share", share), sig)) {
            fail(FailReason::bad_signature);
            return {};
        }
        ++sig_verifications_;
        absorb_transcript(raw);
        shared_secret_ = Suite::ka_shared(ka_.secret, share);
        phase_ = Phase::authenticated;
        derive_keys();

        wire::Writer w;
        w.u8(msg_hs_confirm);
        w.u32(session_id_);
        w.bytes(confirm_mac());
        phase_ = Phase::keys_established;
        return {w.take()};
    }

    std::vector<Bytes> on_confirm(wire::Reader& r) {
        if (role_ != Role::ed || phase_ != Phase::authenticated) {
            fail(FailReason::out_of_order);
            return {};
        }
        const Bytes mac = r.bytes(16);
        if (!r.done()) {
            fail(FailReason::malformed);
            return {};
        }
        const auto expected = confirm_mac();
        if (!crypto::tags_equal(mac, expected)) {
            fail(FailReason::bad_confirmation);
            return {};
        }
        phase_ = Phase::keys_established;
        return {};
    }

    // Signature payload: role tag, key share, both nonces, running transcript.
    Bytes share_sig_payload(const char* tag, const Bytes& share) const {
        wire::Writer w;
        w.bytes(as_bytes(tag));
        w.sized_bytes(share);
        const Nonce& nonce_ed = (role_ == Role::ed) ? my_nonce_ : peer_nonce_;
        const Nonce& nonce_ap = (role_ == Role::ed) ? peer_nonce_ : my_nonce_;
        w.bytes(nonce_ed);
        w.bytes(nonce_ap);
        w.bytes(transcript_);
        return w.take();
    }

    void absorb_transcript(const Bytes& msg) {
        transcript_ = sha256({std::span<const uint8_t>(transcript_), std::span<const uint8_t>(msg)});
    }

    void derive_keys() {
        const Digest256 enc = sha256({as_bytes("pt:enc"), std::span<const uint8_t>(shared_secret_),
                                      std::span<const uint8_t>(transcript_)});
        const Digest256 mac = sha256({as_bytes("pt:mac"), std::span<const uint8_t>(shared_secret_),
                                      std::span<const uint8_t>(transcript_)});
        secure_channel::SessionKeys keys;
        keys.key_epoch = 0;
        std::copy_n(enc.begin(), 16, keys.enc_key.begin());
        std::copy_n(mac.begin(), 16, keys.mac_key.begin());
        keys_ = keys;
    }

    std::array<uint8_t, 16> confirm_mac() const {
        const Digest256 d = sha256({as_bytes("pt:confirm"), std::span<const uint8_t>(keys_->mac_key),
                                    std::span<const uint8_t>(transcript_)});
        std::array<uint8_t, 16> out{};
        std::copy_n(d.begin(), 16, out.begin());
        return out;
    }

    Role role_;
    DeviceCredentials<Suite> creds_;
    TrustStore store_;
    Rng rng_;
    uint64_t now_;

    Phase phase_ = Phase::idle;
    FailReason fail_ = FailReason::none;
    uint32_t session_id_ = 0;
    Nonce my_nonce_{};
    Nonce peer_nonce_{};
    Digest256 transcript_{};
    typename Suite::KaKeyPair ka_;
    Bytes shared_secret_;
    std::optional<Certificate> peer_cert_;
    std::optional<secure_channel::SessionKeys> keys_;
    std::set<Nonce> nonce_cache_;
    int sig_verifications_ = 0;
};

// --- simulated transport and protocol drivers -----------------------------------

// Lossy delivery with bounded retransmission; no wall clock, losses consume
// retry budget and an exhausted budget is a timeout.
struct SimTransport {
    double loss_probability = 0.0;
    int max_retries = 3;
    Rng rng{0};
    long delivered_messages = 0;
    long delivered_bits = 0;
    long lost_messages = 0;

    bool deliver(const Bytes& msg) {
        int attempts = 0;
        while (rng.uniform() < loss_probability) {
            ++lost_messages;
            if (++attempts > max_retries) return false;
        }
        ++delivered_messages;
        delivered_bits += static_cast<long>(msg.size()) * 8;
        return true;
    }
};

template <typename Suite>
struct ProtocolOutcome {
    bool success = false;
    Phase ed_phase = Phase::idle;
    Phase ap_phase = Phase::idle;
    FailReason ed_reason = FailReason::none;
    FailReason ap_reason = FailReason::none;
    long public_bits = 0; // total bits on the air for this exchange
};

namespace detail {

// Ping-pong pump: deliver each produced message to the other side until the
// flow quiesces.
template <typename Suite>
long pump(Endpoint<Suite>& from, Endpoint<Suite>& to, std::vector<Bytes> msgs,
          SimTransport& transport) {
    long bits = 0;
    Endpoint<Suite>* sender = &from;
    Endpoint<Suite>* receiver = &to;
    while (!msgs.empty()) {
        std::vector<Bytes> next;
        for (const auto& m : msgs) {
            if (!transport.deliver(m)) {
                sender->fail(FailReason::timeout);
                receiver->fail(FailReason::timeout);
                return bits;
            }
            bits += static_cast<long>(m.size()) * 8;
            auto replies = receiver->on_message(m);
            next.insert(next.end(), replies.begin(), replies.end());
        }
        std::swap(sender, receiver);
        msgs = std::move(next);
    }
    return bits;
}

} // namespace detail

// One-time pairing: mutual chain verification and device-cert exchange.
template <typename Suite = SodiumSuite>
ProtocolOutcome<Suite> initial_auth(Endpoint<Suite>& ed, Endpoint<Suite>& ap,
                                    SimTransport& transport, uint32_t session_id = 1) {
    ProtocolOutcome<Suite> out;
    out.public_bits = detail::pump(ed, ap, {ed.start_initial_auth(session_id)}, transport);
    out.ed_phase = ed.phase();
    out.ap_phase = ap.phase();
    out.ed_reason = ed.fail_reason();
    out.ap_reason = ap.fail_reason();
    out.success = ed.paired() && ap.paired() && ed.phase() != Phase::failed &&
                  ap.phase() != Phase::failed;
    return out;
}

// Four-message mutual-auth handshake; success means both sides hold keys.
template <typename Suite = SodiumSuite>
ProtocolOutcome<Suite> session_handshake(Endpoint<Suite>& ed, Endpoint<Suite>& ap,
                                         SimTransport& transport, uint32_t session_id = 2) {
    ProtocolOutcome<Suite> out;
    out.public_bits = detail::pump(ed, ap, {ed.start_session(session_id)}, transport);
    out.ed_phase = ed.phase();
    out.ap_phase = ap.phase();
    out.ed_reason = ed.fail_reason();
    out.ap_reason = ap.fail_reason();
    out.success = ed.phase() == Phase::keys_established &&
                  ap.phase() == Phase::keys_established && ed.session_keys().has_value() &&
                  ap.session_keys().has_value() &&
                  ed.session_keys()->enc_key == ap.session_keys()->enc_key &&
                  ed.session_keys()->mac_key == ap.session_keys()->mac_key;
    return out;
}

struct RekeyOutcome {
    secure_channel::SessionKeys keys;
    bool rekeyed = false;
    long signaling_bits = 0; // public bits spent (syndromes only)
};

// Key update from a finished SKG run. A failed run keeps the current keys
// and bumps the retry counter (availability over freshness).
inline RekeyOutcome rekey_via_skg(const secure_channel::SessionKeys& current,
                                  const skg::SkgRun& run, int& retry_counter) {
    RekeyOutcome out;
    if (!run.report.success || !run.key_ap) {
        ++retry_counter;
        out.keys = current;
        out.rekeyed = false;
        out.signaling_bits = run.report.leaked_bits;
        return out;
    }
    retry_counter = 0;
    out.keys = secure_channel::rekey(current, *run.key_ap);
    out.rekeyed = true;
    out.signaling_bits = run.report.leaked_bits;
    return out;
}

} // namespace physec::plugtrust
