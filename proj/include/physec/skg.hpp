#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "physec/bitvec.hpp"
#include "physec/channel.hpp"
#include "physec/errors.hpp"
#include "physec/hamming.hpp"
#include "physec/hash.hpp"
#include "physec/stats.hpp"

namespace physec::skg {

struct CodeSpec {
    enum class Family { hamming74 };
    Family family = Family::hamming74;

    int block_bits() const { return hamming_block_bits; }
    int syndrome_bits() const { return hamming_syndrome_bits; }
};

struct SkgConfig {
    int num_measurements = 256;   // M
    int bits_per_measurement = 1; // N in {1,2}
    int key_length_bits = 0;      // L = M*N; 0 = derive
    int enhancement_window = 1;
    double guard_band_alpha = 0.0;
    CodeSpec code;
    int amplified_key_bits = 128;

    void validate() const {
        if (num_measurements <= 0) throw std::invalid_argument("SkgConfig: M must be positive");
        if (bits_per_measurement != 1 && bits_per_measurement != 2)
            throw std::invalid_argument("SkgConfig: N must be 1 or 2");
        if (key_length_bits != 0 && key_length_bits != num_measurements * bits_per_measurement)
            throw std::invalid_argument("SkgConfig: key_length_bits must equal M*N");
        if (enhancement_window <= 0)
            throw std::invalid_argument("SkgConfig: enhancement_window must be positive");
        if (guard_band_alpha < 0.0)
            throw std::invalid_argument("SkgConfig: guard_band_alpha must be non-negative");
        if (amplified_key_bits <= 0 || amplified_key_bits > 256)
            throw std::invalid_argument("SkgConfig: amplified_key_bits outside [1,256]");
    }

    int target_key_bits() const { return num_measurements * bits_per_measurement; }
};

// Time series of per-tap channel magnitudes, one sample per probing step.
struct ChannelProfile {
    std::vector<std::vector<double>> samples; // samples[k][tap]
    channel::Observer owner = channel::Observer::ap;
};

struct Profiles {
    ChannelProfile ap;
    ChannelProfile ed;
    ChannelProfile attacker;
};

namespace detail {

inline std::vector<double> magnitudes(const channel::TapVector& est) {
    std::vector<double> out(est.size());
    for (std::size_t i = 0; i < est.size(); ++i) out[i] = std::abs(est[i]);
    return out;
}

} // namespace detail

// Builds time-aligned per-party channel profiles from the first M probing
// steps. The attacker fuses its uplink and downlink estimates by averaging.
inline Profiles probe(const channel::ChannelTrace& trace, int m) {
    if (m <= 0) throw std::invalid_argument("probe: M must be positive");
    using channel::Direction;
    using channel::Observer;
    const auto ap_obs = trace.of(Observer::ap, Direction::uplink);
    const auto ed_obs = trace.of(Observer::ed, Direction::downlink);
    const auto att_up = trace.of(Observer::attacker, Direction::uplink);
    const auto att_dn = trace.of(Observer::attacker, Direction::downlink);
    const auto mm = static_cast<std::size_t>(m);
    if (ap_obs.size() < mm || ed_obs.size() < mm || att_up.size() < mm || att_dn.size() < mm)
        throw InsufficientDataError("probe: trace shorter than M probing steps");

    Profiles p;
    p.ap.owner = Observer::ap;
    p.ed.owner = Observer::ed;
    p.attacker.owner = Observer::attacker;
    for (std::size_t k = 0; k < mm; ++k) {
        p.ap.samples.push_back(detail::magnitudes(ap_obs[k].estimate));
        p.ed.samples.push_back(detail::magnitudes(ed_obs[k].estimate));
        channel::TapVector fused(att_up[k].estimate.size());
        for (std::size_t t = 0; t < fused.size(); ++t)
            fused[t] = 0.5 * (att_up[k].estimate[t] + att_dn[k].estimate[t]);
        p.attacker.samples.push_back(detail::magnitudes(fused));
    }
    return p;
}

// Trailing moving average per tap; the window shrinks at the left boundary
// so the output keeps length M. window = 1 is the identity.
inline ChannelProfile enhance_reciprocity(const ChannelProfile& profile, int window) {
    if (window <= 0) throw std::invalid_argument("enhance_reciprocity: window must be >= 1");
    if (window == 1) return profile;
    ChannelProfile out;
    out.owner = profile.owner;
    out.samples.resize(profile.samples.size());
    const std::size_t ntaps = profile.samples.empty() ? 0 : profile.samples[0].size();
    for (std::size_t k = 0; k < profile.samples.size(); ++k) {
        const std::size_t lo = (k + 1 >= static_cast<std::size_t>(window))
                                   ? k + 1 - static_cast<std::size_t>(window)
                                   : 0;
        out.samples[k].assign(ntaps, 0.0);
        for (std::size_t t = 0; t < ntaps; ++t) {
            double acc = 0.0;
            for (std::size_t j = lo; j <= k; ++j) acc += profile.samples[j][t];
            out.samples[k][t] = acc / static_cast<double>(k - lo + 1);
        }
    }
    return out;
}

// Per-sample scalar used by the quantizer: mean magnitude across taps.
inline std::vector<double> scalar_features(const ChannelProfile& profile) {
    std::vector<double> out;
    out.reserve(profile.samples.size());
    for (const auto& s : profile.samples) out.push_back(mean(s));
    return out;
}

struct PreliminaryKey {
    BitVec bits;
    std::vector<int> dropped_indices; // sample indices inside the guard band
    int num_samples = 0;
    int bits_per_sample = 0;

    std::vector<int> kept_indices() const {
        std::vector<int> kept;
        std::size_t d = 0;
        for (int i = 0; i < num_samples; ++i) {
            if (d < dropped_indices.size() && dropped_indices[d] == i) {
                ++d;
                continue;
            }
            kept.push_back(i);
        }
        return kept;
    }
};

namespace detail {

inline void append_gray2(BitVec& bits, double s, double q1, double q2, double q3) {
    // interval labels 00,01,11,10: adjacent intervals differ in one bit
    if (s < q1) {
        bits.push_back(0);
        bits.push_back(0);
    } else if (s < q2) {
        bits.push_back(0);
        bits.push_back(1);
    } else if (s < q3) {
        bits.push_back(1);
        bits.push_back(1);
    } else {
        bits.push_back(1);
        bits.push_back(0);
    }
}

} // namespace detail

// Lossy quantization with an alpha*sigma guard band around each threshold.
// N=1 thresholds at the profile mean; N=2 at the empirical quartiles with
// Gray-coded 2-bit labels. Guarded samples are dropped and their indices
// recorded for the public index exchange.
inline PreliminaryKey quantize(const ChannelProfile& profile, int n, double alpha) {
    if (n != 1 && n != 2) throw std::invalid_argument("quantize: N must be 1 or 2");
    if (alpha < 0.0) throw std::invalid_argument("quantize: alpha must be non-negative");
    const std::vector<double> s = scalar_features(profile);
    if (s.empty()) throw std::invalid_argument("quantize: empty profile");

    PreliminaryKey key;
    key.num_samples = static_cast<int>(s.size());
    key.bits_per_sample = n;
    const double sd = stddev(s);
    const double guard = alpha * sd;

    if (n == 1) {
        const double thr = mean(s);
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (std::abs(s[k] - thr) < guard) {
                key.dropped_indices.push_back(static_cast<int>(k));
                continue;
            }
            key.bits.push_back(s[k] >= thr ? 1 : 0);
        }
    } else {
        const double q1 = quantile(s, 0.25);
        const double q2 = quantile(s, 0.50);
        const double q3 = quantile(s, 0.75);
        for (std::size_t k = 0; k < s.size(); ++k) {
            const double d = std::min({std::abs(s[k] - q1), std::abs(s[k] - q2),
                                       std::abs(s[k] - q3)});
            if (d < guard) {
                key.dropped_indices.push_back(static_cast<int>(k));
                continue;
            }
            detail::append_gray2(key.bits, s[k], q1, q2, q3);
        }
    }
    if (key.bits.empty())
        throw EmptyKeyError("quantize: guard band dropped every sample");
    return key;
}

struct AlignedKeys {
    BitVec a_bits;
    BitVec b_bits;
    std::vector<int> kept; // sample indices kept by both parties
};

// Public index exchange: both parties keep exactly the samples neither
// dropped, which leaves equal-length, position-aligned keys.
inline AlignedKeys align_keys(const PreliminaryKey& a, const PreliminaryKey& b) {
    if (a.num_samples != b.num_samples || a.bits_per_sample != b.bits_per_sample)
        throw std::invalid_argument("align_keys: incompatible preliminary keys");
    const auto kept_a = a.kept_indices();
    const auto kept_b = b.kept_indices();
    AlignedKeys out;
    std::set_intersection(kept_a.begin(), kept_a.end(), kept_b.begin(), kept_b.end(),
                          std::back_inserter(out.kept));
    const auto n = static_cast<std::size_t>(a.bits_per_sample);
    auto pick = [&](const PreliminaryKey& key, const std::vector<int>& kept_self) {
        BitVec bits;
        std::size_t pos = 0; // rank of the sample within the party's own kept list
        std::size_t want = 0;
        for (int idx : kept_self) {
            if (want < out.kept.size() && idx == out.kept[want]) {
                for (std::size_t j = 0; j < n; ++j) bits.push_back(key.bits[pos * n + j]);
                ++want;
            }
            ++pos;
        }
        return bits;
    };
    out.a_bits = pick(a, kept_a);
    out.b_bits = pick(b, kept_b);
    if (out.kept.empty()) throw EmptyKeyError("align_keys: no samples survived both guard bands");
    return out;
}

// Bit disagreement rate before reconciliation; denominator is the number of
// bits surviving the guard band.
inline double bit_disagreement_rate(const BitVec& a, const BitVec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("bit_disagreement_rate: length mismatch");
    if (a.empty()) throw std::invalid_argument("bit_disagreement_rate: empty keys");
    return static_cast<double>(hamming_distance(a, b)) / static_cast<double>(a.size());
}

struct SyndromeMessage {
    std::vector<uint8_t> syndromes; // one 3-bit value per block
    int block_size = hamming_block_bits;
    long leaked_bits = 0; // total public syndrome bits
};

// AP-side syndromes over full blocks; trailing bits beyond the last full
// block are discarded by both parties.
inline SyndromeMessage compute_syndromes(const BitVec& ap_bits, const CodeSpec& code) {
    (void)code;
    SyndromeMessage msg;
    const std::size_t blocks = ap_bits.size() / static_cast<std::size_t>(hamming_block_bits);
    msg.syndromes.reserve(blocks);
    for (std::size_t b = 0; b < blocks; ++b)
        msg.syndromes.push_back(static_cast<uint8_t>(
            hamming_syndrome(ap_bits, b * static_cast<std::size_t>(hamming_block_bits))));
    msg.leaked_bits = static_cast<long>(blocks) * hamming_syndrome_bits;
    return msg;
}

// ED-side decoding: each block is moved into the AP's syndrome coset by the
// minimum-weight flip. Also the attacker's decode path.
inline BitVec syndrome_decode(const BitVec& bits, const SyndromeMessage& msg) {
    const auto blocks = msg.syndromes.size();
    const auto bb = static_cast<std::size_t>(hamming_block_bits);
    if (bits.size() < blocks * bb)
        throw std::invalid_argument("syndrome_decode: key shorter than syndrome message");
    BitVec out = bits.slice(0, blocks * bb);
    for (std::size_t b = 0; b < blocks; ++b)
        hamming_correct_to(out, b * bb, msg.syndromes[b]);
    return out;
}

struct ReconcileResult {
    BitVec synchronized; // S
    SyndromeMessage message;
    int corrected_bits = 0;
};

// Information reconciliation, AP as the key source. Success is decided by
// the public 32-bit verifier; the failing-block list attached to the error
// comes from direct comparison and is diagnostic only.
inline ReconcileResult reconcile(const BitVec& ed_bits, const BitVec& ap_bits,
                                 const CodeSpec& code) {
    if (ed_bits.size() != ap_bits.size())
        throw std::invalid_argument("reconcile: preliminary keys must have equal length");
    const auto bb = static_cast<std::size_t>(code.block_bits());
    const std::size_t blocks = ap_bits.size() / bb;
    if (blocks == 0) throw std::invalid_argument("reconcile: fewer bits than one code block");

    BitVec ap_trunc = ap_bits.slice(0, blocks * bb);
    ReconcileResult res;
    res.message = compute_syndromes(ap_trunc, code);
    res.synchronized = syndrome_decode(ed_bits, res.message);
    res.corrected_bits =
        static_cast<int>(hamming_distance(res.synchronized, ed_bits.slice(0, blocks * bb)));

    if (key_verifier(res.synchronized) != key_verifier(ap_trunc)) {
        std::vector<int> failing;
        for (std::size_t b = 0; b < blocks; ++b)
            if (res.synchronized.slice(b * bb, bb) != ap_trunc.slice(b * bb, bb))
                failing.push_back(static_cast<int>(b));
        throw ReconciliationFailedError(
            "reconcile: verifier mismatch in " + std::to_string(failing.size()) + " block(s)",
            failing);
    }
    return res;
}

struct SecretKey {
    BitVec bits;
    uint32_t verifier = 0; // hash of the pre-amplification key S
};

// Privacy amplification by hash truncation. Requires the residual entropy
// |S| - leaked_bits to cover the output size.
inline SecretKey privacy_amplify(const BitVec& s, long leaked_bits, int out_bits) {
    if (out_bits <= 0 || out_bits > 256)
        throw std::invalid_argument("privacy_amplify: out_bits outside [1,256]");
    if (leaked_bits < 0) throw std::invalid_argument("privacy_amplify: negative leaked_bits");
    if (static_cast<long>(s.size()) - leaked_bits < out_bits)
        throw EntropyError("privacy_amplify: residual entropy below requested key size");
    SecretKey key;
    key.bits = digest_bits(hash_bits(0x00, s), static_cast<std::size_t>(out_bits));
    key.verifier = key_verifier(s);
    return key;
}

struct SkgReport {
    double bdr = 0.0;
    double kgr_bits_per_s = 0.0;
    bool success = false;
    long leaked_bits = 0;
    std::string failure_reason;
};

struct SkgRun {
    SkgReport report;
    std::optional<SecretKey> key_ap;
    std::optional<SecretKey> key_ed;
    BitVec synchronized;          // AP-side key S after truncation to full blocks
    std::vector<int> kept_samples; // public index-exchange outcome
    std::optional<SyndromeMessage> syndromes;
};

// The full five-stage pipeline for one trial. Stage errors become a failed
// report instead of propagating.
inline SkgRun run_skg(const channel::ChannelTrace& trace, const SkgConfig& config) {
    config.validate();
    SkgRun run;
    const double duration =
        static_cast<double>(config.num_measurements) * trace.params.probe_interval_s;
    try {
        Profiles profiles = probe(trace, config.num_measurements);
        const ChannelProfile ap_enh =
            enhance_reciprocity(profiles.ap, config.enhancement_window);
        const ChannelProfile ed_enh =
            enhance_reciprocity(profiles.ed, config.enhancement_window);
        const PreliminaryKey p_ap =
            quantize(ap_enh, config.bits_per_measurement, config.guard_band_alpha);
        const PreliminaryKey p_ed =
            quantize(ed_enh, config.bits_per_measurement, config.guard_band_alpha);
        const AlignedKeys aligned = align_keys(p_ap, p_ed);
        run.kept_samples = aligned.kept;
        run.report.bdr = bit_disagreement_rate(aligned.a_bits, aligned.b_bits);

        const auto bb = static_cast<std::size_t>(config.code.block_bits());
        const std::size_t blocks = aligned.a_bits.size() / bb;
        if (blocks == 0)
            throw InsufficientDataError("run_skg: fewer surviving bits than one code block");
        const BitVec ap_trunc = aligned.a_bits.slice(0, blocks * bb);
        run.synchronized = ap_trunc;

        // syndromes go on the air before anyone can tell whether decoding
        // will succeed, so they count as leakage either way
        const SyndromeMessage msg = compute_syndromes(ap_trunc, config.code);
        run.syndromes = msg;
        run.report.leaked_bits = msg.leaked_bits;

        const BitVec s_ed = syndrome_decode(aligned.b_bits, msg);
        if (key_verifier(s_ed) != key_verifier(ap_trunc))
            throw ReconciliationFailedError("reconcile: verifier mismatch", {});

        run.key_ap = privacy_amplify(ap_trunc, msg.leaked_bits, config.amplified_key_bits);
        run.key_ed = privacy_amplify(s_ed, msg.leaked_bits, config.amplified_key_bits);
        run.report.success = run.key_ap->bits == run.key_ed->bits;
        if (!run.report.success) run.report.failure_reason = "amplified keys disagree";
    } catch (const Error& e) {
        run.report.success = false;
        run.report.failure_reason = e.what();
        run.key_ap.reset();
        run.key_ed.reset();
    }
    run.report.kgr_bits_per_s =
        run.report.success ? static_cast<double>(config.amplified_key_bits) / duration : 0.0;
    return run;
}

} // namespace physec::skg
