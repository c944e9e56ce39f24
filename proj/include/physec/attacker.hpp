#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "physec/auth.hpp"
#include "physec/channel.hpp"
#include "physec/errors.hpp"
#include "physec/secure_channel.hpp"
#include "physec/skg.hpp"

namespace physec::attacker {

struct Eavesdrop {};
struct SpoofFrame {
    long step = 0;
};
struct ReplayFrame {
    int recorded_index = 0;
    long step = 0;
};
using Action = std::variant<Eavesdrop, SpoofFrame, ReplayFrame>;

struct AttackerConfig {
    double correlation_to_legit = 0.0; // 0 models d > lambda/2
    double snr_db = 15.0;              // eavesdropping SNR (may exceed legitimate)
    std::vector<Action> script;

    void validate() const {
        if (correlation_to_legit < 0.0 || correlation_to_legit > 1.0)
            throw std::invalid_argument("AttackerConfig: correlation outside [0,1]");
    }
};

struct AttackOutcome {
    double key_bit_agreement = 0.0;
    double spoof_detection_rate = 0.0;
    double replay_rejection_rate = 0.0;
};

struct EavesdropResult {
    BitVec guessed_s;
    BitVec guessed_k;
    double agreement_s = 0.0; // vs the legitimate pre-amplification key
    double agreement_k = 0.0; // vs the legitimate amplified key
};

namespace detail {

// The attacker knows the full pipeline (quantizer parameters, code, kept
// indices from the public exchange) but cannot drop samples of its own: the
// bit positions are fixed by the legitimate parties, so guarded samples
// still get a threshold-sign bit.
inline BitVec quantize_at_indices(const skg::ChannelProfile& profile,
                                  const std::vector<int>& indices, int n) {
    const std::vector<double> s = skg::scalar_features(profile);
    BitVec bits;
    if (n == 1) {
        const double thr = mean(s);
        for (int idx : indices) bits.push_back(s[static_cast<std::size_t>(idx)] >= thr ? 1 : 0);
    } else {
        const double q1 = quantile(s, 0.25);
        const double q2 = quantile(s, 0.50);
        const double q3 = quantile(s, 0.75);
        for (int idx : indices) {
            const double v = s[static_cast<std::size_t>(idx)];
            if (v < q1) {
                bits.push_back(0);
                bits.push_back(0);
            } else if (v < q2) {
                bits.push_back(0);
                bits.push_back(1);
            } else if (v < q3) {
                bits.push_back(1);
                bits.push_back(1);
            } else {
                bits.push_back(1);
                bits.push_back(0);
            }
        }
    }
    return bits;
}

} // namespace detail

// The eavesdropper replays the whole SKG pipeline on its own observations,
// using the public syndromes and index exchange. The run must have produced
// syndromes (the legitimate exchange happened on the air).
inline EavesdropResult eavesdrop_key_guess(const skg::ChannelProfile& attacker_profile,
                                           const skg::SkgRun& run, const skg::SkgConfig& config) {
    if (!run.syndromes)
        throw InsufficientDataError("eavesdrop_key_guess: no syndrome exchange to exploit");
    EavesdropResult res;
    const skg::ChannelProfile enhanced =
        skg::enhance_reciprocity(attacker_profile, config.enhancement_window);
    const BitVec own =
        detail::quantize_at_indices(enhanced, run.kept_samples, config.bits_per_measurement);
    res.guessed_s = skg::syndrome_decode(own, *run.syndromes);
    res.agreement_s = bit_agreement(res.guessed_s, run.synchronized);
    if (run.key_ap) {
        res.guessed_k = skg::privacy_amplify(res.guessed_s, 0, config.amplified_key_bits).bits;
        res.agreement_k = bit_agreement(res.guessed_k, run.key_ap->bits);
    }
    return res;
}

// Delta features of spoofed injections as the AP sees them. Each step
// carries one legitimate message (which refreshes the AP's reference
// estimate) and one injected message observed through the attacker channel
// under the AP's estimation noise.
inline std::vector<auth::DeltaFeature> spoof_delta_features(const channel::ChannelParams& params,
                                                            int n_frames, Rng& rng) {
    if (n_frames <= 0) throw std::invalid_argument("spoof_delta_features: need at least one frame");
    channel::ChannelState st = channel::init_channel(params, rng);
    channel::Observation reference =
        channel::observe(st, params, channel::Observer::ap, channel::Direction::uplink, rng);
    std::vector<auth::DeltaFeature> features;
    features.reserve(static_cast<std::size_t>(n_frames));
    const double sigma = std::sqrt(params.noise_variance(channel::Observer::ap));
    for (int i = 0; i < n_frames; ++i) {
        st = channel::evolve(st, params, rng);
        channel::TapVector spoofed(st.h_attacker.size());
        for (std::size_t t = 0; t < st.h_attacker.size(); ++t)
            spoofed[t] = st.h_attacker[t] + sigma * rng.complex_gaussian();
        features.push_back(auth::delta_feature(spoofed, reference.estimate, st.step_index));
        reference =
            channel::observe(st, params, channel::Observer::ap, channel::Direction::uplink, rng);
    }
    return features;
}

template <typename Detector>
double spoof_detection_rate(const Detector& detector,
                            const std::vector<auth::DeltaFeature>& features) {
    if (features.empty()) throw std::invalid_argument("spoof_detection_rate: zero frames");
    int detected = 0;
    for (const auto& f : features)
        if (auth::decide(detector, f).hypothesis == auth::Hypothesis::attack) ++detected;
    return static_cast<double>(detected) / static_cast<double>(features.size());
}

template <typename Detector>
double spoof_detection_rate(const channel::ChannelParams& params, const Detector& detector,
                            int n_frames, Rng& rng) {
    return spoof_detection_rate(detector, spoof_delta_features(params, n_frames, rng));
}

// Replays previously accepted frames into the receiving session; every
// rejection (replay window, epoch, tag) counts.
inline double replay_rejection_rate(const std::vector<secure_channel::Frame>& recorded,
                                    secure_channel::SecureSession& session) {
    if (recorded.empty())
        throw std::invalid_argument("replay_rejection_rate: nothing recorded");
    int rejected = 0;
    for (const auto& f : recorded) {
        try {
            (void)session.receive(f);
        } catch (const Error&) {
            ++rejected;
        }
    }
    return static_cast<double>(rejected) / static_cast<double>(recorded.size());
}

} // namespace physec::attacker
