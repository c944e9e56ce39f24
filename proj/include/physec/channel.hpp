#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "physec/csv.hpp"
#include "physec/errors.hpp"
#include "physec/rng.hpp"

namespace physec::channel {

using Complex = std::complex<double>;
using TapVector = std::vector<Complex>;

enum class Observer { ap, ed, attacker };
enum class Direction { uplink, downlink };

inline const char* to_string(Observer o) {
    switch (o) {
        case Observer::ap: return "ap";
        case Observer::ed: return "ed";
        default: return "attacker";
    }
}

inline const char* to_string(Direction d) {
    return d == Direction::uplink ? "uplink" : "downlink";
}

// Number of probing steps until the Gauss-Markov autocorrelation rho^lag
// drops to 0.5.
inline int coherence_steps_from_rho(double rho) {
    if (rho <= 0.0) return 1;
    if (rho >= 1.0) return std::numeric_limits<int>::max();
    const double steps = std::log(0.5) / std::log(rho);
    return static_cast<int>(std::ceil(steps));
}

struct ChannelParams {
    int num_taps = 4;
    double temporal_correlation = 0.99; // Gauss-Markov rho per probing step
    int coherence_steps = 0;            // 0 = derive from rho
    double carrier_frequency_hz = 5.8e9;
    double probe_interval_s = 0.01;
    double snr_db = 15.0;          // estimation SNR at AP and ED
    double attacker_snr_db = 15.0; // estimation SNR at the eavesdropper
    double attacker_correlation = 0.0; // 0 models d > lambda/2

    void validate() const {
        if (num_taps <= 0) throw std::invalid_argument("ChannelParams: num_taps must be positive");
        if (temporal_correlation < 0.0 || temporal_correlation > 1.0)
            throw std::invalid_argument("ChannelParams: temporal_correlation outside [0,1]");
        if (attacker_correlation < 0.0 || attacker_correlation > 1.0)
            throw std::invalid_argument("ChannelParams: attacker_correlation outside [0,1]");
        if (coherence_steps < 0) throw std::invalid_argument("ChannelParams: coherence_steps negative");
        if (carrier_frequency_hz <= 0.0)
            throw std::invalid_argument("ChannelParams: carrier_frequency_hz must be positive");
        if (probe_interval_s <= 0.0)
            throw std::invalid_argument("ChannelParams: probe_interval_s must be positive");
    }

    int effective_coherence_steps() const {
        return coherence_steps > 0 ? coherence_steps
                                   : coherence_steps_from_rho(temporal_correlation);
    }

    // Per-tap complex noise variance; tap power is normalized to 1.
    double noise_variance(Observer o) const {
        const double snr = (o == Observer::attacker) ? attacker_snr_db : snr_db;
        if (std::isinf(snr) && snr > 0.0) return 0.0;
        return std::pow(10.0, -snr / 10.0);
    }
};

struct ChannelState {
    TapVector h_ap_ed;    // reciprocal ground truth, shared by both directions
    TapVector h_attacker; // attacker-to-AP/ED channel
    long step_index = 0;
};

struct Observation {
    TapVector estimate;
    Observer observer = Observer::ap;
    Direction direction = Direction::uplink;
    long step_index = 0;
    double noise_variance = 0.0;
};

inline ChannelState init_channel(const ChannelParams& params, Rng& rng) {
    params.validate();
    ChannelState st;
    st.h_ap_ed.resize(static_cast<std::size_t>(params.num_taps));
    st.h_attacker.resize(static_cast<std::size_t>(params.num_taps));
    const double c = params.attacker_correlation;
    const double s = std::sqrt(1.0 - c * c);
    for (int t = 0; t < params.num_taps; ++t) {
        const auto i = static_cast<std::size_t>(t);
        st.h_ap_ed[i] = rng.complex_gaussian();
        st.h_attacker[i] = c * st.h_ap_ed[i] + s * rng.complex_gaussian();
    }
    return st;
}

inline ChannelState init_channel(const ChannelParams& params, uint64_t seed) {
    Rng rng(seed);
    return init_channel(params, rng);
}

// First-order Gauss-Markov update h' = rho*h + sqrt(1-rho^2)*w. The attacker
// innovation is drawn with the configured cross-correlation so the spatial
// correlation structure is stationary over time.
inline ChannelState evolve(const ChannelState& state, const ChannelParams& params, Rng& rng) {
    const double rho = params.temporal_correlation;
    const double drift = std::sqrt(1.0 - rho * rho);
    const double c = params.attacker_correlation;
    const double s = std::sqrt(1.0 - c * c);
    ChannelState next;
    next.step_index = state.step_index + 1;
    next.h_ap_ed.resize(state.h_ap_ed.size());
    next.h_attacker.resize(state.h_attacker.size());
    for (std::size_t i = 0; i < state.h_ap_ed.size(); ++i) {
        const Complex w_legit = rng.complex_gaussian();
        const Complex w_att = c * w_legit + s * rng.complex_gaussian();
        next.h_ap_ed[i] = rho * state.h_ap_ed[i] + drift * w_legit;
        next.h_attacker[i] = rho * state.h_attacker[i] + drift * w_att;
    }
    return next;
}

// Noisy estimate of the true channel seen by `observer` on `direction`. AP
// and ED observing within the same step see the same true channel
// (reciprocity) under independent noise; the attacker sees its own channel.
inline Observation observe(const ChannelState& state, const ChannelParams& params,
                           Observer observer, Direction direction, Rng& rng) {
    if (observer == Observer::ap && direction != Direction::uplink)
        throw std::invalid_argument("observe: AP estimates the uplink");
    if (observer == Observer::ed && direction != Direction::downlink)
        throw std::invalid_argument("observe: ED estimates the downlink");
    const TapVector& truth =
        (observer == Observer::attacker) ? state.h_attacker : state.h_ap_ed;
    Observation obs;
    obs.observer = observer;
    obs.direction = direction;
    obs.step_index = state.step_index;
    obs.noise_variance = params.noise_variance(observer);
    obs.estimate.resize(truth.size());
    const double sigma = std::sqrt(obs.noise_variance);
    for (std::size_t i = 0; i < truth.size(); ++i)
        obs.estimate[i] = truth[i] + sigma * rng.complex_gaussian();
    return obs;
}

struct ChannelTrace {
    std::vector<Observation> observations;
    ChannelParams params;
    uint64_t seed = 0;
    long steps = 0;

    // All observations of one (observer, direction) pair in step order.
    std::vector<Observation> of(Observer o, Direction d) const {
        std::vector<Observation> out;
        for (const auto& obs : observations)
            if (obs.observer == o && obs.direction == d) out.push_back(obs);
        return out;
    }
};

// CSV export: step, observer, direction, tap_index, re, im, noise_variance.
inline csv::Table trace_to_csv(const ChannelTrace& trace) {
    csv::Table t;
    t.columns = {"step", "observer", "direction", "tap_index", "re", "im", "noise_variance"};
    for (const auto& obs : trace.observations)
        for (std::size_t tap = 0; tap < obs.estimate.size(); ++tap)
            t.rows.push_back({std::to_string(obs.step_index), to_string(obs.observer),
                              to_string(obs.direction), std::to_string(tap),
                              csv::format_double(obs.estimate[tap].real()),
                              csv::format_double(obs.estimate[tap].imag()),
                              csv::format_double(obs.noise_variance)});
    return t;
}

// Per step: the ED probes (AP estimates the uplink), the AP probes back (ED
// estimates the downlink), both inside one coherence interval, and the
// attacker eavesdrops both transmissions.
inline ChannelTrace generate_trace(const ChannelParams& params, uint64_t seed, long steps) {
    if (steps <= 0) throw std::invalid_argument("generate_trace: steps must be positive");
    ChannelTrace trace;
    trace.params = params;
    trace.seed = seed;
    trace.steps = steps;
    trace.observations.reserve(static_cast<std::size_t>(steps) * 4);
    Rng rng(seed);
    ChannelState st = init_channel(params, rng);
    for (long k = 0; k < steps; ++k) {
        trace.observations.push_back(observe(st, params, Observer::ap, Direction::uplink, rng));
        trace.observations.push_back(observe(st, params, Observer::ed, Direction::downlink, rng));
        trace.observations.push_back(observe(st, params, Observer::attacker, Direction::uplink, rng));
        trace.observations.push_back(observe(st, params, Observer::attacker, Direction::downlink, rng));
        if (k + 1 < steps) st = evolve(st, params, rng);
    }
    return trace;
}

} // namespace physec::channel
