#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <limits>

#include "physec/channel.hpp"
#include "physec/stats.hpp"

using namespace physec;
using namespace physec::channel;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

ChannelParams base_params() {
    ChannelParams p;
    p.num_taps = 4;
    p.temporal_correlation = 0.95;
    p.snr_db = 15.0;
    p.attacker_snr_db = 15.0;
    p.attacker_correlation = 0.0;
    return p;
}

// complex sample correlation magnitude between two tap series
double cross_correlation(const TapVector& a, const TapVector& b) {
    std::complex<double> num = 0.0;
    double pa = 0.0, pb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += a[i] * std::conj(b[i]);
        pa += std::norm(a[i]);
        pb += std::norm(b[i]);
    }
    return std::abs(num) / std::sqrt(pa * pb);
}

} // namespace

TEST_CASE("parameter validation", "[channel]") {
    ChannelParams p = base_params();
    p.num_taps = 0;
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
    p = base_params();
    p.temporal_correlation = 1.5;
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
    p = base_params();
    p.attacker_correlation = -0.1;
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
    p = base_params();
    p.probe_interval_s = 0.0;
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
    REQUIRE_THROWS_AS(init_channel(p, uint64_t{1}), std::invalid_argument);
}

TEST_CASE("coherence-step mapping from rho", "[channel]") {
    // rho^lag = 0.5 at lag = ln 0.5 / ln rho
    REQUIRE(coherence_steps_from_rho(0.99) == 69);
    REQUIRE(coherence_steps_from_rho(0.5) == 1);
    REQUIRE(coherence_steps_from_rho(0.0) == 1);
    REQUIRE(coherence_steps_from_rho(1.0) == std::numeric_limits<int>::max());
    ChannelParams p = base_params();
    p.temporal_correlation = 0.99;
    REQUIRE(p.effective_coherence_steps() == 69);
    p.coherence_steps = 42;
    REQUIRE(p.effective_coherence_steps() == 42);
}

TEST_CASE("init is deterministic in (params, seed)", "[channel]") {
    const ChannelParams p = base_params();
    const ChannelState a = init_channel(p, uint64_t{77});
    const ChannelState b = init_channel(p, uint64_t{77});
    REQUIRE(a.h_ap_ed == b.h_ap_ed);
    REQUIRE(a.h_attacker == b.h_attacker);
    const ChannelState c = init_channel(p, uint64_t{78});
    REQUIRE(a.h_ap_ed != c.h_ap_ed);
}

TEST_CASE("attacker_correlation=1 clones the legitimate channel", "[channel]") {
    ChannelParams p = base_params();
    p.attacker_correlation = 1.0;
    Rng rng(5);
    ChannelState st = init_channel(p, rng);
    REQUIRE(st.h_attacker == st.h_ap_ed);
    // the clone persists through evolution
    for (int i = 0; i < 10; ++i) st = evolve(st, p, rng);
    for (std::size_t t = 0; t < st.h_ap_ed.size(); ++t)
        REQUIRE(std::abs(st.h_attacker[t] - st.h_ap_ed[t]) < 1e-12);
}

TEST_CASE("attacker_correlation=0 decorrelates the attacker", "[channel]") {
    ChannelParams p = base_params();
    p.num_taps = 10000; // 10^4 i.i.d. draws in one shot
    p.attacker_correlation = 0.0;
    Rng rng(6);
    const ChannelState st = init_channel(p, rng);
    REQUIRE(cross_correlation(st.h_ap_ed, st.h_attacker) < 0.05);
}

TEST_CASE("intermediate attacker correlation is realized", "[channel]") {
    ChannelParams p = base_params();
    p.num_taps = 20000;
    p.attacker_correlation = 0.6;
    Rng rng(7);
    ChannelState st = init_channel(p, rng);
    REQUIRE(cross_correlation(st.h_ap_ed, st.h_attacker) == Catch::Approx(0.6).margin(0.02));
    // stationary under evolution
    st = evolve(st, p, rng);
    st = evolve(st, p, rng);
    REQUIRE(cross_correlation(st.h_ap_ed, st.h_attacker) == Catch::Approx(0.6).margin(0.02));
}

TEST_CASE("evolve with rho=1 freezes the channel", "[channel]") {
    ChannelParams p = base_params();
    p.temporal_correlation = 1.0;
    Rng rng(8);
    const ChannelState st = init_channel(p, rng);
    const ChannelState next = evolve(st, p, rng);
    REQUIRE(next.step_index == st.step_index + 1);
    REQUIRE(next.h_ap_ed == st.h_ap_ed);
    REQUIRE(next.h_attacker == st.h_attacker);
}

TEST_CASE("evolve with rho=0 draws an independent channel", "[channel]") {
    ChannelParams p = base_params();
    p.num_taps = 1;
    p.temporal_correlation = 0.0;
    Rng rng(9);
    ChannelState st = init_channel(p, rng);
    TapVector before, after;
    for (int i = 0; i < 10000; ++i) {
        before.push_back(st.h_ap_ed[0]);
        st = evolve(st, p, rng);
        after.push_back(st.h_ap_ed[0]);
    }
    REQUIRE(cross_correlation(before, after) < 0.05);
}

TEST_CASE("evolve with rho=0.99 has matching lag-1 autocorrelation", "[channel]") {
    ChannelParams p = base_params();
    p.num_taps = 1;
    p.temporal_correlation = 0.99;
    Rng rng(10);
    ChannelState st = init_channel(p, rng);
    std::complex<double> num = 0.0;
    double den = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const std::complex<double> prev = st.h_ap_ed[0];
        st = evolve(st, p, rng);
        num += st.h_ap_ed[0] * std::conj(prev);
        den += std::norm(prev);
    }
    REQUIRE(num.real() / den == Catch::Approx(0.99).margin(0.02));
}

TEST_CASE("tap power stays normalized", "[channel]") {
    ChannelParams p = base_params();
    p.num_taps = 1;
    p.temporal_correlation = 0.9;
    Rng rng(11);
    ChannelState st = init_channel(p, rng);
    double power = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        st = evolve(st, p, rng);
        power += std::norm(st.h_ap_ed[0]);
    }
    REQUIRE(power / n == Catch::Approx(1.0).margin(0.03));
}

TEST_CASE("noiseless observations are exactly reciprocal", "[channel]") {
    ChannelParams p = base_params();
    p.snr_db = inf;
    Rng rng(12);
    const ChannelState st = init_channel(p, rng);
    const Observation ap = observe(st, p, Observer::ap, Direction::uplink, rng);
    const Observation ed = observe(st, p, Observer::ed, Direction::downlink, rng);
    REQUIRE(ap.estimate == ed.estimate);
    REQUIRE(ap.estimate == st.h_ap_ed);
    REQUIRE(ap.noise_variance == 0.0);
}

TEST_CASE("observation noise matches the configured SNR", "[channel]") {
    ChannelParams p = base_params();
    p.snr_db = 10.0; // noise variance 0.1 per tap
    Rng rng(13);
    ChannelState st = init_channel(p, rng);
    double mse = 0.0;
    long count = 0;
    for (int i = 0; i < 10000; ++i) {
        const Observation obs = observe(st, p, Observer::ap, Direction::uplink, rng);
        for (std::size_t t = 0; t < obs.estimate.size(); ++t) {
            mse += std::norm(obs.estimate[t] - st.h_ap_ed[t]);
            ++count;
        }
        st = evolve(st, p, rng);
    }
    REQUIRE(mse / static_cast<double>(count) == Catch::Approx(0.1).epsilon(0.10));
}

TEST_CASE("observer/direction combinations are checked", "[channel]") {
    const ChannelParams p = base_params();
    Rng rng(14);
    const ChannelState st = init_channel(p, rng);
    REQUIRE_THROWS_AS(observe(st, p, Observer::ap, Direction::downlink, rng),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(observe(st, p, Observer::ed, Direction::uplink, rng), std::invalid_argument);
    REQUIRE_NOTHROW(observe(st, p, Observer::attacker, Direction::uplink, rng));
    REQUIRE_NOTHROW(observe(st, p, Observer::attacker, Direction::downlink, rng));
}

TEST_CASE("trace generation is a pure function of (params, seed)", "[channel]") {
    const ChannelParams p = base_params();
    const ChannelTrace a = generate_trace(p, 99, 50);
    const ChannelTrace b = generate_trace(p, 99, 50);
    REQUIRE(a.observations.size() == b.observations.size());
    REQUIRE(a.observations.size() == 200); // 4 observations per step
    for (std::size_t i = 0; i < a.observations.size(); ++i) {
        REQUIRE(a.observations[i].estimate == b.observations[i].estimate);
        REQUIRE(a.observations[i].observer == b.observations[i].observer);
    }
    REQUIRE(trace_to_csv(a).render() == trace_to_csv(b).render());
    REQUIRE_THROWS_AS(generate_trace(p, 99, 0), std::invalid_argument);
}

TEST_CASE("trace CSV has the documented columns", "[channel]") {
    ChannelParams p = base_params();
    p.num_taps = 2;
    const auto table = trace_to_csv(generate_trace(p, 3, 2));
    REQUIRE(table.columns ==
            std::vector<std::string>{"step", "observer", "direction", "tap_index", "re", "im",
                                     "noise_variance"});
    REQUIRE(table.rows.size() == 2 * 4 * 2); // steps x observations x taps
    REQUIRE(table.rows[0][0] == "0");
    REQUIRE(table.rows[0][1] == "ap");
    REQUIRE(table.rows[0][2] == "uplink");
}
