#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "physec/attacker.hpp"
#include "physec/auth.hpp"
#include "physec/stats.hpp"

using namespace physec;
using namespace physec::auth;

namespace {

channel::ChannelParams auth_params(double attacker_correlation = 0.0) {
    channel::ChannelParams p;
    p.num_taps = 4;
    p.temporal_correlation = 0.99;
    p.snr_db = 15.0;
    p.attacker_snr_db = 15.0;
    p.attacker_correlation = attacker_correlation;
    return p;
}

// training set with scripted per-step statistics: single-tap estimates whose
// consecutive differences have known magnitudes
TrainingSet scripted_training(const std::vector<double>& delta_magnitudes) {
    TrainingSet ts;
    ts.coherence_steps = 1;
    std::complex<double> h = 0.0;
    ts.estimates.push_back({h});
    ts.steps.push_back(0);
    for (std::size_t i = 0; i < delta_magnitudes.size(); ++i) {
        h += delta_magnitudes[i];
        ts.estimates.push_back({h});
        ts.steps.push_back(static_cast<long>(i + 1));
    }
    return ts;
}

} // namespace

// --- delta feature -------------------------------------------------------------

TEST_CASE("identical estimates give a zero delta", "[auth]") {
    const channel::TapVector h{{1.0, 2.0}, {0.5, -1.0}};
    const DeltaFeature f = delta_feature(h, h);
    for (double v : f.value) REQUIRE(v == 0.0);
}

TEST_CASE("a unit change on one tap shows up there alone", "[auth]") {
    const channel::TapVector prev{{1.0, 1.0}, {2.0, 0.0}, {0.0, 0.0}};
    channel::TapVector now = prev;
    now[0] += std::complex<double>(1.0, 0.0);
    const DeltaFeature f = delta_feature(now, prev);
    REQUIRE(f.value[0] == Catch::Approx(1.0));
    REQUIRE(f.value[1] == 0.0);
    REQUIRE(f.value[2] == 0.0);
}

TEST_CASE("delta matches elementwise recomputation on random pairs", "[auth]") {
    Rng rng(400);
    for (int trial = 0; trial < 50; ++trial) {
        channel::TapVector a, b;
        for (int t = 0; t < 6; ++t) {
            a.push_back(rng.complex_gaussian());
            b.push_back(rng.complex_gaussian());
        }
        const DeltaFeature f = delta_feature(a, b);
        for (std::size_t t = 0; t < a.size(); ++t) {
            const double re = a[t].real() - b[t].real();
            const double im = a[t].imag() - b[t].imag();
            REQUIRE(f.value[t] == Catch::Approx(std::sqrt(re * re + im * im)));
        }
    }
    REQUIRE_THROWS_AS(delta_feature({{1, 0}}, {{1, 0}, {2, 0}}), std::invalid_argument);
}

// --- training-set constraints -----------------------------------------------------

TEST_CASE("estimates spaced beyond the coherence interval are rejected", "[auth]") {
    TrainingSet ts = scripted_training({1.0, 1.0, 1.0});
    ts.coherence_steps = 1;
    REQUIRE_NOTHROW(ts.validate());
    ts.steps = {0, 1, 5, 6}; // gap of 4 > coherence
    REQUIRE_THROWS_AS(ts.validate(), CoherenceError);
    ts.steps = {0, 1, 1, 2}; // not strictly increasing
    REQUIRE_THROWS_AS(ts.validate(), std::invalid_argument);
    ts.estimates.resize(1);
    ts.steps = {0};
    REQUIRE_THROWS_AS(ts.validate(), InsufficientDataError);
}

// --- NPHT ---------------------------------------------------------------------------

TEST_CASE("degenerate training puts the threshold at zero", "[auth]") {
    TrainingSet ts;
    ts.coherence_steps = 1;
    for (int i = 0; i < 10; ++i) {
        ts.estimates.push_back({{2.0, 1.0}});
        ts.steps.push_back(i);
    }
    const NphtDetector det = train_npht(ts, 0.05);
    REQUIRE(det.threshold == 0.0);
    // any nonzero delta exceeds it
    DeltaFeature f;
    f.value = {1e-6};
    REQUIRE(decide(det, f).hypothesis == Hypothesis::attack);
    // a zero delta ties and stays authentic
    f.value = {0.0};
    REQUIRE(decide(det, f).hypothesis == Hypothesis::authentic);
}

TEST_CASE("target_pfa=0.5 sets the threshold at the statistic median", "[auth]") {
    const TrainingSet ts = scripted_training({1.0, 2.0, 3.0, 4.0, 5.0});
    const NphtDetector det = train_npht(ts, 0.5);
    REQUIRE(det.threshold == Catch::Approx(9.0)); // stats {1,4,9,16,25}
}

TEST_CASE("empirical false-alarm rate matches the calibration target", "[auth]") {
    const auto params = auth_params();
    const auto trace = channel::generate_trace(params, 77, 20001);
    const auto obs = trace.of(channel::Observer::ap, channel::Direction::uplink);

    TrainingSet ts;
    ts.coherence_steps = params.effective_coherence_steps();
    for (int i = 0; i < 10000; ++i) {
        ts.estimates.push_back(obs[static_cast<std::size_t>(i)].estimate);
        ts.steps.push_back(obs[static_cast<std::size_t>(i)].step_index);
    }
    const NphtDetector det = train_npht(ts, 0.05);

    int alarms = 0, total = 0;
    for (std::size_t i = 10000; i + 1 < obs.size(); ++i) {
        const auto f = delta_feature(obs[i + 1].estimate, obs[i].estimate);
        alarms += decide(det, f).hypothesis == Hypothesis::attack;
        ++total;
    }
    REQUIRE(static_cast<double>(alarms) / total == Catch::Approx(0.05).margin(0.01));
}

TEST_CASE("train_npht argument validation", "[auth]") {
    const TrainingSet ts = scripted_training({1.0, 2.0});
    REQUIRE_THROWS_AS(train_npht(ts, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(train_npht(ts, 1.0), std::invalid_argument);
    TrainingSet tiny;
    tiny.estimates.push_back({{1.0, 0.0}});
    tiny.steps.push_back(0);
    REQUIRE_THROWS_AS(train_npht(tiny, 0.05), InsufficientDataError);
}

TEST_CASE("untrained detectors refuse to decide", "[auth]") {
    DeltaFeature f;
    f.value = {1.0};
    REQUIRE_THROWS_AS(decide(NphtDetector{}, f), std::logic_error);
    REQUIRE_THROWS_AS(decide(GmmDetector{}, f), std::logic_error);
}

TEST_CASE("gross exceedance is flagged as attack", "[auth]") {
    const TrainingSet ts = scripted_training({1.0, 1.1, 0.9, 1.05, 0.95});
    const NphtDetector det = train_npht(ts, 0.05);
    DeltaFeature f;
    f.value = {std::sqrt(det.threshold * 10.0)};
    const Decision d = decide(det, f);
    REQUIRE(d.hypothesis == Hypothesis::attack);
    REQUIRE(d.statistic == Catch::Approx(det.threshold * 10.0));
}

// --- GMM ----------------------------------------------------------------------------

TEST_CASE("single component on constant data recovers mean and floors variance", "[auth]") {
    std::vector<DeltaFeature> deltas(20);
    for (auto& d : deltas) d.value = {0.7, 0.3};
    GmmTrainConfig cfg;
    cfg.num_components = 1;
    const GmmDetector det = train_gmm(deltas, cfg);
    REQUIRE(det.converged);
    REQUIRE(det.components.size() == 1);
    REQUIRE(det.components[0].mean[0] == Catch::Approx(0.7));
    REQUIRE(det.components[0].mean[1] == Catch::Approx(0.3));
    REQUIRE(det.components[0].var[0] == cfg.variance_floor);
    REQUIRE(det.components[0].var[1] == cfg.variance_floor);
}

TEST_CASE("two well-separated clusters are recovered", "[auth]") {
    Rng rng(401);
    std::vector<DeltaFeature> deltas;
    for (int i = 0; i < 500; ++i) {
        DeltaFeature a;
        a.value = {0.0 + 0.5 * rng.gaussian()};
        deltas.push_back(a);
        DeltaFeature b;
        b.value = {10.0 + 0.5 * rng.gaussian()};
        deltas.push_back(b);
    }
    GmmTrainConfig cfg;
    cfg.num_components = 2;
    const GmmDetector det = train_gmm(deltas, cfg);
    std::vector<double> means{det.components[0].mean[0], det.components[1].mean[0]};
    std::sort(means.begin(), means.end());
    REQUIRE(means[0] == Catch::Approx(0.0).margin(0.2));
    REQUIRE(means[1] == Catch::Approx(10.0).margin(0.2));
    REQUIRE(det.components[0].weight + det.components[1].weight == Catch::Approx(1.0));
}

TEST_CASE("EM log-likelihood never decreases", "[auth]") {
    Rng rng(402);
    std::vector<DeltaFeature> deltas;
    for (int i = 0; i < 400; ++i) {
        DeltaFeature d;
        d.value = {rng.gaussian() + (i % 3 == 0 ? 4.0 : 0.0), std::abs(rng.gaussian())};
        deltas.push_back(d);
    }
    GmmTrainConfig cfg;
    cfg.num_components = 3;
    const GmmDetector det = train_gmm(deltas, cfg);
    REQUIRE(det.train_log_likelihood.size() >= 2);
    for (std::size_t i = 1; i < det.train_log_likelihood.size(); ++i)
        REQUIRE(det.train_log_likelihood[i] >= det.train_log_likelihood[i - 1] - 1e-9);
}

TEST_CASE("iteration starvation returns best-so-far with a warning flag", "[auth]") {
    Rng rng(403);
    std::vector<DeltaFeature> deltas;
    for (int i = 0; i < 100; ++i) {
        DeltaFeature d;
        d.value = {rng.gaussian()};
        deltas.push_back(d);
    }
    GmmTrainConfig cfg;
    cfg.num_components = 2;
    cfg.max_iter = 1;
    const GmmDetector det = train_gmm(deltas, cfg);
    REQUIRE_FALSE(det.converged);
    REQUIRE(det.trained);
}

TEST_CASE("train_gmm needs ten samples per component", "[auth]") {
    std::vector<DeltaFeature> deltas(19);
    for (auto& d : deltas) d.value = {1.0};
    GmmTrainConfig cfg;
    cfg.num_components = 2;
    REQUIRE_THROWS_AS(train_gmm(deltas, cfg), InsufficientDataError);
    cfg.num_components = 0;
    REQUIRE_THROWS_AS(train_gmm(deltas, cfg), std::invalid_argument);
}

TEST_CASE("GMM decision flags low-likelihood features", "[auth]") {
    Rng rng(404);
    std::vector<DeltaFeature> deltas;
    for (int i = 0; i < 200; ++i) {
        DeltaFeature d;
        d.value = {1.0 + 0.1 * rng.gaussian()};
        deltas.push_back(d);
    }
    GmmTrainConfig cfg;
    cfg.num_components = 1;
    cfg.target_pfa = 0.05;
    const GmmDetector det = train_gmm(deltas, cfg);
    DeltaFeature outlier;
    outlier.value = {25.0};
    REQUIRE(decide(det, outlier).hypothesis == Hypothesis::attack);
    DeltaFeature typical; // stays authentic
    typical.value = {1.0};
    REQUIRE(decide(det, typical).hypothesis == Hypothesis::authentic);
}

// --- ROC -----------------------------------------------------------------------------

TEST_CASE("chance-level statistics give AUC near one half", "[auth]") {
    Rng rng(405);
    std::vector<double> a, b;
    for (int i = 0; i < 10000; ++i) {
        a.push_back(rng.gaussian());
        b.push_back(rng.gaussian());
    }
    const RocCurve curve = evaluate_roc(DetectorFamily::npht, a, b);
    REQUIRE(curve.auc == Catch::Approx(0.5).margin(0.05));
}

TEST_CASE("perfect separation gives AUC one and a (0,1) operating point", "[auth]") {
    const RocCurve curve =
        evaluate_roc(DetectorFamily::npht, {0.1, 0.2, 0.3}, {1.0, 1.1, 1.2});
    REQUIRE(curve.auc == Catch::Approx(1.0));
    bool has_perfect = false;
    for (const auto& p : curve.points) has_perfect |= (p.p_fa == 0.0 && p.p_d == 1.0);
    REQUIRE(has_perfect);
    REQUIRE(curve.p_d_at(0.0) == 1.0);
}

TEST_CASE("single statistic pair enumerates by hand", "[auth]") {
    const RocCurve curve = evaluate_roc(DetectorFamily::npht, {1.0}, {2.0});
    bool has_01 = false;
    for (const auto& p : curve.points) has_01 |= (p.p_fa == 0.0 && p.p_d == 1.0);
    REQUIRE(has_01);
    REQUIRE(curve.auc == Catch::Approx(1.0));
}

TEST_CASE("ROC is monotone along sorted false-alarm rates", "[auth]") {
    Rng rng(406);
    std::vector<double> a, b;
    for (int i = 0; i < 500; ++i) {
        a.push_back(rng.gaussian());
        b.push_back(rng.gaussian() + 0.8);
    }
    const RocCurve curve = evaluate_roc(DetectorFamily::npht, a, b);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        REQUIRE(curve.points[i].p_fa >= curve.points[i - 1].p_fa);
        REQUIRE(curve.points[i].p_d >= curve.points[i - 1].p_d - 1e-12);
    }
    REQUIRE(curve.auc > 0.5);
}

TEST_CASE("GMM orientation flags the low-likelihood side", "[auth]") {
    // log-likelihoods: attacks are LOWER; AUC must still exceed chance
    const RocCurve curve =
        evaluate_roc(DetectorFamily::gmm, {-1.0, -1.2, -0.8}, {-9.0, -8.5, -10.0});
    REQUIRE(curve.auc == Catch::Approx(1.0));
}

TEST_CASE("empty statistic lists are rejected", "[auth]") {
    REQUIRE_THROWS_AS(evaluate_roc(DetectorFamily::npht, {}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(evaluate_roc(DetectorFamily::npht, {1.0}, {}), std::invalid_argument);
}

TEST_CASE("periodic retraining tracks a drifting statistic scale", "[auth]") {
    Rng rng(408);
    auto delta_with_scale = [&](double scale) {
        DeltaFeature f;
        f.value = {scale * std::abs(rng.gaussian()), scale * std::abs(rng.gaussian())};
        return f;
    };
    TrainingSet ts;
    ts.coherence_steps = 1;
    std::complex<double> acc0 = 0.0, acc1 = 0.0;
    for (int i = 0; i < 2000; ++i) {
        // scripted estimates whose per-tap deltas are unit half-normals
        ts.estimates.push_back({acc0, acc1});
        ts.steps.push_back(i);
        acc0 += std::abs(rng.gaussian());
        acc1 += std::abs(rng.gaussian());
    }
    const NphtDetector det = train_npht(ts, 0.05);

    // after the statistic scale doubles, the static detector over-alarms;
    // the retraining one consumes periodically labeled samples (messages
    // verified by higher layers) and recalibrates to the 5% target
    OnlineNphtAuthenticator online(det, 0.05, 200);
    for (int i = 0; i < 2000; ++i) online.observe_authentic(delta_with_scale(2.0));
    REQUIRE(online.retrain_count() > 0);
    REQUIRE(online.detector().threshold > det.threshold);

    int static_alarms = 0, online_alarms = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const auto f = delta_with_scale(2.0);
        static_alarms += decide(det, f).hypothesis == Hypothesis::attack;
        online_alarms += online.decide(f).hypothesis == Hypothesis::attack;
    }
    REQUIRE(static_alarms > online_alarms);
    REQUIRE(static_cast<double>(online_alarms) / n == Catch::Approx(0.05).margin(0.03));
    // retraining disabled: the threshold never moves
    OnlineNphtAuthenticator frozen(det, 0.05, 0);
    for (int i = 0; i < 500; ++i) frozen.observe_authentic(delta_with_scale(2.0));
    REQUIRE(frozen.retrain_count() == 0);
    REQUIRE(frozen.detector().threshold == det.threshold);
    REQUIRE_THROWS_AS(OnlineNphtAuthenticator(NphtDetector{}, 0.05, 10), std::logic_error);
}

TEST_CASE("identical-channel attacker is undetectable (degeneracy)", "[auth]") {
    const auto params = auth_params(1.0); // attacker on the legitimate channel
    const auto trace = channel::generate_trace(params, 78, 2001);
    const auto obs = trace.of(channel::Observer::ap, channel::Direction::uplink);
    std::vector<double> authentic;
    for (std::size_t i = 1000; i + 1 < obs.size(); ++i)
        authentic.push_back(npht_statistic(delta_feature(obs[i + 1].estimate, obs[i].estimate)));
    Rng rng(407);
    std::vector<double> attack;
    for (const auto& f : attacker::spoof_delta_features(params, 1000, rng))
        attack.push_back(npht_statistic(f));
    const RocCurve curve = evaluate_roc(DetectorFamily::npht, authentic, attack);
    REQUIRE(curve.auc == Catch::Approx(0.5).margin(0.05));
}
