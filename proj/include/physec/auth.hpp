#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "physec/channel.hpp"
#include "physec/errors.hpp"
#include "physec/stats.hpp"

namespace physec::auth {

enum class Hypothesis { authentic, attack }; // H0 / H1

struct Decision {
    Hypothesis hypothesis = Hypothesis::authentic;
    double statistic = 0.0;
};

struct DeltaFeature {
    std::vector<double> value; // per-tap |H(m) - H(m-1)|
    long step = 0;
};

inline DeltaFeature delta_feature(const channel::TapVector& h_now,
                                  const channel::TapVector& h_prev, long step = 0) {
    if (h_now.size() != h_prev.size())
        throw std::invalid_argument("delta_feature: estimate length mismatch");
    DeltaFeature f;
    f.step = step;
    f.value.resize(h_now.size());
    for (std::size_t i = 0; i < h_now.size(); ++i) f.value[i] = std::abs(h_now[i] - h_prev[i]);
    return f;
}

// Authentic, cryptographically verified estimates collected during the
// training phase. Consecutive estimates must sit inside one coherence
// interval, otherwise channel drift is indistinguishable from an attack.
struct TrainingSet {
    std::vector<channel::TapVector> estimates;
    std::vector<long> steps;
    int coherence_steps = 1;

    void validate() const {
        if (estimates.size() < 2)
            throw InsufficientDataError("TrainingSet: need at least two estimates");
        if (steps.size() != estimates.size())
            throw std::invalid_argument("TrainingSet: steps/estimates size mismatch");
        for (std::size_t i = 1; i < steps.size(); ++i) {
            if (steps[i] <= steps[i - 1])
                throw std::invalid_argument("TrainingSet: steps must be strictly increasing");
            if (steps[i] - steps[i - 1] > coherence_steps)
                throw CoherenceError("TrainingSet: estimates spaced beyond the coherence interval");
        }
    }

    std::vector<DeltaFeature> deltas() const {
        validate();
        std::vector<DeltaFeature> out;
        out.reserve(estimates.size() - 1);
        for (std::size_t i = 1; i < estimates.size(); ++i)
            out.push_back(delta_feature(estimates[i], estimates[i - 1], steps[i]));
        return out;
    }
};

inline TrainingSet training_from_trace(const channel::ChannelTrace& trace, int count) {
    TrainingSet ts;
    ts.coherence_steps = trace.params.effective_coherence_steps();
    const auto obs = trace.of(channel::Observer::ap, channel::Direction::uplink);
    if (static_cast<int>(obs.size()) < count)
        throw InsufficientDataError("training_from_trace: trace shorter than requested");
    for (int i = 0; i < count; ++i) {
        ts.estimates.push_back(obs[static_cast<std::size_t>(i)].estimate);
        ts.steps.push_back(obs[static_cast<std::size_t>(i)].step_index);
    }
    return ts;
}

// --- Neyman-Pearson threshold detector -------------------------------------

struct NphtDetector {
    double threshold = 0.0;
    double statistic_normalizer = 1.0;
    bool trained = false;
};

inline double npht_statistic(const DeltaFeature& f, double normalizer = 1.0) {
    double s = 0.0;
    for (double v : f.value) s += v * v;
    return s / normalizer;
}

// Threshold at the empirical (1 - target_pfa) quantile of the training
// statistic.
inline NphtDetector train_npht(const TrainingSet& training, double target_pfa,
                               double statistic_normalizer = 1.0) {
    if (target_pfa <= 0.0 || target_pfa >= 1.0)
        throw std::invalid_argument("train_npht: target_pfa outside (0,1)");
    const auto deltas = training.deltas();
    std::vector<double> stats;
    stats.reserve(deltas.size());
    for (const auto& d : deltas) stats.push_back(npht_statistic(d, statistic_normalizer));
    NphtDetector det;
    det.statistic_normalizer = statistic_normalizer;
    det.threshold = quantile(stats, 1.0 - target_pfa);
    det.trained = true;
    return det;
}

inline Decision decide(const NphtDetector& det, const DeltaFeature& feature) {
    if (!det.trained) throw std::logic_error("decide: detector not trained");
    Decision d;
    d.statistic = npht_statistic(feature, det.statistic_normalizer);
    // tie goes to H0 (favor availability)
    d.hypothesis = d.statistic > det.threshold ? Hypothesis::attack : Hypothesis::authentic;
    return d;
}

// --- Gaussian mixture detector ----------------------------------------------

struct GmmComponent {
    double weight = 1.0;
    std::vector<double> mean;
    std::vector<double> var; // diagonal covariance
};

struct GmmDetector {
    std::vector<GmmComponent> components;
    int num_components = 0;
    double log_likelihood_threshold = 0.0;
    bool trained = false;
    bool converged = false;
    std::vector<double> train_log_likelihood; // per EM iteration
};

struct GmmTrainConfig {
    int num_components = 2;
    int max_iter = 200;
    double tol = 1e-8;
    double variance_floor = 1e-6;
    double target_pfa = 0.05;
};

inline double gmm_log_likelihood(const GmmDetector& det, const std::vector<double>& x) {
    if (!det.trained) throw std::logic_error("gmm_log_likelihood: detector not trained");
    constexpr double log2pi = 1.8378770664093453;
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(det.components.size());
    for (std::size_t k = 0; k < det.components.size(); ++k) {
        const auto& c = det.components[k];
        double ll = std::log(c.weight);
        for (std::size_t d = 0; d < x.size(); ++d) {
            const double diff = x[d] - c.mean[d];
            ll -= 0.5 * (log2pi + std::log(c.var[d]) + diff * diff / c.var[d]);
        }
        terms[k] = ll;
        max_term = std::max(max_term, ll);
    }
    double s = 0.0;
    for (double t : terms) s += std::exp(t - max_term);
    return max_term + std::log(s);
}

// EM fit on authentic delta features with diagonal covariances. The variance
// floor keeps components alive on (near-)degenerate data. Initialization is
// deterministic: component means are picked at spread quantiles of the
// samples ordered by L2 norm.
inline GmmDetector train_gmm(const std::vector<DeltaFeature>& deltas, const GmmTrainConfig& cfg) {
    if (cfg.num_components < 1) throw std::invalid_argument("train_gmm: num_components < 1");
    if (cfg.target_pfa <= 0.0 || cfg.target_pfa >= 1.0)
        throw std::invalid_argument("train_gmm: target_pfa outside (0,1)");
    const std::size_t n = deltas.size();
    if (n < 10 * static_cast<std::size_t>(cfg.num_components))
        throw InsufficientDataError("train_gmm: need at least 10 samples per component");
    const std::size_t dim = deltas[0].value.size();
    std::vector<const std::vector<double>*> data;
    data.reserve(n);
    for (const auto& d : deltas) {
        if (d.value.size() != dim) throw std::invalid_argument("train_gmm: mixed feature sizes");
        data.push_back(&d.value);
    }

    GmmDetector det;
    det.num_components = cfg.num_components;
    const auto kk = static_cast<std::size_t>(cfg.num_components);

    std::vector<double> global_var(dim, 0.0), global_mean(dim, 0.0);
    for (const auto* x : data)
        for (std::size_t d = 0; d < dim; ++d) global_mean[d] += (*x)[d];
    for (auto& v : global_mean) v /= static_cast<double>(n);
    for (const auto* x : data)
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = (*x)[d] - global_mean[d];
            global_var[d] += diff * diff;
        }
    for (auto& v : global_var) v = std::max(v / static_cast<double>(n), cfg.variance_floor);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double na = 0.0, nb = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            na += (*data[a])[d] * (*data[a])[d];
            nb += (*data[b])[d] * (*data[b])[d];
        }
        if (na != nb) return na < nb;
        return a < b;
    });
    det.components.resize(kk);
    for (std::size_t k = 0; k < kk; ++k) {
        const auto pick = order[(2 * k + 1) * (n - 1) / (2 * kk)];
        det.components[k].weight = 1.0 / static_cast<double>(kk);
        det.components[k].mean = *data[pick];
        det.components[k].var = global_var;
    }
    det.trained = true; // enables gmm_log_likelihood during fitting

    std::vector<std::vector<double>> resp(n, std::vector<double>(kk, 0.0));
    constexpr double log2pi = 1.8378770664093453;
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        // E-step with the current parameters; accumulates the data
        // log-likelihood at those parameters.
        double total_ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double max_term = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < kk; ++k) {
                const auto& c = det.components[k];
                double ll = std::log(c.weight);
                for (std::size_t d = 0; d < dim; ++d) {
                    const double diff = (*data[i])[d] - c.mean[d];
                    ll -= 0.5 * (log2pi + std::log(c.var[d]) + diff * diff / c.var[d]);
                }
                resp[i][k] = ll;
                max_term = std::max(max_term, ll);
            }
            double s = 0.0;
            for (std::size_t k = 0; k < kk; ++k) s += std::exp(resp[i][k] - max_term);
            const double log_px = max_term + std::log(s);
            total_ll += log_px;
            for (std::size_t k = 0; k < kk; ++k) resp[i][k] = std::exp(resp[i][k] - log_px);
        }
        det.train_log_likelihood.push_back(total_ll);
        if (det.train_log_likelihood.size() >= 2) {
            const auto& h = det.train_log_likelihood;
            if (std::abs(h[h.size() - 1] - h[h.size() - 2]) < cfg.tol) {
                det.converged = true;
                break;
            }
        }

        // M-step
        for (std::size_t k = 0; k < kk; ++k) {
            double nk = 0.0;
            for (std::size_t i = 0; i < n; ++i) nk += resp[i][k];
            if (nk < 1e-12) continue; // starved component, kept as-is
            auto& c = det.components[k];
            c.weight = nk / static_cast<double>(n);
            std::fill(c.mean.begin(), c.mean.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t d = 0; d < dim; ++d) c.mean[d] += resp[i][k] * (*data[i])[d];
            for (auto& m : c.mean) m /= nk;
            std::fill(c.var.begin(), c.var.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t d = 0; d < dim; ++d) {
                    const double diff = (*data[i])[d] - c.mean[d];
                    c.var[d] += resp[i][k] * diff * diff;
                }
            for (auto& v : c.var) v = std::max(v / nk, cfg.variance_floor);
        }
    }

    std::vector<double> lls;
    lls.reserve(n);
    for (const auto* x : data) lls.push_back(gmm_log_likelihood(det, *x));
    det.log_likelihood_threshold = quantile(lls, cfg.target_pfa);
    return det;
}

inline Decision decide(const GmmDetector& det, const DeltaFeature& feature) {
    if (!det.trained) throw std::logic_error("decide: detector not trained");
    Decision d;
    d.statistic = gmm_log_likelihood(det, feature.value);
    d.hypothesis =
        d.statistic < det.log_likelihood_threshold ? Hypothesis::attack : Hypothesis::authentic;
    return d;
}

// --- periodic retraining (alternative to the delta-feature path) --------------

// Wraps an NPHT detector and recalibrates its threshold from a sliding
// window of *labeled* authentic observations (messages verified by higher
// layers), every retrain_interval such observations. Self-labeling by the
// detector's own accepts would truncate the window at the threshold and
// drive it downward, so retraining consumes only the labeled stream.
// retrain_interval = 0 disables updates.
class OnlineNphtAuthenticator {
public:
    OnlineNphtAuthenticator(NphtDetector detector, double target_pfa, int retrain_interval,
                            std::size_t window_capacity = 1024)
        : detector_(detector), target_pfa_(target_pfa), retrain_interval_(retrain_interval),
          window_capacity_(window_capacity) {
        if (!detector.trained) throw std::logic_error("OnlineNphtAuthenticator: untrained detector");
        if (target_pfa <= 0.0 || target_pfa >= 1.0)
            throw std::invalid_argument("OnlineNphtAuthenticator: target_pfa outside (0,1)");
        if (retrain_interval < 0)
            throw std::invalid_argument("OnlineNphtAuthenticator: negative retrain_interval");
    }

    const NphtDetector& detector() const { return detector_; }
    int retrain_count() const { return retrain_count_; }

    Decision decide(const DeltaFeature& feature) const { return auth::decide(detector_, feature); }

    // Cryptographically verified authentic sample; may trigger a threshold
    // update.
    void observe_authentic(const DeltaFeature& feature) {
        window_.push_back(npht_statistic(feature, detector_.statistic_normalizer));
        if (window_.size() > window_capacity_) window_.erase(window_.begin());
        if (retrain_interval_ > 0 && ++since_retrain_ >= retrain_interval_ &&
            window_.size() >= 8) {
            detector_.threshold = quantile(window_, 1.0 - target_pfa_);
            since_retrain_ = 0;
            ++retrain_count_;
        }
    }

private:
    NphtDetector detector_;
    double target_pfa_;
    int retrain_interval_;
    std::size_t window_capacity_;
    std::vector<double> window_;
    int since_retrain_ = 0;
    int retrain_count_ = 0;
};

// --- ROC evaluation ----------------------------------------------------------

enum class DetectorFamily { npht, gmm };

struct RocPoint {
    double threshold = 0.0;
    double p_fa = 0.0;
    double p_d = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points; // sorted by p_fa
    double auc = 0.0;

    // Best detection probability achievable at false-alarm rate <= pfa.
    double p_d_at(double pfa) const {
        double best = 0.0;
        for (const auto& p : points)
            if (p.p_fa <= pfa) best = std::max(best, p.p_d);
        return best;
    }
};

// Threshold sweep over all distinct statistic values. NPHT flags statistics
// above the threshold, GMM (a log-likelihood) below it.
inline RocCurve evaluate_roc(DetectorFamily family, std::vector<double> authentic_stats,
                             std::vector<double> attack_stats) {
    if (authentic_stats.empty() || attack_stats.empty())
        throw std::invalid_argument("evaluate_roc: empty statistic list");
    const double sign = (family == DetectorFamily::gmm) ? -1.0 : 1.0;
    for (auto& s : authentic_stats) s *= sign;
    for (auto& s : attack_stats) s *= sign;
    std::sort(authentic_stats.begin(), authentic_stats.end());
    std::sort(attack_stats.begin(), attack_stats.end());

    std::vector<double> thresholds;
    thresholds.reserve(authentic_stats.size() + attack_stats.size() + 2);
    thresholds.push_back(std::numeric_limits<double>::infinity());
    {
        std::vector<double> all(authentic_stats);
        all.insert(all.end(), attack_stats.begin(), attack_stats.end());
        std::sort(all.begin(), all.end(), std::greater<>());
        all.erase(std::unique(all.begin(), all.end()), all.end());
        thresholds.insert(thresholds.end(), all.begin(), all.end());
    }
    thresholds.push_back(-std::numeric_limits<double>::infinity());

    auto frac_above = [](const std::vector<double>& sorted, double t) {
        // strictly greater-than, matching the H1 decision rule
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
        return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
    };

    RocCurve curve;
    curve.points.reserve(thresholds.size());
    for (double t : thresholds) {
        RocPoint p;
        p.threshold = sign * t;
        p.p_fa = frac_above(authentic_stats, t);
        p.p_d = frac_above(attack_stats, t);
        curve.points.push_back(p);
    }
    std::sort(curve.points.begin(), curve.points.end(), [](const RocPoint& a, const RocPoint& b) {
        if (a.p_fa != b.p_fa) return a.p_fa < b.p_fa;
        return a.p_d < b.p_d;
    });
    for (std::size_t i = 1; i + 1 < curve.points.size(); ++i)
        curve.points[i].p_d = std::max(curve.points[i].p_d, curve.points[i - 1].p_d);
    double auc = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        auc += 0.5 * (curve.points[i].p_d + curve.points[i - 1].p_d) *
               (curve.points[i].p_fa - curve.points[i - 1].p_fa);
    curve.auc = auc;
    return curve;
}

} // namespace physec::auth
