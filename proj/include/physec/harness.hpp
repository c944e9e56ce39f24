#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "physec/attacker.hpp"
#include "physec/auth.hpp"
#include "physec/channel.hpp"
#include "physec/csv.hpp"
#include "physec/errors.hpp"
#include "physec/plugtrust.hpp"
#include "physec/secure_channel.hpp"
#include "physec/skg.hpp"
#include "physec/version.hpp"

namespace physec::harness {

using json = nlohmann::json;

enum class Scenario { skg_sweep, auth_roc, overhead_sweep, protocol_run, attack_suite };

inline const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::skg_sweep: return "skg_sweep";
        case Scenario::auth_roc: return "auth_roc";
        case Scenario::overhead_sweep: return "overhead_sweep";
        case Scenario::protocol_run: return "protocol_run";
        default: return "attack_suite";
    }
}

struct AuthConfig {
    auth::DetectorFamily family = auth::DetectorFamily::npht;
    double target_pfa = 0.05;
    int training_messages = 1000;
    int test_messages = 1000;
    int retrain_interval = 0; // steps between threshold updates; 0 = static
    auth::GmmTrainConfig gmm;
};

struct OverheadSpec {
    long l_bits = 64;
    long n_min = 64;
    long n_max = 2000;
    long step = 8;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::overhead_sweep;
    channel::ChannelParams channel;
    std::optional<skg::SkgConfig> skg;
    std::optional<AuthConfig> auth;
    std::optional<attacker::AttackerConfig> attacker;
    std::vector<double> snr_sweep_db;
    OverheadSpec overhead;
    int trials = 1;
    uint64_t seed = 0;
    std::string output_path; // file name; empty = "<scenario>.csv"

    std::string output_name() const {
        return output_path.empty() ? std::string(to_string(scenario)) + ".csv" : output_path;
    }
};

// --- strict config parsing ------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for \"" + key + "\" in " + where);
    }
}

inline channel::ChannelParams parse_channel(const json& obj) {
    reject_unknown_keys(obj,
                        {"num_taps", "temporal_correlation", "coherence_steps",
                         "carrier_frequency_hz", "probe_interval_s", "snr_db", "attacker_snr_db",
                         "attacker_correlation"},
                        "channel");
    channel::ChannelParams p;
    p.num_taps = get_or(obj, "num_taps", p.num_taps, "channel");
    p.temporal_correlation = get_or(obj, "temporal_correlation", p.temporal_correlation, "channel");
    p.coherence_steps = get_or(obj, "coherence_steps", p.coherence_steps, "channel");
    p.carrier_frequency_hz = get_or(obj, "carrier_frequency_hz", p.carrier_frequency_hz, "channel");
    p.probe_interval_s = get_or(obj, "probe_interval_s", p.probe_interval_s, "channel");
    p.snr_db = get_or(obj, "snr_db", p.snr_db, "channel");
    p.attacker_snr_db = get_or(obj, "attacker_snr_db", p.attacker_snr_db, "channel");
    p.attacker_correlation = get_or(obj, "attacker_correlation", p.attacker_correlation, "channel");
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("channel: ") + e.what());
    }
    return p;
}

inline skg::SkgConfig parse_skg(const json& obj) {
    reject_unknown_keys(obj,
                        {"num_measurements", "bits_per_measurement", "key_length_bits",
                         "enhancement_window", "guard_band_alpha", "code", "amplified_key_bits"},
                        "skg");
    skg::SkgConfig c;
    c.num_measurements = get_or(obj, "num_measurements", c.num_measurements, "skg");
    c.bits_per_measurement = get_or(obj, "bits_per_measurement", c.bits_per_measurement, "skg");
    c.key_length_bits = get_or(obj, "key_length_bits", c.key_length_bits, "skg");
    c.enhancement_window = get_or(obj, "enhancement_window", c.enhancement_window, "skg");
    c.guard_band_alpha = get_or(obj, "guard_band_alpha", c.guard_band_alpha, "skg");
    c.amplified_key_bits = get_or(obj, "amplified_key_bits", c.amplified_key_bits, "skg");
    const std::string code = get_or<std::string>(obj, "code", "hamming74", "skg");
    if (code != "hamming74") throw ConfigError("skg: unsupported code \"" + code + "\"");
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("skg: ") + e.what());
    }
    return c;
}

inline AuthConfig parse_auth(const json& obj) {
    reject_unknown_keys(obj,
                        {"detector", "target_pfa", "training_messages", "test_messages",
                         "retrain_interval", "gmm_components", "gmm_max_iter", "gmm_tol",
                         "gmm_variance_floor"},
                        "auth");
    AuthConfig a;
    const std::string family = get_or<std::string>(obj, "detector", "npht", "auth");
    if (family == "npht")
        a.family = auth::DetectorFamily::npht;
    else if (family == "gmm")
        a.family = auth::DetectorFamily::gmm;
    else
        throw ConfigError("auth: unknown detector \"" + family + "\"");
    a.target_pfa = get_or(obj, "target_pfa", a.target_pfa, "auth");
    a.training_messages = get_or(obj, "training_messages", a.training_messages, "auth");
    a.test_messages = get_or(obj, "test_messages", a.test_messages, "auth");
    a.retrain_interval = get_or(obj, "retrain_interval", a.retrain_interval, "auth");
    if (a.retrain_interval < 0) throw ConfigError("auth: retrain_interval must be non-negative");
    a.gmm.num_components = get_or(obj, "gmm_components", a.gmm.num_components, "auth");
    a.gmm.max_iter = get_or(obj, "gmm_max_iter", a.gmm.max_iter, "auth");
    a.gmm.tol = get_or(obj, "gmm_tol", a.gmm.tol, "auth");
    a.gmm.variance_floor = get_or(obj, "gmm_variance_floor", a.gmm.variance_floor, "auth");
    a.gmm.target_pfa = a.target_pfa;
    if (a.target_pfa <= 0.0 || a.target_pfa >= 1.0)
        throw ConfigError("auth: target_pfa outside (0,1)");
    if (a.training_messages < 2) throw ConfigError("auth: training_messages must be >= 2");
    if (a.test_messages < 1) throw ConfigError("auth: test_messages must be >= 1");
    return a;
}

inline attacker::AttackerConfig parse_attacker(const json& obj) {
    reject_unknown_keys(obj, {"correlation_to_legit", "snr_db", "script"}, "attacker");
    attacker::AttackerConfig a;
    a.correlation_to_legit = get_or(obj, "correlation_to_legit", a.correlation_to_legit, "attacker");
    a.snr_db = get_or(obj, "snr_db", a.snr_db, "attacker");
    if (obj.contains("script")) {
        const json& script = obj.at("script");
        if (!script.is_array()) throw ConfigError("attacker: script must be an array");
        for (const auto& item : script) {
            reject_unknown_keys(item, {"action", "step", "recorded_index"}, "attacker.script");
            const std::string action = get_or<std::string>(item, "action", "", "attacker.script");
            if (action == "eavesdrop")
                a.script.emplace_back(attacker::Eavesdrop{});
            else if (action == "spoof_frame")
                a.script.emplace_back(
                    attacker::SpoofFrame{get_or<long>(item, "step", 0, "attacker.script")});
            else if (action == "replay_frame") {
                attacker::ReplayFrame r{get_or<int>(item, "recorded_index", 0, "attacker.script"),
                                        get_or<long>(item, "step", 0, "attacker.script")};
                if (r.recorded_index < 0)
                    throw ConfigError("attacker.script: recorded_index must be non-negative");
                a.script.emplace_back(r);
            }
            else
                throw ConfigError("attacker: unknown action \"" + action + "\"");
        }
    }
    try {
        a.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("attacker: ") + e.what());
    }
    return a;
}

inline OverheadSpec parse_overhead(const json& obj) {
    reject_unknown_keys(obj, {"l_bits", "n_min", "n_max", "step"}, "overhead");
    OverheadSpec o;
    o.l_bits = get_or(obj, "l_bits", o.l_bits, "overhead");
    o.n_min = get_or(obj, "n_min", o.n_min, "overhead");
    o.n_max = get_or(obj, "n_max", o.n_max, "overhead");
    o.step = get_or(obj, "step", o.step, "overhead");
    if (o.l_bits < 0) throw ConfigError("overhead: l_bits must be non-negative");
    if (o.n_min < 1 || o.n_max < o.n_min || o.step < 1)
        throw ConfigError("overhead: need 1 <= n_min <= n_max and step >= 1");
    return o;
}

} // namespace detail

inline ExperimentConfig validate_config(const std::string& raw) {
    json root;
    try {
        root = json::parse(raw);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");
    detail::reject_unknown_keys(root,
                                {"scenario", "seed", "trials", "output", "channel", "skg", "auth",
                                 "attacker", "snr_sweep_db", "overhead"},
                                "config root");
    ExperimentConfig cfg;
    const std::string scenario = detail::get_or<std::string>(root, "scenario", "", "config root");
    if (scenario == "skg_sweep")
        cfg.scenario = Scenario::skg_sweep;
    else if (scenario == "auth_roc")
        cfg.scenario = Scenario::auth_roc;
    else if (scenario == "overhead_sweep")
        cfg.scenario = Scenario::overhead_sweep;
    else if (scenario == "protocol_run")
        cfg.scenario = Scenario::protocol_run;
    else if (scenario == "attack_suite")
        cfg.scenario = Scenario::attack_suite;
    else
        throw ConfigError("scenario must be one of skg_sweep, auth_roc, overhead_sweep, "
                          "protocol_run, attack_suite (got \"" +
                          scenario + "\")");

    cfg.seed = detail::get_or<uint64_t>(root, "seed", 0, "config root");
    cfg.trials = detail::get_or<int>(root, "trials", 1, "config root");
    if (cfg.trials < 1) throw ConfigError("trials must be positive");
    cfg.output_path = detail::get_or<std::string>(root, "output", "", "config root");

    if (root.contains("channel")) cfg.channel = detail::parse_channel(root.at("channel"));
    if (root.contains("skg")) cfg.skg = detail::parse_skg(root.at("skg"));
    if (root.contains("auth")) cfg.auth = detail::parse_auth(root.at("auth"));
    if (root.contains("attacker")) cfg.attacker = detail::parse_attacker(root.at("attacker"));
    if (root.contains("snr_sweep_db")) {
        try {
            cfg.snr_sweep_db = root.at("snr_sweep_db").get<std::vector<double>>();
        } catch (const json::exception&) {
            throw ConfigError("snr_sweep_db must be an array of numbers");
        }
    }
    if (root.contains("overhead")) cfg.overhead = detail::parse_overhead(root.at("overhead"));

    // scenario-specific requirements
    if (cfg.scenario == Scenario::skg_sweep && !cfg.skg)
        throw ConfigError("skg_sweep requires an \"skg\" section");
    if (cfg.scenario == Scenario::auth_roc && !cfg.auth)
        throw ConfigError("auth_roc requires an \"auth\" section");
    if (cfg.scenario == Scenario::attack_suite && !cfg.attacker)
        throw ConfigError("attack_suite requires an \"attacker\" section");
    return cfg;
}

// Canonical JSON of the effective configuration; hashed into the CSV
// metadata line.
inline json to_json(const ExperimentConfig& cfg) {
    json root;
    root["scenario"] = to_string(cfg.scenario);
    root["seed"] = cfg.seed;
    root["trials"] = cfg.trials;
    if (!cfg.output_path.empty()) root["output"] = cfg.output_path;
    root["channel"] = {{"num_taps", cfg.channel.num_taps},
                       {"temporal_correlation", cfg.channel.temporal_correlation},
                       {"coherence_steps", cfg.channel.coherence_steps},
                       {"carrier_frequency_hz", cfg.channel.carrier_frequency_hz},
                       {"probe_interval_s", cfg.channel.probe_interval_s},
                       {"snr_db", cfg.channel.snr_db},
                       {"attacker_snr_db", cfg.channel.attacker_snr_db},
                       {"attacker_correlation", cfg.channel.attacker_correlation}};
    if (cfg.skg)
        root["skg"] = {{"num_measurements", cfg.skg->num_measurements},
                       {"bits_per_measurement", cfg.skg->bits_per_measurement},
                       {"enhancement_window", cfg.skg->enhancement_window},
                       {"guard_band_alpha", cfg.skg->guard_band_alpha},
                       {"amplified_key_bits", cfg.skg->amplified_key_bits},
                       {"code", "hamming74"}};
    if (cfg.auth)
        root["auth"] = {{"detector", cfg.auth->family == auth::DetectorFamily::npht ? "npht" : "gmm"},
                        {"target_pfa", cfg.auth->target_pfa},
                        {"training_messages", cfg.auth->training_messages},
                        {"test_messages", cfg.auth->test_messages},
                        {"retrain_interval", cfg.auth->retrain_interval},
                        {"gmm_components", cfg.auth->gmm.num_components},
                        {"gmm_max_iter", cfg.auth->gmm.max_iter},
                        {"gmm_tol", cfg.auth->gmm.tol},
                        {"gmm_variance_floor", cfg.auth->gmm.variance_floor}};
    if (cfg.attacker)
        root["attacker"] = {{"correlation_to_legit", cfg.attacker->correlation_to_legit},
                            {"snr_db", cfg.attacker->snr_db},
                            {"script_actions", cfg.attacker->script.size()}};
    if (!cfg.snr_sweep_db.empty()) root["snr_sweep_db"] = cfg.snr_sweep_db;
    if (cfg.scenario == Scenario::overhead_sweep)
        root["overhead"] = {{"l_bits", cfg.overhead.l_bits},
                            {"n_min", cfg.overhead.n_min},
                            {"n_max", cfg.overhead.n_max},
                            {"step", cfg.overhead.step}};
    return root;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    const std::string dump = to_json(cfg).dump();
    const Digest256 d = sha256(as_bytes(dump));
    return hex(std::span<const uint8_t>(d.data(), 8));
}

inline std::string metadata_line(const ExperimentConfig& cfg) {
    return std::string("physec-lab ") + version_string + " seed=" + std::to_string(cfg.seed) +
           " config=" + config_hash(cfg);
}

// --- trial execution -------------------------------------------------------------

namespace detail {

// Runs fn(trial) for every trial index, possibly across threads; results are
// stored by index so scheduling never changes the output order.
template <typename Row>
std::vector<Row> run_indexed(int count, int parallel, const std::function<Row(int)>& fn) {
    std::vector<Row> out(static_cast<std::size_t>(count));
    if (parallel <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = fn(i);
        return out;
    }
    std::vector<std::thread> workers;
    std::atomic<int> next{0};
    const int nworkers = std::min(parallel, count);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nworkers));
    for (int w = 0; w < nworkers; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                    out[static_cast<std::size_t>(i)] = fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace detail

struct ScenarioResult {
    csv::Table table;
};

// --- scenarios ---------------------------------------------------------------------

namespace detail {

inline std::string fmt(double v) { return csv::format_double(v); }

inline ScenarioResult run_skg_sweep(const ExperimentConfig& cfg, int parallel) {
    const skg::SkgConfig& skg_cfg = *cfg.skg;
    std::vector<double> snrs = cfg.snr_sweep_db;
    if (snrs.empty()) snrs = {cfg.channel.snr_db};

    ScenarioResult res;
    res.table.columns = {"seed", "snr_db", "rho", "M", "N", "alpha", "window",
                         "bdr", "kgr_bits_per_s", "success", "leaked_bits"};
    for (std::size_t pi = 0; pi < snrs.size(); ++pi) {
        channel::ChannelParams params = cfg.channel;
        params.snr_db = snrs[pi];
        const uint64_t point_seed = derive_seed(cfg.seed, pi, "skg-point");
        auto rows = run_indexed<std::vector<std::string>>(
            cfg.trials, parallel, [&, point_seed](int trial) {
                const uint64_t seed = derive_seed(point_seed, static_cast<uint64_t>(trial), "trial");
                const auto trace =
                    channel::generate_trace(params, seed, skg_cfg.num_measurements);
                const auto run = skg::run_skg(trace, skg_cfg);
                return std::vector<std::string>{
                    std::to_string(seed),
                    fmt(params.snr_db),
                    fmt(params.temporal_correlation),
                    std::to_string(skg_cfg.num_measurements),
                    std::to_string(skg_cfg.bits_per_measurement),
                    fmt(skg_cfg.guard_band_alpha),
                    std::to_string(skg_cfg.enhancement_window),
                    fmt(run.report.bdr),
                    fmt(run.report.kgr_bits_per_s),
                    run.report.success ? "1" : "0",
                    std::to_string(run.report.leaked_bits)};
            });
        double bdr_sum = 0.0, kgr_sum = 0.0;
        int ok = 0;
        std::vector<double> bdrs;
        for (const auto& row : rows) {
            res.table.rows.push_back(row);
            bdrs.push_back(std::stod(row[7]));
            bdr_sum += bdrs.back();
            kgr_sum += std::stod(row[8]);
            ok += row[9] == "1";
        }
        const double n = static_cast<double>(rows.size());
        res.table.trailing_comments.push_back(
            "summary snr_db=" + fmt(snrs[pi]) + " mean_bdr=" + fmt(bdr_sum / n) + " std_bdr=" +
            fmt(stddev(bdrs)) + " mean_kgr=" + fmt(kgr_sum / n) + " success_rate=" +
            fmt(static_cast<double>(ok) / n));
    }
    return res;
}

struct RocInputs {
    std::vector<double> authentic_stats;
    std::vector<double> attack_stats;
    double empirical_pfa = 0.0;
    double empirical_pd = 0.0;
};

// Trains the configured detector on an authentic trace prefix, then scores
// held-out authentic deltas and decorrelated-attacker injections.
inline RocInputs gather_roc_inputs(const channel::ChannelParams& params, const AuthConfig& acfg,
                                   uint64_t seed) {
    const int total = acfg.training_messages + acfg.test_messages + 1;
    const auto trace = channel::generate_trace(params, seed, total);
    const auto training = auth::training_from_trace(trace, acfg.training_messages);

    const auto all_obs = trace.of(channel::Observer::ap, channel::Direction::uplink);
    std::vector<auth::DeltaFeature> holdout;
    for (int i = acfg.training_messages; i + 1 < total; ++i)
        holdout.push_back(auth::delta_feature(all_obs[static_cast<std::size_t>(i + 1)].estimate,
                                              all_obs[static_cast<std::size_t>(i)].estimate,
                                              all_obs[static_cast<std::size_t>(i + 1)].step_index));

    Rng attack_rng(derive_seed(seed, 1, "spoof"));
    const auto attack_features =
        attacker::spoof_delta_features(params, acfg.test_messages, attack_rng);

    RocInputs out;
    if (acfg.family == auth::DetectorFamily::npht) {
        const auto det = auth::train_npht(training, acfg.target_pfa);
        for (const auto& f : holdout) out.authentic_stats.push_back(auth::npht_statistic(f));
        for (const auto& f : attack_features) out.attack_stats.push_back(auth::npht_statistic(f));
        if (acfg.retrain_interval > 0) {
            // operating point of the periodically retrained detector: the
            // holdout doubles as the labeled stream
            auth::OnlineNphtAuthenticator online(det, acfg.target_pfa, acfg.retrain_interval);
            int alarms = 0;
            for (const auto& f : holdout) {
                alarms += online.decide(f).hypothesis == auth::Hypothesis::attack;
                online.observe_authentic(f);
            }
            out.empirical_pfa = static_cast<double>(alarms) / static_cast<double>(holdout.size());
            int detected = 0;
            for (const auto& f : attack_features)
                detected += online.decide(f).hypothesis == auth::Hypothesis::attack;
            out.empirical_pd =
                static_cast<double>(detected) / static_cast<double>(attack_features.size());
        } else {
            out.empirical_pfa = attacker::spoof_detection_rate(det, holdout);
            out.empirical_pd = attacker::spoof_detection_rate(det, attack_features);
        }
    } else {
        auto gmm_cfg = acfg.gmm;
        gmm_cfg.target_pfa = acfg.target_pfa;
        const auto det = auth::train_gmm(training.deltas(), gmm_cfg);
        for (const auto& f : holdout)
            out.authentic_stats.push_back(auth::gmm_log_likelihood(det, f.value));
        for (const auto& f : attack_features)
            out.attack_stats.push_back(auth::gmm_log_likelihood(det, f.value));
        out.empirical_pfa = attacker::spoof_detection_rate(det, holdout);
        out.empirical_pd = attacker::spoof_detection_rate(det, attack_features);
    }
    return out;
}

inline ScenarioResult run_auth_roc(const ExperimentConfig& cfg, int parallel) {
    (void)parallel; // single ROC per config; trials pool statistics
    const AuthConfig& acfg = *cfg.auth;
    std::vector<double> authentic, attack;
    double pfa_sum = 0.0, pd_sum = 0.0;
    for (int trial = 0; trial < cfg.trials; ++trial) {
        const uint64_t seed = derive_seed(cfg.seed, static_cast<uint64_t>(trial), "trial");
        const RocInputs in = gather_roc_inputs(cfg.channel, acfg, seed);
        authentic.insert(authentic.end(), in.authentic_stats.begin(), in.authentic_stats.end());
        attack.insert(attack.end(), in.attack_stats.begin(), in.attack_stats.end());
        pfa_sum += in.empirical_pfa;
        pd_sum += in.empirical_pd;
    }
    const auto curve = auth::evaluate_roc(acfg.family, authentic, attack);

    ScenarioResult res;
    res.table.columns = {"threshold", "p_fa", "p_d"};
    for (const auto& p : curve.points)
        res.table.rows.push_back({fmt(p.threshold), fmt(p.p_fa), fmt(p.p_d)});
    res.table.trailing_comments.push_back(
        "summary auc=" + fmt(curve.auc) + " p_d_at_pfa_0.05=" + fmt(curve.p_d_at(0.05)) +
        " p_d_at_pfa_0.01=" + fmt(curve.p_d_at(0.01)) +
        " calibrated_pfa=" + fmt(pfa_sum / cfg.trials) +
        " calibrated_pd=" + fmt(pd_sum / cfg.trials));
    return res;
}

inline ScenarioResult run_overhead_sweep(const ExperimentConfig& cfg) {
    ScenarioResult res;
    res.table.columns = {"n_bits", "l_bits", "moh"};
    for (const auto& p : secure_channel::overhead_sweep(cfg.overhead.l_bits, cfg.overhead.n_min,
                                                        cfg.overhead.n_max, cfg.overhead.step))
        res.table.rows.push_back({std::to_string(p.n_bits), std::to_string(p.l_bits), fmt(p.moh)});
    return res;
}

inline ScenarioResult run_protocol_run(const ExperimentConfig& cfg, int parallel) {
    using Suite = plugtrust::SodiumSuite;
    const skg::SkgConfig skg_cfg = cfg.skg.value_or(skg::SkgConfig{});

    ScenarioResult res;
    res.table.columns = {"trial", "event", "outcome", "public_bits"};
    auto rows = run_indexed<std::vector<std::vector<std::string>>>(
        cfg.trials, parallel, [&](int trial) {
            const uint64_t seed = derive_seed(cfg.seed, static_cast<uint64_t>(trial), "trial");
            std::vector<std::vector<std::string>> out;
            Rng setup_rng(derive_seed(seed, 0, "setup"));
            const auto global = plugtrust::make_global_ca<Suite>(1, {}, setup_rng);
            const auto local = plugtrust::make_local_ca<Suite>(global, 100, {}, setup_rng);
            const auto ap_creds = plugtrust::make_device<Suite>(global, local, 1001, {}, setup_rng);
            const auto ed_creds = plugtrust::make_device<Suite>(global, local, 2001, {}, setup_rng);
            plugtrust::TrustStore store{{global.cert}, {100}};

            plugtrust::Endpoint<Suite> ed(plugtrust::Role::ed, ed_creds, store,
                                          derive_seed(seed, 1, "ed"));
            plugtrust::Endpoint<Suite> ap(plugtrust::Role::ap, ap_creds, store,
                                          derive_seed(seed, 2, "ap"));
            plugtrust::SimTransport transport;
            transport.rng = Rng(derive_seed(seed, 3, "transport"));

            const auto ia = plugtrust::initial_auth(ed, ap, transport);
            out.push_back({std::to_string(trial), "initial_auth", ia.success ? "ok" : "failed",
                           std::to_string(ia.public_bits)});
            const auto hs = plugtrust::session_handshake(ed, ap, transport);
            out.push_back({std::to_string(trial), "session_handshake", hs.success ? "ok" : "failed",
                           std::to_string(hs.public_bits)});
            if (!hs.success) return out;

            // a few secured frames across the fresh session
            secure_channel::SecureSession ed_tx(*ed.session_keys(), 2001, 1001);
            secure_channel::SecureSession ap_rx(*ap.session_keys(), 1001, 2001);
            Rng payload_rng(derive_seed(seed, 4, "payload"));
            int ok_frames = 0;
            for (int i = 0; i < 8; ++i) {
                const BitVec payload = payload_rng.bitvec(200);
                if (ap_rx.receive(ed_tx.send(payload)) == payload) ++ok_frames;
            }
            out.push_back({std::to_string(trial), "frames", std::to_string(ok_frames) + "/8", "0"});

            // SKG-based rekey and its signaling cost vs a DHKE re-run
            const auto trace = channel::generate_trace(cfg.channel, derive_seed(seed, 5, "skg"),
                                                       skg_cfg.num_measurements);
            const auto run = skg::run_skg(trace, skg_cfg);
            int retries = 0;
            const auto rekey = plugtrust::rekey_via_skg(*ap.session_keys(), run, retries);
            out.push_back({std::to_string(trial), "skg_rekey", rekey.rekeyed ? "ok" : "failed",
                           std::to_string(rekey.signaling_bits)});
            out.push_back({std::to_string(trial), "dhke_rerun_reference", "ok",
                           std::to_string(hs.public_bits)});
            return out;
        });
    long skg_bits = 0, dhke_bits = 0;
    int count = 0;
    for (auto& trial_rows : rows)
        for (auto& row : trial_rows) {
            if (row[1] == "skg_rekey" && row[2] == "ok") {
                skg_bits += std::stol(row[3]);
                ++count;
            }
            if (row[1] == "dhke_rerun_reference") dhke_bits += std::stol(row[3]);
            res.table.rows.push_back(std::move(row));
        }
    if (count > 0)
        res.table.trailing_comments.push_back(
            "summary mean_skg_rekey_bits=" + fmt(static_cast<double>(skg_bits) / count) +
            " mean_dhke_bits=" + fmt(static_cast<double>(dhke_bits) / cfg.trials));
    return res;
}

inline ScenarioResult run_attack_suite(const ExperimentConfig& cfg, int parallel) {
    const attacker::AttackerConfig& atk = *cfg.attacker;
    const skg::SkgConfig skg_cfg = cfg.skg.value_or(skg::SkgConfig{});
    const AuthConfig acfg = cfg.auth.value_or(AuthConfig{});

    int spoof_frames = 0;
    std::vector<int> replay_indices;
    bool eavesdrop = false;
    for (const auto& a : atk.script) {
        if (std::holds_alternative<attacker::Eavesdrop>(a)) eavesdrop = true;
        if (std::holds_alternative<attacker::SpoofFrame>(a)) ++spoof_frames;
        if (const auto* r = std::get_if<attacker::ReplayFrame>(&a))
            replay_indices.push_back(r->recorded_index);
    }
    if (atk.script.empty()) { // default suite
        eavesdrop = true;
        spoof_frames = 200;
        replay_indices.resize(100);
        for (int i = 0; i < 100; ++i) replay_indices[static_cast<std::size_t>(i)] = i;
    }

    channel::ChannelParams params = cfg.channel;
    params.attacker_correlation = atk.correlation_to_legit;
    params.attacker_snr_db = atk.snr_db;

    ScenarioResult res;
    res.table.columns = {"scenario_id", "correlation", "snr_db", "key_bit_agreement",
                         "spoof_detection_rate", "replay_rejection_rate"};
    auto rows = run_indexed<std::vector<std::string>>(cfg.trials, parallel, [&](int trial) {
        const uint64_t seed = derive_seed(cfg.seed, static_cast<uint64_t>(trial), "trial");
        double agreement = 0.0;
        if (eavesdrop) {
            const auto trace = channel::generate_trace(params, derive_seed(seed, 0, "skg"),
                                                       skg_cfg.num_measurements);
            const auto run = skg::run_skg(trace, skg_cfg);
            if (run.syndromes) {
                const auto profiles = skg::probe(trace, skg_cfg.num_measurements);
                agreement =
                    attacker::eavesdrop_key_guess(profiles.attacker, run, skg_cfg).agreement_s;
            }
        }

        double spoof_rate = 0.0;
        if (spoof_frames > 0) {
            const auto trace = channel::generate_trace(params, derive_seed(seed, 1, "train"),
                                                       acfg.training_messages);
            const auto det =
                auth::train_npht(auth::training_from_trace(trace, acfg.training_messages),
                                 acfg.target_pfa);
            Rng rng(derive_seed(seed, 2, "spoof"));
            spoof_rate = attacker::spoof_detection_rate(params, det, spoof_frames, rng);
        }

        double replay_rate = 0.0;
        if (!replay_indices.empty()) {
            Rng rng(derive_seed(seed, 3, "replay"));
            BitVec material = rng.bitvec(128);
            const auto keys = secure_channel::derive_session_keys(material, 0);
            secure_channel::SecureSession tx(keys, 1, 2);
            secure_channel::SecureSession rx(keys, 2, 1);
            const int record_count =
                1 + *std::max_element(replay_indices.begin(), replay_indices.end());
            std::vector<secure_channel::Frame> recorded;
            for (int i = 0; i < record_count; ++i) {
                auto f = tx.send(rng.bitvec(64));
                (void)rx.receive(f);
                recorded.push_back(std::move(f));
            }
            std::vector<secure_channel::Frame> replayed;
            for (int idx : replay_indices)
                replayed.push_back(recorded.at(static_cast<std::size_t>(idx)));
            replay_rate = attacker::replay_rejection_rate(replayed, rx);
        }
        return std::vector<std::string>{std::to_string(trial),
                                        fmt(atk.correlation_to_legit),
                                        fmt(atk.snr_db),
                                        fmt(agreement),
                                        fmt(spoof_rate),
                                        fmt(replay_rate)};
    });
    for (auto& row : rows) res.table.rows.push_back(std::move(row));
    return res;
}

} // namespace detail

// Runs a scenario and returns the CSV table; deterministic in (config, seed)
// regardless of the parallelism level.
inline ScenarioResult run(const ExperimentConfig& cfg, int parallel = 1) {
    ScenarioResult res;
    switch (cfg.scenario) {
        case Scenario::skg_sweep: res = detail::run_skg_sweep(cfg, parallel); break;
        case Scenario::auth_roc: res = detail::run_auth_roc(cfg, parallel); break;
        case Scenario::overhead_sweep: res = detail::run_overhead_sweep(cfg); break;
        case Scenario::protocol_run: res = detail::run_protocol_run(cfg, parallel); break;
        case Scenario::attack_suite: res = detail::run_attack_suite(cfg, parallel); break;
    }
    res.table.metadata = metadata_line(cfg);
    return res;
}

inline std::filesystem::path run_to_file(const ExperimentConfig& cfg,
                                         const std::filesystem::path& out_dir, int parallel = 1) {
    const ScenarioResult res = run(cfg, parallel);
    const auto path = out_dir / cfg.output_name();
    csv::write_atomic(path, res.table.render());
    return path;
}

} // namespace physec::harness
