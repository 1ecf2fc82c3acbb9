#pragma once

// Monte Carlo recovery curves, tapped-traffic entropy and end-to-end latency
// for every scheme, plus CSV/summary emission.
//
// Every trial draws from its own generator seeded with derive_seed(master,
// trial index), so results do not depend on evaluation order. Attack draws
// for trial t at grid point k are shared by all schemes (common random
// numbers), which keeps curves for different schemes directly comparable.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gridshare/live.hpp"
#include "gridshare/sim.hpp"

namespace gridshare {

enum class AttackScope {
    per_layer,    // operator and relay attacks drawn independently with probability p each
    per_session,  // with probability p, one operator and one relay are attacked together
};

struct RecoveryOptions {
    std::vector<double> p_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::uint64_t trials = 10000;
    std::size_t message_size = 64;
    AttackScope scope = AttackScope::per_layer;
};

struct EntropyOptions {
    std::uint64_t min_bits = 100000;
    int tap_relay = 0;
    std::uint8_t plaintext_byte = 0x00;
    std::size_t message_size = 1024;
};

enum class LatencyMode { simulated, loopback };

struct LatencyOptions {
    LatencyMode mode = LatencyMode::simulated;
    std::uint64_t messages = 200;  // per scheme
    std::size_t message_size = 1024;
    Timestamp delay_base = std::chrono::milliseconds(20);
    Timestamp delay_jitter = std::chrono::milliseconds(30);
    Timestamp interval = std::chrono::milliseconds(50);  // between dispatches (simulated)
};

struct ExperimentConfig {
    std::vector<SchemeKind> schemes{kAllSchemes.begin(), kAllSchemes.end()};
    std::uint64_t seed = 2024;
    std::size_t payload_size = 1024;
    RecoveryOptions recovery;
    EntropyOptions entropy;
    LatencyOptions latency;

    void validate() const {
        if (schemes.empty()) throw InvalidArgument("experiment needs at least one scheme");
        if (recovery.trials < 1) throw InvalidArgument("trials must be >= 1");
        if (recovery.p_grid.empty()) throw InvalidArgument("p grid is empty");
        for (double p : recovery.p_grid)
            if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("p values must lie in [0, 1]");
        if (recovery.message_size == 0 || entropy.message_size == 0 || latency.message_size == 0)
            throw InvalidArgument("message sizes must be positive");
        if (payload_size == 0 || payload_size > 65495) throw InvalidArgument("payload_size must be in [1, 65495]");
        if (entropy.min_bits < 100000) throw InvalidArgument("entropy needs at least 1e5 captured bits");
        if (entropy.tap_relay < 0 || entropy.tap_relay >= kGridSize) throw InvalidArgument("tap_relay out of range");
        if (latency.messages < 1) throw InvalidArgument("latency needs at least one message");
        if (latency.delay_base.count() < 0 || latency.delay_jitter.count() < 0)
            throw InvalidArgument("delays must be non-negative");
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        if (j.contains("scheme")) c.schemes = {parse_scheme(j["scheme"].get<std::string>())};
        if (j.contains("schemes")) {
            c.schemes.clear();
            for (const auto& s : j["schemes"]) c.schemes.push_back(parse_scheme(s.get<std::string>()));
        }
        c.seed = j.value("seed", c.seed);
        c.payload_size = j.value("payload_size", c.payload_size);
        if (j.contains("recovery")) {
            const auto& r = j["recovery"];
            c.recovery.p_grid = r.value("p_grid", c.recovery.p_grid);
            c.recovery.trials = r.value("trials", c.recovery.trials);
            c.recovery.message_size = r.value("message_size", c.recovery.message_size);
            const std::string scope = r.value("attack_scope", std::string("per-layer"));
            if (scope == "per-layer")
                c.recovery.scope = AttackScope::per_layer;
            else if (scope == "per-session")
                c.recovery.scope = AttackScope::per_session;
            else
                throw InvalidArgument("attack_scope must be per-layer or per-session");
        }
        if (j.contains("entropy")) {
            const auto& e = j["entropy"];
            c.entropy.min_bits = e.value("min_bits", c.entropy.min_bits);
            c.entropy.tap_relay = e.value("tap_relay", c.entropy.tap_relay);
            c.entropy.plaintext_byte = e.value("plaintext_byte", c.entropy.plaintext_byte);
            c.entropy.message_size = e.value("message_size", c.entropy.message_size);
        }
        if (j.contains("latency")) {
            const auto& l = j["latency"];
            const std::string mode = l.value("mode", std::string("simulated"));
            if (mode == "simulated")
                c.latency.mode = LatencyMode::simulated;
            else if (mode == "loopback")
                c.latency.mode = LatencyMode::loopback;
            else
                throw InvalidArgument("latency mode must be simulated or loopback");
            c.latency.messages = l.value("messages", c.latency.messages);
            c.latency.message_size = l.value("message_size", c.latency.message_size);
            const auto us = [](double v) { return Timestamp(static_cast<Timestamp::rep>(v * 1000.0)); };
            if (l.contains("delay_base_us")) c.latency.delay_base = us(l["delay_base_us"].get<double>());
            if (l.contains("delay_jitter_us")) c.latency.delay_jitter = us(l["delay_jitter_us"].get<double>());
            if (l.contains("interval_us")) c.latency.interval = us(l["interval_us"].get<double>());
        }
        c.validate();
        return c;
    }

    static ExperimentConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open experiment config " + path);
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument("experiment config " + path + ": " + e.what());
        }
    }
};

// ---- recovery -----------------------------------------------------------

inline double analytic_recovery(SchemeKind scheme, double p, AttackScope scope = AttackScope::per_layer) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("p must lie in [0, 1]");
    switch (scheme) {
        case SchemeKind::two_layer:
        case SchemeKind::repetition:
            return 1.0;
        case SchemeKind::one_layer_all:
            // Any hit removes one of the three needed diagonal shares.
            return scope == AttackScope::per_layer ? (1 - p) * (1 - p) : 1 - p;
        case SchemeKind::one_layer_two:
            // Fails only when operator and relay hit distinct diagonals.
            return scope == AttackScope::per_layer ? 1 - (2.0 / 3.0) * p * p : 1 - (2.0 / 3.0) * p;
    }
    return 0.0;
}

struct BinomialInterval {
    double low = 0;
    double high = 1;
    [[nodiscard]] double half_width() const { return (high - low) / 2; }
    [[nodiscard]] bool contains(double x) const { return x >= low - 1e-12 && x <= high + 1e-12; }
};

// Wilson score interval at 95%.
inline BinomialInterval wilson_interval(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) throw InvalidArgument("interval needs at least one trial");
    constexpr double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double denom = 1 + z * z / n;
    const double centre = (phat + z * z / (2 * n)) / denom;
    const double margin = z * std::sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom;
    return {std::max(0.0, centre - margin), std::min(1.0, centre + margin)};
}

struct RecoveryPoint {
    SchemeKind scheme{};
    double p = 0;
    std::uint64_t trials = 0;
    std::uint64_t recovered = 0;
    BinomialInterval ci;
    double analytic = 0;

    [[nodiscard]] double rate() const { return static_cast<double>(recovered) / static_cast<double>(trials); }
};

using RecoveryCurve = std::vector<RecoveryPoint>;

inline AttackOutcome sample_scoped_attack(double p, AttackScope scope, SeededRandom& rng) {
    if (scope == AttackScope::per_layer) return sample_attack(AttackModel::symmetric(p), rng.engine());
    std::bernoulli_distribution hit(p);
    std::uniform_int_distribution<int> target(0, kGridSize - 1);
    AttackOutcome out;
    if (hit(rng.engine())) {
        out.operator_target = target(rng.engine());
        out.relay_target = target(rng.engine());
    }
    return out;
}

// One full encode -> uplink -> relay -> receiver pass under a sampled attack.
inline bool run_recovery_trial(SchemeKind scheme, const AttackOutcome& attack, std::size_t message_size,
                               std::size_t payload_size, SeededRandom& rng) {
    SimOptions opt;
    opt.scheme = scheme;
    opt.payload_size = payload_size;
    SimTestbed tb(opt);
    tb.rules() = AttackRules::from(attack);
    std::vector<std::uint8_t> message(message_size);
    rng.fill(message);
    tb.dispatch(message, rng);
    const auto reports = tb.finish();
    return reports.size() == 1 && reports[0].recovered() && reports[0].message == message;
}

inline RecoveryCurve run_recovery_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto& rc = config.recovery;
    RecoveryCurve curve;
    for (SchemeKind scheme : config.schemes)
        for (std::size_t k = 0; k < rc.p_grid.size(); ++k) {
            RecoveryPoint pt;
            pt.scheme = scheme;
            pt.p = rc.p_grid[k];
            pt.trials = rc.trials;
            pt.analytic = analytic_recovery(scheme, pt.p, rc.scope);
            const std::uint64_t attack_stream = derive_seed(config.seed, 1000 + k);
            const std::uint64_t coding_stream = derive_seed(attack_stream, 10 + static_cast<std::uint64_t>(scheme));
            for (std::uint64_t t = 0; t < rc.trials; ++t) {
                SeededRandom attack_rng(derive_seed(attack_stream, t));
                SeededRandom coding_rng(derive_seed(coding_stream, t));
                const AttackOutcome attack = sample_scoped_attack(pt.p, rc.scope, attack_rng);
                if (run_recovery_trial(scheme, attack, rc.message_size, config.payload_size, coding_rng))
                    ++pt.recovered;
            }
            pt.ci = wilson_interval(pt.recovered, pt.trials);
            curve.push_back(pt);
        }
    return curve;
}

// ---- entropy ------------------------------------------------------------

struct EntropyResult {
    SchemeKind scheme{};
    int tap_relay = 0;
    std::uint64_t messages = 0;
    ConfidentialityReport report;
};

inline std::vector<EntropyResult> run_entropy_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto& ec = config.entropy;
    const std::vector<std::uint8_t> plaintext(ec.message_size, ec.plaintext_byte);
    // Probe for plaintext leakage: one full fragment of the constant message.
    const std::vector<std::uint8_t> probe(std::min(ec.message_size, config.payload_size), ec.plaintext_byte);
    std::vector<EntropyResult> out;
    for (SchemeKind scheme : config.schemes) {
        SimOptions opt;
        opt.scheme = scheme;
        opt.payload_size = config.payload_size;
        SimTestbed tb(opt);
        auto tap = tb.attach_tap({TapPoint::Kind::relay, ec.tap_relay});
        SeededRandom rng(derive_seed(config.seed, 2000 + static_cast<std::uint64_t>(scheme)));
        EntropyResult r;
        r.scheme = scheme;
        r.tap_relay = ec.tap_relay;
        std::uint64_t bits = 0;
        while (bits < ec.min_bits) {
            tb.dispatch(plaintext, rng);
            tb.run();
            ++r.messages;
            bits = 0;
            for (const auto& rec : tap->snapshot())
                bits += 8 * (rec.bytes.size() > kHeaderSize ? rec.bytes.size() - kHeaderSize : 0);
            if (r.messages > 1000000) throw Error("tap captured no share payloads");
        }
        tb.finish();
        r.report = analyze_capture(*tap, probe);
        out.push_back(r);
    }
    return out;
}

// ---- latency ------------------------------------------------------------

struct LatencySample {
    SchemeKind scheme{};
    std::uint64_t index = 0;
    bool recovered = false;
    Timestamp latency{0};
};

struct LatencyResult {
    LatencyMode mode = LatencyMode::simulated;
    std::vector<LatencySample> samples;

    [[nodiscard]] std::optional<double> mean_ms(SchemeKind k) const {
        double sum = 0;
        std::uint64_t n = 0;
        for (const auto& s : samples)
            if (s.scheme == k && s.recovered) {
                sum += std::chrono::duration<double, std::milli>(s.latency).count();
                ++n;
            }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
};

inline LatencyResult run_latency_simulated(const ExperimentConfig& config) {
    const auto& lc = config.latency;
    LatencyResult out;
    out.mode = LatencyMode::simulated;
    for (SchemeKind scheme : config.schemes) {
        SimOptions opt;
        opt.scheme = scheme;
        opt.payload_size = config.payload_size;
        // Same delay seed for every scheme: message m sees the same per-link
        // delays whichever scheme carries it.
        opt.delays = {lc.delay_base, lc.delay_jitter, derive_seed(config.seed, 3000)};
        opt.timeout = std::max<Timestamp>(opt.timeout, 4 * (lc.delay_base + lc.delay_jitter) + lc.interval);
        SimTestbed tb(opt);
        SeededRandom rng(derive_seed(config.seed, 3100 + static_cast<std::uint64_t>(scheme)));
        std::map<MessageId, std::uint64_t> index_of;
        std::vector<std::uint8_t> message(lc.message_size);
        for (std::uint64_t m = 0; m < lc.messages; ++m) {
            rng.fill(message);
            index_of[tb.dispatch(message, rng, static_cast<MessageId>(m + 1))] = m;
            tb.advance(lc.interval);
        }
        auto reports = tb.finish();
        std::sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) { return a.msg_id < b.msg_id; });
        for (const auto& r : reports)
            out.samples.push_back({scheme, index_of.at(r.msg_id), r.recovered(), r.latency.value_or(Timestamp{0})});
    }
    return out;
}

// Wall-clock latency over UDP on 127.0.0.1. Schemes are interleaved
// message by message so drift in machine load affects them equally.
inline LatencyResult run_latency_loopback(const ExperimentConfig& config) {
    const auto& lc = config.latency;
    auto topology = TopologyConfig::loopback();
    topology.payload_size = config.payload_size;
    topology.timeout = std::chrono::milliseconds(2000);
    LiveTestbed tb(topology);
    LatencyResult out;
    out.mode = LatencyMode::loopback;
    SeededRandom rng(derive_seed(config.seed, 3200));
    std::vector<std::uint8_t> message(lc.message_size);
    for (SchemeKind scheme : config.schemes) {  // warm-up
        tb.set_scheme(scheme);
        rng.fill(message);
        tb.send_and_wait(message);
    }
    for (std::uint64_t m = 0; m < lc.messages; ++m)
        for (SchemeKind scheme : config.schemes) {
            tb.set_scheme(scheme);
            rng.fill(message);
            const auto r = tb.send_and_wait(message);
            out.samples.push_back({scheme, m, r.recovered() && r.message == message, r.latency.value_or(Timestamp{0})});
        }
    return out;
}

inline LatencyResult run_latency_experiment(const ExperimentConfig& config) {
    config.validate();
    return config.latency.mode == LatencyMode::simulated ? run_latency_simulated(config) : run_latency_loopback(config);
}

// ---- output -------------------------------------------------------------

struct ExperimentResults {
    RecoveryCurve recovery;
    std::vector<EntropyResult> entropy;
    LatencyResult latency;
};

inline ExperimentResults run_experiment(const ExperimentConfig& config) {
    return {run_recovery_experiment(config), run_entropy_experiment(config), run_latency_experiment(config)};
}

namespace detail {

inline std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline std::string recovery_csv(const RecoveryCurve& curve) {
    std::ostringstream os;
    os << "scheme,p,trials,recovered,rate,ci_low,ci_high,ci_half_width,analytic\n";
    for (const auto& pt : curve)
        os << scheme_name(pt.scheme) << ',' << detail::fixed(pt.p, 2) << ',' << pt.trials << ',' << pt.recovered
           << ',' << detail::fixed(pt.rate()) << ',' << detail::fixed(pt.ci.low) << ',' << detail::fixed(pt.ci.high)
           << ',' << detail::fixed(pt.ci.half_width()) << ',' << detail::fixed(pt.analytic) << '\n';
    return os.str();
}

inline std::string entropy_csv(const std::vector<EntropyResult>& results) {
    std::ostringstream os;
    os << "scheme,tap,messages,datagrams,payload_bits,entropy,plaintext_found\n";
    for (const auto& r : results)
        os << scheme_name(r.scheme) << ",relay-" << r.tap_relay << ',' << r.messages << ',' << r.report.datagrams << ','
           << r.report.payload_bits << ',' << detail::fixed(r.report.entropy) << ','
           << (r.report.plaintext_found ? "true" : "false") << '\n';
    return os.str();
}

inline std::string latency_csv(const LatencyResult& result) {
    std::ostringstream os;
    os << "scheme,message,recovered,latency_ms\n";
    for (const auto& s : result.samples)
        os << scheme_name(s.scheme) << ',' << s.index << ',' << (s.recovered ? "true" : "false") << ','
           << detail::fixed(std::chrono::duration<double, std::milli>(s.latency).count()) << '\n';
    return os.str();
}

// Published figures for real 5G paths; printed beside ours, never asserted.
struct ReferenceRow {
    SchemeKind scheme;
    const char* entropy;
    const char* recovery;
    const char* latency_ms;
};

inline constexpr ReferenceRow kReferenceTable[] = {
    {SchemeKind::two_layer, "0.9979", "100%", "153"},
    {SchemeKind::one_layer_all, "0.9979", "31%", "143"},
    {SchemeKind::one_layer_two, "0.9979", "31%", "143"},
    {SchemeKind::repetition, "0", "100%", "93"},
};

inline std::string summary_text(const ExperimentConfig& config, const ExperimentResults& r) {
    const double p_ref = 0.5;
    std::ostringstream os;
    os << "Performance comparison under 50% DoS attack probability\n";
    os << "seed " << config.seed << ", " << config.recovery.trials << " trials per point, attack scope "
       << (config.recovery.scope == AttackScope::per_layer ? "per-layer" : "per-session") << ", latency mode "
       << (r.latency.mode == LatencyMode::simulated ? "simulated" : "loopback") << "\n\n";

    char line[256];
    std::snprintf(line, sizeof line, "%-20s %-10s %-10s %-22s %-10s %-10s\n", "scheme", "entropy", "plaintext",
                  "recovery@p=0.5 (ci)", "analytic", "latency_ms");
    os << line;
    for (SchemeKind k : config.schemes) {
        std::string ent = "-", leak = "-", rec = "-", ana = "-", lat = "-";
        for (const auto& e : r.entropy)
            if (e.scheme == k) {
                ent = detail::fixed(e.report.entropy, 4);
                leak = e.report.plaintext_found ? "found" : "absent";
            }
        for (const auto& pt : r.recovery)
            if (pt.scheme == k && std::abs(pt.p - p_ref) < 1e-9) {
                rec = detail::fixed(pt.rate(), 4) + " +-" + detail::fixed(pt.ci.half_width(), 4);
                ana = detail::fixed(pt.analytic, 4);
            }
        if (const auto m = r.latency.mean_ms(k)) lat = detail::fixed(*m, 3);
        std::snprintf(line, sizeof line, "%-20s %-10s %-10s %-22s %-10s %-10s\n", scheme_name(k).data(), ent.c_str(),
                      leak.c_str(), rec.c_str(), ana.c_str(), lat.c_str());
        os << line;
    }

    os << "\nExternal reference values (real 5G testbed; not reproduced, not asserted):\n";
    std::snprintf(line, sizeof line, "%-20s %-10s %-10s %-10s\n", "scheme", "entropy", "recovery", "latency_ms");
    os << line;
    for (const auto& ref : kReferenceTable) {
        if (std::find(config.schemes.begin(), config.schemes.end(), ref.scheme) == config.schemes.end()) continue;
        std::snprintf(line, sizeof line, "%-20s %-10s %-10s %-10s\n", scheme_name(ref.scheme).data(), ref.entropy,
                      ref.recovery, ref.latency_ms);
        os << line;
    }
    os << "The 31% one-layer figure comes from an unspecified routing; it lies between the all-of-3 (25%)\n"
          "and 2-of-3 (83.3%) diagonal baselines measured here.\n";
    return os.str();
}

inline void emit_results(const ExperimentConfig& config, const ExperimentResults& r,
                         const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    detail::write_file(out_dir / "recovery.csv", recovery_csv(r.recovery));
    detail::write_file(out_dir / "entropy.csv", entropy_csv(r.entropy));
    detail::write_file(out_dir / "latency.csv", latency_csv(r.latency));
    detail::write_file(out_dir / "summary.txt", summary_text(config, r));
}

}  // namespace gridshare
