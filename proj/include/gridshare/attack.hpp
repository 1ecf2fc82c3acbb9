#pragma once

// DoS and eavesdropping attacks against the operator/relay grid.
//
// Operator DoS silences one uplink (one column), relay DoS makes one relay
// drop everything (one row). A tap passively copies datagrams seen at an
// uplink or relay.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gridshare/entropy.hpp"
#include "gridshare/error.hpp"
#include "gridshare/grid.hpp"
#include "gridshare/wire.hpp"

namespace gridshare {

struct AttackModel {
    double p_operator = 0.0;
    double p_relay = 0.0;

    void validate() const {
        if (!(p_operator >= 0.0 && p_operator <= 1.0) || !(p_relay >= 0.0 && p_relay <= 1.0))
            throw InvalidArgument("attack probabilities must lie in [0, 1]");
    }

    static AttackModel symmetric(double p) { return {p, p}; }
};

struct AttackOutcome {
    std::optional<int> operator_target;
    std::optional<int> relay_target;

    // Cells whose datagrams never reach the receiver.
    [[nodiscard]] CellSet lost_cells() const {
        CellSet s;
        if (operator_target) s = s | CellSet::column(*operator_target);
        if (relay_target) s = s | CellSet::row(*relay_target);
        return s;
    }

    friend bool operator==(const AttackOutcome&, const AttackOutcome&) = default;
};

template <std::uniform_random_bit_generator G>
AttackOutcome sample_attack(const AttackModel& model, G& rng) {
    model.validate();
    std::bernoulli_distribution op_hit(model.p_operator);
    std::bernoulli_distribution relay_hit(model.p_relay);
    std::uniform_int_distribution<int> target(0, kGridSize - 1);
    AttackOutcome out;
    if (op_hit(rng)) out.operator_target = target(rng);
    if (relay_hit(rng)) out.relay_target = target(rng);
    return out;
}

struct TapPoint {
    enum class Kind { uplink, relay };
    Kind kind = Kind::relay;
    int index = 0;

    friend bool operator==(const TapPoint&, const TapPoint&) = default;
};

inline std::string to_string(TapPoint p) {
    return std::string(p.kind == TapPoint::Kind::uplink ? "uplink-" : "relay-") + std::to_string(p.index);
}

// The active DoS and tap switches. Toggles are idempotent.
class AttackRules {
public:
    void apply_operator_dos(int col, bool on) { operator_down_.at(checked(col)) = on; }
    void apply_relay_dos(int row, bool on) { relay_down_.at(checked(row)) = on; }

    void set_tap(TapPoint point, bool on) {
        auto& taps = point.kind == TapPoint::Kind::uplink ? uplink_tap_ : relay_tap_;
        taps.at(checked(point.index)) = on;
    }

    [[nodiscard]] bool operator_down(int col) const { return operator_down_.at(col); }
    [[nodiscard]] bool relay_down(int row) const { return relay_down_.at(row); }
    [[nodiscard]] bool tapped(TapPoint point) const {
        return (point.kind == TapPoint::Kind::uplink ? uplink_tap_ : relay_tap_).at(point.index);
    }

    static AttackRules from(const AttackOutcome& outcome) {
        AttackRules r;
        if (outcome.operator_target) r.apply_operator_dos(*outcome.operator_target, true);
        if (outcome.relay_target) r.apply_relay_dos(*outcome.relay_target, true);
        return r;
    }

    friend bool operator==(const AttackRules&, const AttackRules&) = default;

private:
    static std::size_t checked(int index) {
        if (index < 0 || index >= kGridSize) throw InvalidArgument("attack target index out of range");
        return static_cast<std::size_t>(index);
    }

    std::array<bool, 3> operator_down_{};
    std::array<bool, 3> relay_down_{};
    std::array<bool, 3> uplink_tap_{};
    std::array<bool, 3> relay_tap_{};
};

struct CapturedDatagram {
    std::uint64_t timestamp_ns = 0;
    Datagram bytes;

    friend bool operator==(const CapturedDatagram&, const CapturedDatagram&) = default;
};

// Append-only record of datagrams seen at one capture point.
class TapCapture {
public:
    explicit TapCapture(TapPoint point = {}) : point_(point) {}

    void tap_record(std::span<const std::uint8_t> datagram, std::uint64_t timestamp_ns) {
        std::lock_guard lock(mutex_);
        records_.push_back({timestamp_ns, Datagram(datagram.begin(), datagram.end())});
    }

    [[nodiscard]] TapPoint point() const { return point_; }

    [[nodiscard]] std::vector<CapturedDatagram> snapshot() const {
        std::lock_guard lock(mutex_);
        return records_;
    }

    [[nodiscard]] std::size_t size() const {
        std::lock_guard lock(mutex_);
        return records_.size();
    }

    void clear() {
        std::lock_guard lock(mutex_);
        records_.clear();
    }

private:
    TapPoint point_;
    mutable std::mutex mutex_;
    std::vector<CapturedDatagram> records_;
};

struct ConfidentialityReport {
    std::size_t datagrams = 0;
    std::uint64_t payload_bits = 0;
    double entropy = 0.0;
    bool plaintext_found = false;
};

// Strips headers, measures bit entropy of the concatenated payloads and
// searches them for the known plaintext.
inline ConfidentialityReport analyze_capture(std::span<const CapturedDatagram> records,
                                             std::span<const std::uint8_t> known_plaintext = {}) {
    if (records.empty()) throw InvalidArgument("cannot analyze an empty capture");
    std::vector<std::uint8_t> payloads;
    ConfidentialityReport report;
    for (const auto& r : records) {
        if (r.bytes.size() <= kHeaderSize) continue;
        payloads.insert(payloads.end(), r.bytes.begin() + kHeaderSize, r.bytes.end());
        ++report.datagrams;
    }
    if (payloads.empty()) throw InvalidArgument("capture holds no share payloads");
    report.payload_bits = 8 * payloads.size();
    report.entropy = entropy_per_bit(payloads);
    if (!known_plaintext.empty())
        report.plaintext_found =
            std::search(payloads.begin(), payloads.end(), known_plaintext.begin(), known_plaintext.end()) !=
            payloads.end();
    return report;
}

inline ConfidentialityReport analyze_capture(const TapCapture& capture, std::span<const std::uint8_t> known_plaintext = {}) {
    const auto records = capture.snapshot();
    return analyze_capture(std::span<const CapturedDatagram>(records), known_plaintext);
}

// Capture dump: magic "GSCAP001", then per record
//   u64 timestamp_ns (big-endian) | u32 length (big-endian) | raw datagram
inline constexpr std::array<char, 8> kCaptureMagic{'G', 'S', 'C', 'A', 'P', '0', '0', '1'};

inline void write_capture(std::ostream& os, std::span<const CapturedDatagram> records) {
    os.write(kCaptureMagic.data(), kCaptureMagic.size());
    for (const auto& r : records) {
        std::array<char, 12> head{};
        for (int i = 0; i < 8; ++i) head[i] = static_cast<char>(r.timestamp_ns >> (56 - 8 * i));
        const auto len = static_cast<std::uint32_t>(r.bytes.size());
        for (int i = 0; i < 4; ++i) head[8 + i] = static_cast<char>(len >> (24 - 8 * i));
        os.write(head.data(), head.size());
        os.write(reinterpret_cast<const char*>(r.bytes.data()), static_cast<std::streamsize>(r.bytes.size()));
    }
    if (!os) throw IoError("failed writing capture dump");
}

inline std::vector<CapturedDatagram> read_capture(std::istream& is) {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kCaptureMagic) throw IoError("not a capture dump");
    std::vector<CapturedDatagram> out;
    std::array<unsigned char, 12> head{};
    while (is.read(reinterpret_cast<char*>(head.data()), head.size())) {
        CapturedDatagram r;
        for (int i = 0; i < 8; ++i) r.timestamp_ns = (r.timestamp_ns << 8) | head[i];
        std::uint32_t len = 0;
        for (int i = 0; i < 4; ++i) len = (len << 8) | head[8 + i];
        r.bytes.resize(len);
        if (!is.read(reinterpret_cast<char*>(r.bytes.data()), len)) throw IoError("truncated capture record");
        out.push_back(std::move(r));
    }
    if (is.gcount() != 0) throw IoError("truncated capture record header");
    return out;
}

}  // namespace gridshare
