#pragma once

// Transport-independent logic of the four node roles. Each function here
// is a step of a single-owner state machine; the runtimes in sim.hpp and
// live.hpp only move datagrams between them.

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gridshare/attack.hpp"
#include "gridshare/events.hpp"
#include "gridshare/scheme.hpp"
#include "gridshare/wire.hpp"

namespace gridshare {

// ---- sender -------------------------------------------------------------

// Datagrams for one message, grouped by the column (operator) that sends them.
struct Transmission {
    MessageId msg_id = 0;
    std::uint32_t fragment_count = 0;
    std::array<std::vector<Datagram>, 3> per_column;

    [[nodiscard]] std::size_t datagram_count() const {
        return per_column[0].size() + per_column[1].size() + per_column[2].size();
    }
};

template <RandomSource R>
Transmission prepare_transmission(std::span<const std::uint8_t> message, SchemeKind scheme, MessageId msg_id,
                                  std::size_t payload_size, R& rng, const SchemeParams& params = {}) {
    Transmission t;
    t.msg_id = msg_id;
    for (const Fragment& f : fragment_message(message, payload_size)) {
        const Block plain = Block::from_bytes(f.bytes);
        for (const CellShare& cs : encode_cells(scheme, plain, rng, params)) {
            const PacketHeader h{static_cast<std::uint8_t>(cs.cell.row), static_cast<std::uint8_t>(cs.cell.col),
                                 f.index, f.final, msg_id};
            t.per_column[cs.cell.col].push_back(make_datagram(h, cs.block.bytes()));
        }
        ++t.fragment_count;
    }
    return t;
}

// ---- uplink -------------------------------------------------------------

struct UplinkState {
    int index = 0;
    std::uint64_t sent = 0;
    std::uint64_t suppressed = 0;
};

// Relay that should carry this datagram, or nullopt when the operator is
// down or the datagram has no routable header.
inline std::optional<int> uplink_route(UplinkState& state, const AttackRules& rules,
                                       std::span<const std::uint8_t> datagram) {
    if (rules.operator_down(state.index) || datagram.size() < kHeaderSize || datagram[0] > 2) {
        ++state.suppressed;
        return std::nullopt;
    }
    ++state.sent;
    return datagram[0];
}

// ---- relay --------------------------------------------------------------

struct RelayState {
    int index = 0;
    std::uint64_t forwarded = 0;
    std::uint64_t dropped = 0;
    std::shared_ptr<TapCapture> tap;  // mirrors everything arriving, when set
};

// Byte-identical forwarding; the payload is never parsed.
inline std::optional<Datagram> relay_forward(std::span<const std::uint8_t> datagram, RelayState& state,
                                             const AttackRules& rules, Timestamp now = {}) {
    if (state.tap) state.tap->tap_record(datagram, static_cast<std::uint64_t>(now.count()));
    if (rules.relay_down(state.index)) {
        ++state.dropped;
        return std::nullopt;
    }
    ++state.forwarded;
    return Datagram(datagram.begin(), datagram.end());
}

// ---- receiver -----------------------------------------------------------

struct ReceiverConfig {
    SchemeKind scheme = SchemeKind::two_layer;
    SchemeParams params{};
    Timestamp timeout = std::chrono::seconds(5);
    bool integrity = true;
};

struct FragmentDelivery {
    std::uint32_t index = 0;
    CellSet received;
    bool decoded = false;
    CellSet used;
    std::optional<Submatrix> submatrix;

    friend bool operator==(const FragmentDelivery&, const FragmentDelivery&) = default;
};

struct DeliveryReport {
    enum class Outcome { recovered, timeout };

    MessageId msg_id = 0;
    Outcome outcome = Outcome::timeout;
    std::vector<FragmentDelivery> fragments;
    std::optional<Timestamp> latency;
    std::vector<std::uint8_t> message;  // empty on timeout

    [[nodiscard]] bool recovered() const { return outcome == Outcome::recovered; }

    friend bool operator==(const DeliveryReport&, const DeliveryReport&) = default;
};

class ReceiverState {
public:
    explicit ReceiverState(ReceiverConfig config = {}) : config_(config) {}

    [[nodiscard]] const ReceiverConfig& config() const { return config_; }
    void set_scheme(SchemeKind k) { config_.scheme = k; }
    void set_timeout(Timestamp t) { config_.timeout = t; }

    // Announces a dispatch so latency and timeouts count from send time and
    // a message whose every datagram is lost still times out.
    void expect(MessageId id, Timestamp dispatched) {
        auto& m = track(id, dispatched);
        m.started = std::min(m.started, dispatched);
        m.dispatched = true;
    }

    std::vector<Event> ingest(std::span<const std::uint8_t> datagram, Timestamp now) {
        std::vector<Event> events;
        ParsedDatagram parsed;
        try {
            parsed = parse_datagram(datagram);
        } catch (const MalformedHeader& e) {
            ++malformed_;
            events.push_back(make(EventKind::malformed_datagram, now, e.what()));
            return events;
        }
        const PacketHeader& h = parsed.header;
        MessageTrack& m = track(h.msg_id, now);
        FragmentTrack& f = m.fragments[h.fragment];

        const CellIndex cell = h.cell();
        auto& slot = f.cells[cell.linear()];
        Block block = Block::from_bytes(parsed.payload);
        if (slot) {
            if (*slot != block) {
                ++integrity_errors_;
                Event e = make(EventKind::integrity_error, now, "conflicting copy of cell");
                e.msg_id = h.msg_id;
                e.fragment = h.fragment;
                e.cell = cell;
                events.push_back(std::move(e));
            }
            return events;
        }
        slot = std::move(block);
        ++cells_ingested_;

        Event arrived = make(EventKind::cell_arrived, now);
        arrived.msg_id = h.msg_id;
        arrived.fragment = h.fragment;
        arrived.cell = cell;
        events.push_back(std::move(arrived));

        if (m.finished) return events;

        try {
            if (h.final) m.assembly.set_final(h.fragment);
            if (!f.decoded) {
                if (auto d = try_decode(m.scheme, f.cells, config_.params, {config_.integrity})) {
                    f.decoded = true;
                    f.used = d->used;
                    f.submatrix = d->submatrix;
                    m.assembly.add_decoded(h.fragment, d->secret.byte_vector());
                    Event e = make(EventKind::fragment_decoded, now);
                    e.msg_id = h.msg_id;
                    e.fragment = h.fragment;
                    e.submatrix = d->submatrix;
                    e.cells_used = d->used;
                    events.push_back(std::move(e));
                }
            } else if (config_.integrity) {
                if (auto d = try_decode(m.scheme, f.cells, config_.params, {true}))
                    m.assembly.add_decoded(h.fragment, d->secret.byte_vector());
            }
        } catch (const Error& err) {
            ++integrity_errors_;
            Event e = make(EventKind::integrity_error, now, err.what());
            e.msg_id = h.msg_id;
            e.fragment = h.fragment;
            e.cell = cell;
            events.push_back(std::move(e));
            return events;
        }

        if (auto message = reassemble(m.assembly)) {
            m.finished = true;
            DeliveryReport r = report_for(h.msg_id, m, DeliveryReport::Outcome::recovered);
            r.latency = now - m.started;
            r.message = std::move(*message);
            Event e = make(EventKind::message_recovered, now);
            e.msg_id = h.msg_id;
            e.latency = r.latency;
            events.push_back(std::move(e));
            completed_.push_back(std::move(r));
        }
        return events;
    }

    // Finalizes every unfinished message whose deadline has passed.
    std::vector<DeliveryReport> timeout_sweep(Timestamp now) {
        std::vector<DeliveryReport> out;
        for (auto& [id, m] : messages_) {
            if (m.finished || now - m.started < config_.timeout) continue;
            m.finished = true;
            out.push_back(report_for(id, m, DeliveryReport::Outcome::timeout));
        }
        for (const auto& r : out) completed_.push_back(r);
        return out;
    }

    static Event timeout_event(const DeliveryReport& r, Timestamp now) {
        Event e;
        e.kind = EventKind::message_timeout;
        e.time = now;
        e.msg_id = r.msg_id;
        return e;
    }

    // Reports for messages that finished (either way) since the last call.
    std::vector<DeliveryReport> take_reports() { return std::exchange(completed_, {}); }

    [[nodiscard]] std::uint64_t malformed_count() const { return malformed_; }
    [[nodiscard]] std::uint64_t integrity_error_count() const { return integrity_errors_; }
    [[nodiscard]] std::uint64_t cells_ingested() const { return cells_ingested_; }

    [[nodiscard]] bool finished(MessageId id) const {
        const auto it = messages_.find(id);
        return it != messages_.end() && it->second.finished;
    }

    [[nodiscard]] std::size_t pending_count() const {
        std::size_t n = 0;
        for (const auto& [id, m] : messages_) n += !m.finished;
        return n;
    }

    // Drops bookkeeping for finished messages, keeping at most `keep` of them.
    void prune(std::size_t keep) {
        std::size_t finished = 0;
        for (const auto& [id, m] : messages_) finished += m.finished;
        for (auto it = messages_.begin(); it != messages_.end() && finished > keep;) {
            if (it->second.finished) {
                it = messages_.erase(it);
                --finished;
            } else {
                ++it;
            }
        }
    }

private:
    struct FragmentTrack {
        CellTable cells;
        bool decoded = false;
        CellSet used;
        std::optional<Submatrix> submatrix;
    };

    struct MessageTrack {
        SchemeKind scheme;
        Timestamp started;
        bool dispatched = false;
        bool finished = false;
        FragmentSet assembly;
        std::map<std::uint32_t, FragmentTrack> fragments;
    };

    MessageTrack& track(MessageId id, Timestamp now) {
        auto it = messages_.find(id);
        if (it == messages_.end())
            it = messages_.emplace(id, MessageTrack{config_.scheme, now, false, false, FragmentSet(id), {}}).first;
        return it->second;
    }

    static Event make(EventKind kind, Timestamp now, std::string detail = {}) {
        Event e;
        e.kind = kind;
        e.time = now;
        e.detail = std::move(detail);
        return e;
    }

    static DeliveryReport report_for(MessageId id, const MessageTrack& m, DeliveryReport::Outcome outcome) {
        DeliveryReport r;
        r.msg_id = id;
        r.outcome = outcome;
        for (const auto& [index, f] : m.fragments)
            r.fragments.push_back({index, available_cells(f.cells), f.decoded, f.used, f.submatrix});
        return r;
    }

    ReceiverConfig config_;
    std::map<MessageId, MessageTrack> messages_;
    std::vector<DeliveryReport> completed_;
    std::uint64_t malformed_ = 0;
    std::uint64_t integrity_errors_ = 0;
    std::uint64_t cells_ingested_ = 0;
};

}  // namespace gridshare
