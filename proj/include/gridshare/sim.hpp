#pragma once

// Deterministic in-process testbed: the node state machines from nodes.hpp
// wired together by a discrete-event scheduler with virtual time.
//
// Per-link delays are a pure function of (seed, message ordinal, hop, cell),
// so two testbeds fed the same messages see identical delays regardless of
// scheme. That makes latency comparisons between schemes paired.

#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "gridshare/attack.hpp"
#include "gridshare/events.hpp"
#include "gridshare/nodes.hpp"
#include "gridshare/random.hpp"

namespace gridshare {

enum class Hop : std::uint8_t { distribution = 0, uplink_to_relay = 1, relay_to_receiver = 2 };

struct LinkDelayModel {
    Timestamp base{0};
    Timestamp jitter{0};  // uniform extra delay in [0, jitter]
    std::uint64_t seed = 0;

    [[nodiscard]] Timestamp delay(std::uint64_t message_ordinal, Hop hop, CellIndex cell) const {
        if (jitter.count() <= 0) return base;
        const std::uint64_t key = (message_ordinal << 16) | (static_cast<std::uint64_t>(hop) << 8) |
                                  static_cast<std::uint64_t>(cell.linear());
        const std::uint64_t h = derive_seed(seed, key);
        const auto span = static_cast<std::uint64_t>(jitter.count()) + 1;
        return base + Timestamp(static_cast<Timestamp::rep>(h % span));
    }
};

struct SimOptions {
    SchemeKind scheme = SchemeKind::two_layer;
    SchemeParams params{};
    std::size_t payload_size = 1024;
    Timestamp timeout = std::chrono::seconds(5);
    bool integrity = true;
    LinkDelayModel delays{};
};

class SimTestbed {
public:
    explicit SimTestbed(SimOptions options = {})
        : options_(options),
          receiver_(ReceiverConfig{options.scheme, options.params, options.timeout, options.integrity}) {
        for (int k = 0; k < kGridSize; ++k) {
            uplinks_[k].index = k;
            relays_[k].index = k;
        }
    }

    AttackRules& rules() { return rules_; }
    [[nodiscard]] const SimOptions& options() const { return options_; }

    std::shared_ptr<TapCapture> attach_tap(TapPoint point) {
        rules_.set_tap(point, true);
        auto tap = std::make_shared<TapCapture>(point);
        if (point.kind == TapPoint::Kind::relay)
            relays_[point.index].tap = tap;
        else
            uplink_taps_[point.index] = tap;
        return tap;
    }

    template <RandomSource R>
    MessageId dispatch(std::span<const std::uint8_t> message, R& rng, std::optional<MessageId> id = std::nullopt) {
        const MessageId msg_id = id ? *id : random_message_id(rng);
        Transmission t = prepare_transmission(message, options_.scheme, msg_id, options_.payload_size, rng,
                                              options_.params);
        const std::uint64_t ordinal = ordinal_++;
        receiver_.expect(msg_id, now_);

        Event e;
        e.kind = EventKind::message_dispatched;
        e.time = now_;
        e.msg_id = msg_id;
        record(std::move(e));

        for (int col = 0; col < kGridSize; ++col)
            for (Datagram& d : t.per_column[col]) {
                const CellIndex cell{d[0], col};
                schedule(now_ + options_.delays.delay(ordinal, Hop::distribution, cell), Node::uplink, col, ordinal,
                         std::move(d));
            }
        return msg_id;
    }

    // Processes every scheduled delivery.
    void run() {
        while (!queue_.empty()) {
            Pending p = queue_.top();
            queue_.pop();
            now_ = std::max(now_, p.at);
            deliver(p);
        }
    }

    // Advances virtual time past every deadline and returns all reports.
    std::vector<DeliveryReport> finish() {
        run();
        now_ += options_.timeout;
        for (const auto& r : receiver_.timeout_sweep(now_)) record(ReceiverState::timeout_event(r, now_));
        return receiver_.take_reports();
    }

    [[nodiscard]] Timestamp now() const { return now_; }
    // Moves virtual time forward, delivering everything due on the way.
    void advance(Timestamp dt) {
        const Timestamp until = now_ + dt;
        while (!queue_.empty() && queue_.top().at <= until) {
            Pending p = queue_.top();
            queue_.pop();
            now_ = std::max(now_, p.at);
            deliver(p);
        }
        now_ = until;
    }

    [[nodiscard]] const std::vector<Event>& events() const { return events_; }
    [[nodiscard]] const ReceiverState& receiver() const { return receiver_; }
    [[nodiscard]] const RelayState& relay(int i) const { return relays_.at(i); }
    [[nodiscard]] const UplinkState& uplink(int j) const { return uplinks_.at(j); }

    [[nodiscard]] std::uint64_t datagrams_at_relays() const {
        std::uint64_t n = 0;
        for (const auto& r : relays_) n += r.forwarded + r.dropped;
        return n;
    }

    [[nodiscard]] std::uint64_t datagrams_at_receiver() const { return delivered_to_receiver_; }

private:
    enum class Node { uplink, relay, receiver };

    struct Pending {
        Timestamp at;
        std::uint64_t order;
        Node node;
        int index;
        std::uint64_t ordinal;
        Datagram data;

        bool operator>(const Pending& o) const { return at != o.at ? at > o.at : order > o.order; }
    };

    void schedule(Timestamp at, Node node, int index, std::uint64_t ordinal, Datagram data) {
        queue_.push(Pending{at, order_++, node, index, ordinal, std::move(data)});
    }

    void deliver(Pending& p) {
        switch (p.node) {
            case Node::uplink: {
                const auto relay = uplink_route(uplinks_[p.index], rules_, p.data);
                if (!relay) return;
                if (const auto& tap = uplink_taps_[p.index]) tap->tap_record(p.data, now_ns());
                const CellIndex cell{*relay, p.index};
                schedule(now_ + options_.delays.delay(p.ordinal, Hop::uplink_to_relay, cell), Node::relay, *relay,
                         p.ordinal, std::move(p.data));
                return;
            }
            case Node::relay: {
                const CellIndex cell{p.index, p.data.size() > 1 ? p.data[1] : 0};
                auto out = relay_forward(p.data, relays_[p.index], rules_, now_);
                if (!out) return;
                schedule(now_ + options_.delays.delay(p.ordinal, Hop::relay_to_receiver, cell), Node::receiver, 0,
                         p.ordinal, std::move(*out));
                return;
            }
            case Node::receiver:
                ++delivered_to_receiver_;
                for (Event& e : receiver_.ingest(p.data, now_)) record(std::move(e));
                return;
        }
    }

    void record(Event e) {
        e.seq = events_.size() + 1;
        events_.push_back(std::move(e));
    }

    [[nodiscard]] std::uint64_t now_ns() const { return static_cast<std::uint64_t>(now_.count()); }

    SimOptions options_;
    AttackRules rules_;
    std::array<UplinkState, 3> uplinks_{};
    std::array<RelayState, 3> relays_{};
    std::array<std::shared_ptr<TapCapture>, 3> uplink_taps_{};
    ReceiverState receiver_;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
    std::vector<Event> events_;
    Timestamp now_{0};
    std::uint64_t order_ = 0;
    std::uint64_t ordinal_ = 0;
    std::uint64_t delivered_to_receiver_ = 0;
};

}  // namespace gridshare
