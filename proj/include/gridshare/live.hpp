#pragma once

// Threaded UDP runtime for the node state machines.
//
// Every node owns one thread and one socket. Rule changes and queries are
// executed on the node's own thread through its task queue, so node state
// is never shared. LiveTestbed wires one of each role together in a single
// process; the same node classes back the standalone CLI roles.

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <type_traits>
#include <variant>

#include "gridshare/channel.hpp"
#include "gridshare/net.hpp"
#include "gridshare/nodes.hpp"
#include "gridshare/topology.hpp"

namespace gridshare {

namespace detail {

class TaskQueue {
public:
    void post(std::function<void()> task) { queue_.push(std::move(task)); }

    // Runs `f` on the owning thread and waits for its result.
    template <class F>
    auto call(F&& f) -> std::invoke_result_t<F> {
        using R = std::invoke_result_t<F>;
        auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(f));
        auto result = task->get_future();
        queue_.push([task] { (*task)(); });
        return result.get();
    }

    void drain() {
        while (auto t = queue_.try_pop()) (*t)();
    }

    bool run_one(std::chrono::milliseconds timeout) {
        auto t = queue_.pop(timeout);
        if (!t) return false;
        (*t)();
        return true;
    }

private:
    Channel<std::function<void()>> queue_;
};

inline constexpr std::chrono::milliseconds kPollInterval{2};

}  // namespace detail

// Serializes calls into a user sink from many node threads.
class SharedSink {
public:
    explicit SharedSink(EventSink sink = {}) : sink_(std::move(sink)) {}

    void operator()(Event e) {
        if (!sink_) return;
        std::lock_guard lock(mutex_);
        sink_(std::move(e));
    }

private:
    std::mutex mutex_;
    EventSink sink_;
};

class RelayNode {
public:
    struct Stats {
        std::uint64_t forwarded = 0;
        std::uint64_t dropped = 0;
    };

    RelayNode(int index, const Endpoint& listen, const Endpoint& forward)
        : socket_(UdpSocket::bind(listen)), forward_(forward.sockaddr()) {
        state_.index = index;
        thread_ = std::thread([this] { loop(); });
    }

    ~RelayNode() {
        stop_ = true;
        thread_.join();
    }

    RelayNode(const RelayNode&) = delete;
    RelayNode& operator=(const RelayNode&) = delete;

    [[nodiscard]] Endpoint endpoint() const { return socket_.local_endpoint(); }

    void set_dos(bool on) {
        tasks_.call([&] { rules_.apply_relay_dos(state_.index, on); });
    }

    // Starts (returns the capture) or stops a mirror of arriving traffic.
    std::shared_ptr<TapCapture> set_tap(bool on) {
        return tasks_.call([&] {
            rules_.set_tap({TapPoint::Kind::relay, state_.index}, on);
            if (on && !state_.tap) state_.tap = std::make_shared<TapCapture>(TapPoint{TapPoint::Kind::relay, state_.index});
            if (!on) state_.tap.reset();
            return state_.tap;
        });
    }

    Stats stats() {
        return tasks_.call([&] { return Stats{state_.forwarded, state_.dropped}; });
    }

private:
    void loop() {
        while (!stop_) {
            auto datagram = socket_.receive(detail::kPollInterval);
            tasks_.drain();
            if (!datagram) continue;
            if (auto out = relay_forward(*datagram, state_, rules_, steady_now())) {
                try {
                    socket_.send_to(*out, forward_);
                } catch (const IoError&) {
                    // receiver gone; UDP semantics
                }
            }
        }
    }

    UdpSocket socket_;
    sockaddr_in forward_;
    RelayState state_;
    AttackRules rules_;
    detail::TaskQueue tasks_;
    std::atomic<bool> stop_{false};
    std::thread thread_;
};

class UplinkNode {
public:
    struct Stats {
        std::uint64_t sent = 0;
        std::uint64_t suppressed = 0;
    };

    UplinkNode(int index, const Endpoint& bind, const std::array<Endpoint, 3>& relays)
        : socket_(UdpSocket::bind(bind)) {
        state_.index = index;
        for (int i = 0; i < 3; ++i) relays_[i] = relays[i].sockaddr();
        thread_ = std::thread([this] { loop(); });
    }

    ~UplinkNode() {
        stop_ = true;
        thread_.join();
    }

    UplinkNode(const UplinkNode&) = delete;
    UplinkNode& operator=(const UplinkNode&) = delete;

    // Hands over this column's datagrams; each goes to the relay named in
    // its header unless the operator is down.
    void submit(std::vector<Datagram> column) {
        tasks_.post([this, column = std::move(column)] {
            for (const Datagram& d : column) {
                const auto relay = uplink_route(state_, rules_, d);
                if (!relay) continue;
                if (tap_) tap_->tap_record(d, static_cast<std::uint64_t>(steady_now().count()));
                try {
                    socket_.send_to(d, relays_[*relay]);
                } catch (const IoError&) {
                }
            }
        });
    }

    void set_dos(bool on) {
        tasks_.call([&] { rules_.apply_operator_dos(state_.index, on); });
    }

    std::shared_ptr<TapCapture> set_tap(bool on) {
        return tasks_.call([&] {
            rules_.set_tap({TapPoint::Kind::uplink, state_.index}, on);
            if (on && !tap_) tap_ = std::make_shared<TapCapture>(TapPoint{TapPoint::Kind::uplink, state_.index});
            if (!on) tap_.reset();
            return tap_;
        });
    }

    Stats stats() {
        return tasks_.call([&] { return Stats{state_.sent, state_.suppressed}; });
    }

    // Blocks until everything submitted so far has been sent.
    void flush() {
        tasks_.call([] {});
    }

private:
    void loop() {
        while (!stop_) tasks_.run_one(std::chrono::milliseconds(20));
        tasks_.drain();
    }

    UdpSocket socket_;
    std::array<sockaddr_in, 3> relays_{};
    UplinkState state_;
    AttackRules rules_;
    std::shared_ptr<TapCapture> tap_;
    detail::TaskQueue tasks_;
    std::atomic<bool> stop_{false};
    std::thread thread_;
};

class ReceiverNode {
public:
    static constexpr std::size_t kReportHistory = 8192;

    ReceiverNode(const Endpoint& listen, ReceiverConfig config, EventSink sink)
        : socket_(UdpSocket::bind(listen)), state_(config), sink_(std::move(sink)) {
        thread_ = std::thread([this] { loop(); });
    }

    ~ReceiverNode() {
        stop_ = true;
        thread_.join();
    }

    ReceiverNode(const ReceiverNode&) = delete;
    ReceiverNode& operator=(const ReceiverNode&) = delete;

    [[nodiscard]] Endpoint endpoint() const { return socket_.local_endpoint(); }

    void expect(MessageId id, Timestamp dispatched) {
        tasks_.post([this, id, dispatched] { state_.expect(id, dispatched); });
    }

    void set_scheme(SchemeKind k) {
        tasks_.call([&] { state_.set_scheme(k); });
    }

    std::optional<DeliveryReport> wait_report(MessageId id, std::chrono::milliseconds timeout) {
        std::unique_lock lock(reports_mutex_);
        if (!reports_cv_.wait_for(lock, timeout, [&] { return reports_.contains(id); })) return std::nullopt;
        return reports_.at(id);
    }

    std::vector<DeliveryReport> reports() const {
        std::lock_guard lock(reports_mutex_);
        std::vector<DeliveryReport> out;
        for (const auto& [id, r] : reports_) out.push_back(r);
        return out;
    }

    [[nodiscard]] std::uint64_t datagrams_received() const { return received_; }

private:
    void loop() {
        while (!stop_) {
            auto datagram = socket_.receive(detail::kPollInterval);
            tasks_.drain();
            const Timestamp now = steady_now();
            if (datagram) {
                ++received_;
                for (Event& e : state_.ingest(*datagram, now)) sink_(std::move(e));
            }
            for (const auto& r : state_.timeout_sweep(now)) sink_(ReceiverState::timeout_event(r, now));
            auto done = state_.take_reports();
            if (!done.empty()) {
                {
                    std::lock_guard lock(reports_mutex_);
                    for (auto& r : done) {
                        if (reports_.emplace(r.msg_id, r).second) order_.push_back(r.msg_id);
                    }
                    while (order_.size() > kReportHistory) {
                        reports_.erase(order_.front());
                        order_.pop_front();
                    }
                }
                reports_cv_.notify_all();
                state_.prune(1024);
            }
        }
    }

    UdpSocket socket_;
    ReceiverState state_;
    EventSink sink_;
    detail::TaskQueue tasks_;
    mutable std::mutex reports_mutex_;
    std::condition_variable reports_cv_;
    std::map<MessageId, DeliveryReport> reports_;
    std::deque<MessageId> order_;
    std::atomic<std::uint64_t> received_{0};
    std::atomic<bool> stop_{false};
    std::thread thread_;
};

// One sender coordinator, three uplinks, three relays and a receiver in one
// process, talking UDP over the configured addresses.
class LiveTestbed {
public:
    struct Stats {
        std::array<UplinkNode::Stats, 3> uplinks;
        std::array<RelayNode::Stats, 3> relays;
        std::uint64_t receiver_datagrams = 0;
    };

    explicit LiveTestbed(TopologyConfig topology, EventSink sink = {},
                         std::optional<std::uint64_t> seed = std::nullopt)
        : topology_(std::move(topology)), sink_(std::make_shared<SharedSink>(std::move(sink))),
          scheme_(topology_.scheme) {
        topology_.validate();
        if (seed) seeded_.emplace(*seed);
        receiver_ = std::make_unique<ReceiverNode>(
            topology_.receiver,
            ReceiverConfig{topology_.scheme, {}, std::chrono::duration_cast<Timestamp>(topology_.timeout),
                           topology_.integrity},
            [sink = sink_](Event e) { (*sink)(std::move(e)); });
        const Endpoint receiver_at = receiver_->endpoint();
        std::array<Endpoint, 3> relay_at;
        for (int i = 0; i < 3; ++i) {
            const auto& rc = topology_.relays[i];
            relays_[i] = std::make_unique<RelayNode>(i, rc.listen, rc.forward.value_or(receiver_at));
            relay_at[i] = relays_[i]->endpoint();
        }
        for (int j = 0; j < 3; ++j) uplinks_[j] = std::make_unique<UplinkNode>(j, topology_.uplinks[j].bind, relay_at);
    }

    ~LiveTestbed() {
        // Tear down in data-flow order.
        for (auto& u : uplinks_) u.reset();
        for (auto& r : relays_) r.reset();
        receiver_.reset();
    }

    LiveTestbed(const LiveTestbed&) = delete;
    LiveTestbed& operator=(const LiveTestbed&) = delete;

    [[nodiscard]] const TopologyConfig& topology() const { return topology_; }

    // Encodes and hands each column to its uplink. Timing starts before
    // encoding, so reported latency includes coding cost.
    MessageId send(std::span<const std::uint8_t> message) {
        std::lock_guard lock(send_mutex_);
        const Timestamp t0 = steady_now();
        Transmission t;
        if (seeded_) {
            t = prepare_transmission(message, scheme_, random_message_id(*seeded_), topology_.payload_size, *seeded_);
        } else {
            t = prepare_transmission(message, scheme_, random_message_id(system_), topology_.payload_size, system_);
        }
        receiver_->expect(t.msg_id, t0);
        Event e;
        e.kind = EventKind::message_dispatched;
        e.time = t0;
        e.msg_id = t.msg_id;
        e.detail = std::string(scheme_name(scheme_));
        (*sink_)(std::move(e));
        for (int j = 0; j < 3; ++j) uplinks_[j]->submit(std::move(t.per_column[j]));
        return t.msg_id;
    }

    std::optional<DeliveryReport> wait_report(MessageId id, std::chrono::milliseconds timeout) {
        return receiver_->wait_report(id, timeout);
    }

    // Blocks for the outcome; waits past the receiver timeout if needed.
    DeliveryReport send_and_wait(std::span<const std::uint8_t> message) {
        const MessageId id = send(message);
        auto r = wait_report(id, topology_.timeout * 2 + std::chrono::seconds(1));
        if (!r) throw IoError("receiver produced no report");
        return *r;
    }

    void set_operator_dos(int col, bool on) {
        check(col);
        uplinks_[col]->set_dos(on);
        record_rule([&](AttackRules& r) { r.apply_operator_dos(col, on); });
        announce("operator", col, on);
    }

    void set_relay_dos(int row, bool on) {
        check(row);
        relays_[row]->set_dos(on);
        record_rule([&](AttackRules& r) { r.apply_relay_dos(row, on); });
        announce("relay", row, on);
    }

    std::shared_ptr<TapCapture> set_tap(TapPoint point, bool on) {
        check(point.index);
        auto cap = point.kind == TapPoint::Kind::relay ? relays_[point.index]->set_tap(on)
                                                       : uplinks_[point.index]->set_tap(on);
        {
            std::lock_guard lock(rules_mutex_);
            rules_.set_tap(point, on);
            if (on)
                taps_[to_string(point)] = cap;
            else
                taps_.erase(to_string(point));
        }
        announce(point.kind == TapPoint::Kind::relay ? "eavesdrop" : "eavesdrop-uplink", point.index, on);
        return cap;
    }

    [[nodiscard]] std::vector<std::shared_ptr<TapCapture>> active_taps() const {
        std::lock_guard lock(rules_mutex_);
        std::vector<std::shared_ptr<TapCapture>> out;
        for (const auto& [name, cap] : taps_) out.push_back(cap);
        return out;
    }

    void set_scheme(SchemeKind k) {
        {
            std::lock_guard lock(send_mutex_);
            scheme_ = k;
        }
        receiver_->set_scheme(k);
        Event e;
        e.kind = EventKind::scheme_changed;
        e.time = steady_now();
        e.detail = std::string(scheme_name(k));
        (*sink_)(std::move(e));
    }

    [[nodiscard]] SchemeKind scheme() const {
        std::lock_guard lock(send_mutex_);
        return scheme_;
    }

    [[nodiscard]] AttackRules rules() const {
        std::lock_guard lock(rules_mutex_);
        return rules_;
    }

    Stats stats() {
        Stats s;
        for (int k = 0; k < 3; ++k) {
            uplinks_[k]->flush();
            s.uplinks[k] = uplinks_[k]->stats();
            s.relays[k] = relays_[k]->stats();
        }
        s.receiver_datagrams = receiver_->datagrams_received();
        return s;
    }

private:
    static void check(int index) {
        if (index < 0 || index >= kGridSize) throw InvalidArgument("attack target index out of range");
    }

    template <class F>
    void record_rule(F&& f) {
        std::lock_guard lock(rules_mutex_);
        f(rules_);
    }

    void announce(const std::string& type, int index, bool on) {
        Event e;
        e.kind = EventKind::attack_toggled;
        e.time = steady_now();
        e.attack = AttackChange{type, index, on};
        (*sink_)(std::move(e));
    }

    TopologyConfig topology_;
    std::shared_ptr<SharedSink> sink_;
    mutable std::mutex send_mutex_;
    SchemeKind scheme_;
    SystemRandom system_;
    std::optional<SeededRandom> seeded_;
    mutable std::mutex rules_mutex_;
    AttackRules rules_;
    std::map<std::string, std::shared_ptr<TapCapture>> taps_;
    std::unique_ptr<ReceiverNode> receiver_;
    std::array<std::unique_ptr<RelayNode>, 3> relays_;
    std::array<std::unique_ptr<UplinkNode>, 3> uplinks_;
};

}  // namespace gridshare
