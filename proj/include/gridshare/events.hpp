#pragma once

// Structured events emitted by nodes and the control plane, and the bounded
// in-memory log that orders them.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gridshare/grid.hpp"
#include "gridshare/wire.hpp"

namespace gridshare {

using Timestamp = std::chrono::nanoseconds;

inline Timestamp steady_now() {
    return std::chrono::duration_cast<Timestamp>(std::chrono::steady_clock::now().time_since_epoch());
}

enum class EventKind {
    message_dispatched,
    cell_arrived,
    fragment_decoded,
    message_recovered,
    message_timeout,
    integrity_error,
    malformed_datagram,
    attack_toggled,
    scheme_changed,
};

inline const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::message_dispatched: return "message-dispatched";
        case EventKind::cell_arrived: return "cell-arrived";
        case EventKind::fragment_decoded: return "fragment-decoded";
        case EventKind::message_recovered: return "message-recovered";
        case EventKind::message_timeout: return "message-timeout";
        case EventKind::integrity_error: return "integrity-error";
        case EventKind::malformed_datagram: return "malformed-datagram";
        case EventKind::attack_toggled: return "attack-toggled";
        case EventKind::scheme_changed: return "scheme-changed";
    }
    return "unknown";
}

struct AttackChange {
    std::string type;  // operator | relay | eavesdrop
    int index = 0;
    bool on = false;

    friend bool operator==(const AttackChange&, const AttackChange&) = default;
};

struct Event {
    std::uint64_t seq = 0;  // assigned by EventLog
    EventKind kind = EventKind::cell_arrived;
    Timestamp time{};
    std::optional<MessageId> msg_id;
    std::optional<std::uint32_t> fragment;
    std::optional<CellIndex> cell;
    std::optional<Submatrix> submatrix;
    std::optional<CellSet> cells_used;
    std::optional<Timestamp> latency;
    std::optional<AttackChange> attack;
    std::string detail;

    friend bool operator==(const Event&, const Event&) = default;
};

using EventSink = std::function<void(Event)>;

inline nlohmann::json to_json(const Event& e) {
    nlohmann::json j;
    j["seq"] = e.seq;
    j["kind"] = event_kind_name(e.kind);
    j["time_ns"] = e.time.count();
    if (e.msg_id) j["msg_id"] = *e.msg_id;
    if (e.fragment) j["fragment"] = *e.fragment;
    if (e.cell) j["cell"] = {{"row", e.cell->row}, {"col", e.cell->col}};
    if (e.submatrix)
        j["submatrix"] = {{"rows", {e.submatrix->rows[0], e.submatrix->rows[1]}},
                          {"cols", {e.submatrix->cols[0], e.submatrix->cols[1]}}};
    if (e.cells_used) {
        auto& arr = j["cells_used"] = nlohmann::json::array();
        for (CellIndex c : e.cells_used->cells()) arr.push_back({c.row, c.col});
    }
    if (e.latency) j["latency_ms"] = std::chrono::duration<double, std::milli>(*e.latency).count();
    if (e.attack) j["attack"] = {{"type", e.attack->type}, {"index", e.attack->index}, {"on", e.attack->on}};
    if (!e.detail.empty()) j["detail"] = e.detail;
    return j;
}

// Bounded, append-only event history with monotonic sequence numbers.
// Readers may block waiting for events newer than a given sequence.
class EventLog {
public:
    explicit EventLog(std::size_t capacity = 4096) : capacity_(capacity) {}

    std::uint64_t append(Event e) {
        std::lock_guard lock(mutex_);
        e.seq = ++last_seq_;
        events_.push_back(std::move(e));
        if (events_.size() > capacity_) events_.pop_front();
        cv_.notify_all();
        return last_seq_;
    }

    // Retained events with seq > since.
    [[nodiscard]] std::vector<Event> since(std::uint64_t since) const {
        std::lock_guard lock(mutex_);
        return collect(since);
    }

    // Like since(), but waits up to `timeout` when nothing newer exists.
    std::vector<Event> wait_since(std::uint64_t since, std::chrono::milliseconds timeout) const {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, timeout, [&] { return last_seq_ > since || closed_; });
        return collect(since);
    }

    [[nodiscard]] std::uint64_t last_seq() const {
        std::lock_guard lock(mutex_);
        return last_seq_;
    }

    void close() {
        std::lock_guard lock(mutex_);
        closed_ = true;
        cv_.notify_all();
    }

    [[nodiscard]] bool closed() const {
        std::lock_guard lock(mutex_);
        return closed_;
    }

private:
    std::vector<Event> collect(std::uint64_t since) const {
        std::vector<Event> out;
        for (const auto& e : events_)
            if (e.seq > since) out.push_back(e);
        return out;
    }

    std::size_t capacity_;
    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    std::deque<Event> events_;
    std::uint64_t last_seq_ = 0;
    bool closed_ = false;
};

}  // namespace gridshare
