#pragma once

// Supervises a LiveTestbed and keeps the operator-facing view of it.
//
// One thread owns all view state. Testbed events and API requests reach it
// through a single FIFO, so a snapshot always reflects a prefix of the event
// stream. Node threads only ever push onto that FIFO and never wait on it.

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"

#include "gridshare/live.hpp"

namespace gridshare {

struct ControlCommand {
    enum class Verb { set_attack, clear_attack, send_test_message, set_scheme };

    Verb verb = Verb::set_attack;
    std::string type;  // operator | relay | eavesdrop | eavesdrop-uplink
    int index = 0;
    std::optional<SchemeKind> scheme;
    std::size_t payload_size = 256;
    std::optional<std::string> text;

    // Rejects anything the topology cannot apply, with the reason.
    static ControlCommand parse(const nlohmann::json& j) {
        if (!j.is_object()) throw InvalidArgument("command must be a JSON object");
        ControlCommand c;
        const std::string verb = j.value("verb", std::string("set-attack"));
        if (verb == "set-attack")
            c.verb = Verb::set_attack;
        else if (verb == "clear-attack")
            c.verb = Verb::clear_attack;
        else if (verb == "send-test-message")
            c.verb = Verb::send_test_message;
        else if (verb == "set-scheme")
            c.verb = Verb::set_scheme;
        else
            throw InvalidArgument("unknown verb '" + verb + "'");

        if (c.verb == Verb::set_attack || c.verb == Verb::clear_attack) {
            if (!j.contains("type") || !j["type"].is_string()) throw InvalidArgument("attack needs a string 'type'");
            c.type = j["type"].get<std::string>();
            if (c.type != "operator" && c.type != "relay" && c.type != "eavesdrop" && c.type != "eavesdrop-uplink")
                throw InvalidArgument("unknown attack type '" + c.type + "'");
            if (!j.contains("index") || !j["index"].is_number_integer())
                throw InvalidArgument("attack needs an integer 'index'");
            c.index = j["index"].get<int>();
            if (c.index < 0 || c.index >= kGridSize)
                throw InvalidArgument("index " + std::to_string(c.index) + " out of range [0, 2]");
        } else if (c.verb == Verb::set_scheme) {
            if (!j.contains("scheme") || !j["scheme"].is_string()) throw InvalidArgument("set-scheme needs 'scheme'");
            c.scheme = parse_scheme(j["scheme"].get<std::string>());
        } else {
            if (j.contains("text")) {
                if (!j["text"].is_string()) throw InvalidArgument("'text' must be a string");
                c.text = j["text"].get<std::string>();
                if (c.text->empty()) throw InvalidArgument("'text' must be non-empty");
            }
            if (j.contains("payload_size")) {
                if (!j["payload_size"].is_number_unsigned()) throw InvalidArgument("'payload_size' must be positive");
                c.payload_size = j["payload_size"].get<std::size_t>();
            }
            if (c.payload_size == 0 || c.payload_size > (1u << 20))
                throw InvalidArgument("payload_size must be in [1, 1048576]");
        }
        return c;
    }
};

struct CommandResult {
    nlohmann::json body;
    std::optional<MessageId> msg_id;
};

struct ControlPlaneOptions {
    std::size_t message_history = 50;
    std::size_t event_capacity = 4096;
    std::size_t rolling_window = 100;
    std::size_t entropy_window = 4096;  // most recent tapped datagrams analysed
};

class ControlPlane {
public:
    explicit ControlPlane(TopologyConfig topology, ControlPlaneOptions options = {})
        : options_(options), log_(options.event_capacity) {
        scheme_ = topology.scheme;
        owner_ = std::thread([this] { loop(); });
        try {
            testbed_ = std::make_unique<LiveTestbed>(std::move(topology), [this](Event e) {
                tasks_.post([this, e = std::move(e)]() mutable { on_event(std::move(e)); });
            });
        } catch (...) {
            stop_owner();
            throw;
        }
    }

    ~ControlPlane() {
        testbed_.reset();
        stop_owner();
        log_.close();
    }

    ControlPlane(const ControlPlane&) = delete;
    ControlPlane& operator=(const ControlPlane&) = delete;

    [[nodiscard]] const EventLog& events() const { return log_; }
    [[nodiscard]] const TopologyConfig& topology() const { return testbed_->topology(); }

    nlohmann::json state() {
        return tasks_.call([this] { return snapshot(); });
    }

    nlohmann::json metrics() {
        return tasks_.call([this] { return metrics_json(); });
    }

    // Applies the command on the owner thread; returns once nodes have
    // acknowledged the change.
    CommandResult execute(const ControlCommand& cmd) {
        return tasks_.call([&] { return apply(cmd); });
    }

    std::optional<DeliveryReport> wait_report(MessageId id, std::chrono::milliseconds timeout) {
        return testbed_->wait_report(id, timeout);
    }

private:
    struct FragmentView {
        CellSet arrived;
        bool decoded = false;
        CellSet used;
        std::optional<Submatrix> submatrix;
    };

    struct MessageView {
        MessageId id = 0;
        std::string scheme;
        std::string status = "pending";
        Timestamp dispatched{};
        std::optional<Timestamp> latency;
        std::array<bool, 3> operators_down{};
        std::array<bool, 3> relays_down{};
        std::map<std::uint32_t, FragmentView> fragments;
    };

    void loop() {
        while (!stop_) tasks_.run_one(std::chrono::milliseconds(50));
        tasks_.drain();
    }

    void stop_owner() {
        stop_ = true;
        if (owner_.joinable()) owner_.join();
    }

    MessageView& message(MessageId id) {
        auto it = index_.find(id);
        if (it != index_.end()) return *it->second;
        messages_.push_back(std::make_unique<MessageView>());
        messages_.back()->id = id;
        index_[id] = messages_.back().get();
        while (messages_.size() > options_.message_history) {
            index_.erase(messages_.front()->id);
            messages_.pop_front();
        }
        return *messages_.back();
    }

    void on_event(Event e) {
        switch (e.kind) {
            case EventKind::message_dispatched: {
                ++sent_;
                auto& m = message(*e.msg_id);
                m.dispatched = e.time;
                m.scheme = e.detail.empty() ? std::string(scheme_name(scheme_)) : e.detail;
                for (int k = 0; k < 3; ++k) {
                    m.operators_down[k] = rules_.operator_down(k);
                    m.relays_down[k] = rules_.relay_down(k);
                }
                break;
            }
            case EventKind::cell_arrived:
                if (e.msg_id && e.fragment && e.cell) message(*e.msg_id).fragments[*e.fragment].arrived.insert(*e.cell);
                break;
            case EventKind::fragment_decoded:
                if (e.msg_id && e.fragment) {
                    auto& f = message(*e.msg_id).fragments[*e.fragment];
                    f.decoded = true;
                    f.used = e.cells_used.value_or(CellSet{});
                    f.submatrix = e.submatrix;
                }
                break;
            case EventKind::message_recovered:
                ++recovered_;
                remember_outcome(true);
                if (e.latency) {
                    latencies_.push_back(*e.latency);
                    if (latencies_.size() > options_.rolling_window) latencies_.pop_front();
                }
                if (e.msg_id) {
                    auto& m = message(*e.msg_id);
                    m.status = "recovered";
                    m.latency = e.latency;
                }
                break;
            case EventKind::message_timeout:
                ++timeouts_;
                remember_outcome(false);
                if (e.msg_id) message(*e.msg_id).status = "timeout";
                break;
            case EventKind::integrity_error:
                ++integrity_errors_;
                break;
            case EventKind::malformed_datagram:
                ++malformed_;
                break;
            case EventKind::attack_toggled:
                if (e.attack) {
                    const auto& a = *e.attack;
                    if (a.type == "operator") rules_.apply_operator_dos(a.index, a.on);
                    if (a.type == "relay") rules_.apply_relay_dos(a.index, a.on);
                    if (a.type == "eavesdrop") rules_.set_tap({TapPoint::Kind::relay, a.index}, a.on);
                    if (a.type == "eavesdrop-uplink") rules_.set_tap({TapPoint::Kind::uplink, a.index}, a.on);
                }
                break;
            case EventKind::scheme_changed:
                scheme_ = parse_scheme(e.detail);
                break;
        }
        log_.append(std::move(e));
    }

    void remember_outcome(bool ok) {
        outcomes_.push_back(ok);
        if (outcomes_.size() > options_.rolling_window) outcomes_.pop_front();
    }

    CommandResult apply(const ControlCommand& cmd) {
        using V = ControlCommand::Verb;
        CommandResult r;
        switch (cmd.verb) {
            case V::set_attack:
            case V::clear_attack: {
                const bool on = cmd.verb == V::set_attack;
                if (cmd.type == "operator") testbed_->set_operator_dos(cmd.index, on);
                if (cmd.type == "relay") testbed_->set_relay_dos(cmd.index, on);
                if (cmd.type == "eavesdrop") taps_[cmd.index] = testbed_->set_tap({TapPoint::Kind::relay, cmd.index}, on);
                if (cmd.type == "eavesdrop-uplink")
                    taps_[3 + cmd.index] = testbed_->set_tap({TapPoint::Kind::uplink, cmd.index}, on);
                r.body = {{"ok", true}, {"type", cmd.type}, {"index", cmd.index}, {"on", on}};
                break;
            }
            case V::set_scheme:
                testbed_->set_scheme(*cmd.scheme);
                r.body = {{"ok", true}, {"scheme", scheme_name(*cmd.scheme)}};
                break;
            case V::send_test_message: {
                std::vector<std::uint8_t> msg;
                if (cmd.text) {
                    msg.assign(cmd.text->begin(), cmd.text->end());
                } else {
                    msg.resize(cmd.payload_size);
                    system_.fill(msg);
                }
                r.msg_id = testbed_->send(msg);
                r.body = {{"ok", true}, {"msg_id", *r.msg_id}, {"bytes", msg.size()}};
                break;
            }
        }
        return r;
    }

    nlohmann::json attacks_json() const {
        nlohmann::json ops = nlohmann::json::array(), rels = nlohmann::json::array(), taps = nlohmann::json::array(),
                       utaps = nlohmann::json::array();
        for (int k = 0; k < 3; ++k) {
            ops.push_back(rules_.operator_down(k));
            rels.push_back(rules_.relay_down(k));
            taps.push_back(rules_.tapped({TapPoint::Kind::relay, k}));
            utaps.push_back(rules_.tapped({TapPoint::Kind::uplink, k}));
        }
        return {{"operators", ops}, {"relays", rels}, {"eavesdrop", taps}, {"eavesdrop_uplink", utaps}};
    }

    static nlohmann::json grid_json(CellSet s) {
        nlohmann::json g = nlohmann::json::array();
        for (int r = 0; r < 3; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (int c = 0; c < 3; ++c) row.push_back(s.contains(CellIndex{r, c}));
            g.push_back(row);
        }
        return g;
    }

    static double ms(Timestamp t) { return std::chrono::duration<double, std::milli>(t).count(); }

    nlohmann::json snapshot() const {
        nlohmann::json msgs = nlohmann::json::array();
        for (auto it = messages_.rbegin(); it != messages_.rend(); ++it) {
            const MessageView& m = **it;
            nlohmann::json frags = nlohmann::json::array();
            for (const auto& [index, f] : m.fragments) {
                nlohmann::json fj = {{"index", index},
                                     {"arrived", grid_json(f.arrived)},
                                     {"arrived_count", f.arrived.size()},
                                     {"decoded", f.decoded},
                                     {"used", grid_json(f.used)}};
                fj["submatrix"] = f.submatrix ? nlohmann::json{{"rows", {f.submatrix->rows[0], f.submatrix->rows[1]}},
                                                               {"cols", {f.submatrix->cols[0], f.submatrix->cols[1]}}}
                                              : nlohmann::json(nullptr);
                frags.push_back(fj);
            }
            nlohmann::json mj = {{"msg_id", m.id},
                                 {"scheme", m.scheme},
                                 {"status", m.status},
                                 {"operators_down", m.operators_down},
                                 {"relays_down", m.relays_down},
                                 {"fragments", frags}};
            mj["latency_ms"] = m.latency ? nlohmann::json(ms(*m.latency)) : nlohmann::json(nullptr);
            msgs.push_back(mj);
        }
        return {{"seq", log_.last_seq()},
                {"scheme", scheme_name(scheme_)},
                {"attacks", attacks_json()},
                {"messages", msgs},
                {"metrics", metrics_json()}};
    }

    nlohmann::json metrics_json() const {
        nlohmann::json j;
        j["scheme"] = scheme_name(scheme_);
        j["messages"] = {{"sent", sent_},
                         {"recovered", recovered_},
                         {"timeout", timeouts_},
                         {"pending", sent_ - std::min(sent_, recovered_ + timeouts_)}};
        if (outcomes_.empty()) {
            j["recovery_rate"] = nullptr;
        } else {
            const auto ok = std::count(outcomes_.begin(), outcomes_.end(), true);
            j["recovery_rate"] = static_cast<double>(ok) / static_cast<double>(outcomes_.size());
        }
        nlohmann::json recent = nlohmann::json::array();
        double sum = 0;
        for (Timestamp t : latencies_) {
            recent.push_back(ms(t));
            sum += ms(t);
        }
        j["latency_ms"] = {{"recent", recent},
                           {"mean", latencies_.empty() ? nlohmann::json(nullptr)
                                                       : nlohmann::json(sum / static_cast<double>(latencies_.size()))}};
        nlohmann::json ent = nlohmann::json::array();
        for (const auto& [slot, tap] : taps_) {
            if (!tap) continue;
            auto records = tap->snapshot();
            if (records.size() > options_.entropy_window)
                records.erase(records.begin(), records.end() - static_cast<std::ptrdiff_t>(options_.entropy_window));
            nlohmann::json tj = {{"tap", to_string(tap->point())}, {"datagrams", records.size()}};
            try {
                const auto rep = analyze_capture(std::span<const CapturedDatagram>(records));
                tj["payload_bits"] = rep.payload_bits;
                tj["entropy"] = rep.entropy;
            } catch (const InvalidArgument&) {
                tj["payload_bits"] = 0;
                tj["entropy"] = nullptr;
            }
            ent.push_back(tj);
        }
        j["entropy"] = ent;
        j["integrity_errors"] = integrity_errors_;
        j["malformed"] = malformed_;
        j["last_seq"] = log_.last_seq();
        return j;
    }

    ControlPlaneOptions options_;
    EventLog log_;
    detail::TaskQueue tasks_;
    std::atomic<bool> stop_{false};
    std::thread owner_;
    std::unique_ptr<LiveTestbed> testbed_;
    SystemRandom system_;

    // Owner-thread state.
    SchemeKind scheme_{};
    AttackRules rules_;
    std::map<int, std::shared_ptr<TapCapture>> taps_;
    std::deque<std::unique_ptr<MessageView>> messages_;
    std::map<MessageId, MessageView*> index_;
    std::deque<bool> outcomes_;
    std::deque<Timestamp> latencies_;
    std::uint64_t sent_ = 0, recovered_ = 0, timeouts_ = 0, integrity_errors_ = 0, malformed_ = 0;
};

}  // namespace gridshare
