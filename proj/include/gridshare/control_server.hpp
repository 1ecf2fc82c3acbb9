#pragma once

// HTTP/JSON front end for a ControlPlane. Endpoints are described in
// docs/api.md.

#include <cstdlib>

#include "httplib.h"

#include "gridshare/control_plane.hpp"

namespace gridshare {

inline constexpr const char* kBindEnv = "GRIDSHARE_BIND";
inline constexpr const char* kDefaultBind = "127.0.0.1:8080";

inline Endpoint control_bind_from_env() {
    const char* v = std::getenv(kBindEnv);
    return Endpoint::parse(v && *v ? v : kDefaultBind);
}

inline std::string sse_frame(const Event& e) {
    return "id: " + std::to_string(e.seq) + "\nevent: " + event_kind_name(e.kind) + "\ndata: " + to_json(e).dump() +
           "\n\n";
}

class ControlServer {
public:
    ControlServer(ControlPlane& plane, const Endpoint& bind) : plane_(plane) {
        routes();
        host_ = bind.host;
        if (bind.port == 0) {
            const int port = server_.bind_to_any_port(bind.host);
            if (port <= 0) throw IoError("cannot bind control plane to " + bind.str());
            port_ = static_cast<std::uint16_t>(port);
        } else {
            if (!server_.bind_to_port(bind.host, bind.port)) throw IoError("cannot bind control plane to " + bind.str());
            port_ = bind.port;
        }
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~ControlServer() { stop(); }

    ControlServer(const ControlServer&) = delete;
    ControlServer& operator=(const ControlServer&) = delete;

    [[nodiscard]] Endpoint endpoint() const { return {host_, port_}; }

    void stop() {
        stopping_ = true;
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

private:
    static void reply(httplib::Response& res, const nlohmann::json& body, int status = 200) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void reject(httplib::Response& res, const std::string& reason, int status = 400) {
        reply(res, {{"ok", false}, {"error", reason}}, status);
    }

    static std::optional<nlohmann::json> body_json(const httplib::Request& req, httplib::Response& res) {
        if (req.body.empty()) return nlohmann::json::object();
        try {
            return nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception&) {
            reject(res, "body is not valid JSON");
            return std::nullopt;
        }
    }

    static std::uint64_t since_param(const httplib::Request& req) {
        std::string v;
        if (req.has_param("since"))
            v = req.get_param_value("since");
        else if (req.has_header("Last-Event-ID"))
            v = req.get_header_value("Last-Event-ID");
        if (v.empty()) return 0;
        try {
            return std::stoull(v);
        } catch (const std::logic_error&) {
            throw InvalidArgument("since must be a non-negative integer");
        }
    }

    void routes() {
        server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                     {"Access-Control-Allow-Headers", "Content-Type, Last-Event-ID"},
                                     {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server_.Get("/state", [this](const httplib::Request&, httplib::Response& res) { reply(res, plane_.state()); });
        server_.Get("/metrics",
                    [this](const httplib::Request&, httplib::Response& res) { reply(res, plane_.metrics()); });

        server_.Post("/attack", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = body_json(req, res);
            if (!body) return;
            try {
                const auto cmd = ControlCommand::parse(*body);
                if (cmd.verb == ControlCommand::Verb::send_test_message) return reject(res, "use POST /send to send");
                auto r = plane_.execute(cmd);
                r.body["seq"] = plane_.events().last_seq();
                reply(res, r.body);
            } catch (const Error& e) {
                reject(res, e.what());
            }
        });

        server_.Post("/send", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = body_json(req, res);
            if (!body) return;
            try {
                (*body)["verb"] = "send-test-message";
                const auto cmd = ControlCommand::parse(*body);
                auto r = plane_.execute(cmd);
                if (body->value("wait", false) && r.msg_id) {
                    const auto timeout = plane_.topology().timeout * 2 + std::chrono::seconds(1);
                    if (const auto report = plane_.wait_report(*r.msg_id, timeout)) {
                        r.body["status"] = report->recovered() ? "recovered" : "timeout";
                        r.body["latency_ms"] =
                            report->latency
                                ? nlohmann::json(std::chrono::duration<double, std::milli>(*report->latency).count())
                                : nlohmann::json(nullptr);
                    }
                }
                reply(res, r.body);
            } catch (const Error& e) {
                reject(res, e.what());
            }
        });

        server_.Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
            std::uint64_t since = 0;
            try {
                since = since_param(req);
            } catch (const InvalidArgument& e) {
                return reject(res, e.what());
            }
            if (req.get_param_value("format") == "json") {
                int wait_ms = 0;
                if (req.has_param("wait_ms")) wait_ms = std::atoi(req.get_param_value("wait_ms").c_str());
                const auto events = wait_ms > 0
                                        ? plane_.events().wait_since(since, std::chrono::milliseconds(std::min(wait_ms, 30000)))
                                        : plane_.events().since(since);
                nlohmann::json arr = nlohmann::json::array();
                for (const auto& e : events) arr.push_back(to_json(e));
                return reply(res, {{"last_seq", plane_.events().last_seq()}, {"events", arr}});
            }
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "text/event-stream", [this, since](std::size_t, httplib::DataSink& sink) mutable {
                    std::string out = "retry: 1000\n\n";
                    while (!stopping_ && sink.is_writable()) {
                        const auto events = plane_.events().wait_since(since, std::chrono::milliseconds(500));
                        for (const auto& e : events) {
                            out += sse_frame(e);
                            since = e.seq;
                        }
                        if (out.empty()) out = ": keep-alive\n\n";
                        if (!sink.write(out.data(), out.size())) return false;
                        out.clear();
                        if (plane_.events().closed()) break;
                    }
                    sink.done();
                    return true;
                });
        });
    }

    ControlPlane& plane_;
    httplib::Server server_;
    std::string host_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread thread_;
};

}  // namespace gridshare
