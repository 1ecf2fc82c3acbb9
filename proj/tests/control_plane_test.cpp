#include "gridshare/control_server.hpp"

#include <gtest/gtest.h>

#include <set>

namespace gridshare {
namespace {

using namespace std::chrono_literals;
using nlohmann::json;

class ControlPlaneTest : public ::testing::Test {
protected:
    ControlPlaneTest() : plane_(topology()), server_(plane_, {"127.0.0.1", 0}), client_("127.0.0.1", server_.endpoint().port) {
        client_.set_read_timeout(5, 0);
    }

    static TopologyConfig topology() {
        auto t = TopologyConfig::loopback();
        t.timeout = 300ms;
        return t;
    }

    json get(const std::string& path) {
        auto res = client_.Get(path);
        EXPECT_TRUE(res);
        if (!res) return {};
        EXPECT_EQ(res->status, 200) << res->body;
        return json::parse(res->body);
    }

    std::pair<int, json> post(const std::string& path, const json& body) {
        auto res = client_.Post(path, body.dump(), "application/json");
        EXPECT_TRUE(res);
        if (!res) return {0, {}};
        return {res->status, json::parse(res->body)};
    }

    void attack(const std::string& type, int index, bool on = true) {
        const auto [status, body] = post("/attack", {{"verb", on ? "set-attack" : "clear-attack"}, {"type", type}, {"index", index}});
        ASSERT_EQ(status, 200) << body.dump();
    }

    // Sends and waits until the snapshot shows a final status.
    json send_and_settle(json body = json::object()) {
        body["wait"] = true;
        const auto [status, reply] = post("/send", body);
        EXPECT_EQ(status, 200) << reply.dump();
        const auto id = reply.at("msg_id").get<MessageId>();
        for (int i = 0; i < 200; ++i) {
            const auto state = get("/state");
            for (const auto& m : state["messages"])
                if (m["msg_id"] == id && m["status"] != "pending") return m;
            std::this_thread::sleep_for(10ms);
        }
        ADD_FAILURE() << "message never settled";
        return {};
    }

    static int present(const json& grid) {
        int n = 0;
        for (const auto& row : grid)
            for (const auto& c : row) n += c.get<bool>();
        return n;
    }

    ControlPlane plane_;
    ControlServer server_;
    httplib::Client client_;
};

TEST_F(ControlPlaneTest, IdleState) {
    const auto s = get("/state");
    EXPECT_TRUE(s["messages"].empty());
    for (const char* k : {"operators", "relays", "eavesdrop"})
        for (const auto& v : s["attacks"][k]) EXPECT_FALSE(v.get<bool>());
    EXPECT_EQ(s["scheme"], "two-layer");
    const auto m = get("/metrics");
    EXPECT_EQ(m["messages"]["sent"], 0);
    EXPECT_TRUE(m["recovery_rate"].is_null());
}

TEST_F(ControlPlaneTest, OperatorDosThenSend) {
    attack("operator", 1);
    const auto ev = get("/events?format=json");
    ASSERT_FALSE(ev["events"].empty());
    EXPECT_EQ(ev["events"].back()["kind"], "attack-toggled");
    EXPECT_EQ(ev["events"].back()["attack"]["index"], 1);

    const auto m = send_and_settle({{"text", "hello grid"}});
    EXPECT_EQ(m["status"], "recovered");
    EXPECT_TRUE(m["operators_down"][1].get<bool>());
    for (const auto& f : m["fragments"]) {
        for (int r = 0; r < 3; ++r) EXPECT_FALSE(f["arrived"][r][1].get<bool>());
        EXPECT_TRUE(f["decoded"].get<bool>());
        EXPECT_GE(present(f["arrived"]), 4);
    }
}

TEST_F(ControlPlaneTest, RelayAndOperatorDosLeaveFourCells) {
    attack("relay", 0);
    attack("operator", 2);
    const auto m = send_and_settle({{"payload_size", 3000}});
    EXPECT_EQ(m["status"], "recovered");
    ASSERT_EQ(m["fragments"].size(), 3u);
    for (const auto& f : m["fragments"]) {
        EXPECT_EQ(present(f["arrived"]), 4);
        EXPECT_EQ(f["submatrix"]["rows"], json({1, 2}));
        EXPECT_EQ(f["submatrix"]["cols"], json({0, 1}));
    }
    const auto s = get("/state");
    EXPECT_TRUE(s["attacks"]["relays"][0].get<bool>());
    EXPECT_TRUE(s["attacks"]["operators"][2].get<bool>());
}

TEST_F(ControlPlaneTest, RejectsBadCommands) {
    EXPECT_EQ(post("/attack", {{"verb", "set-attack"}, {"type", "relay"}, {"index", 5}}).first, 400);
    EXPECT_EQ(post("/attack", {{"verb", "explode"}}).first, 400);
    EXPECT_EQ(post("/attack", {{"verb", "set-attack"}, {"type", "satellite"}, {"index", 0}}).first, 400);
    EXPECT_EQ(post("/attack", {{"verb", "set-scheme"}, {"scheme", "nope"}}).first, 400);
    EXPECT_EQ(post("/send", {{"payload_size", 0}}).first, 400);
    auto res = client_.Post("/attack", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_FALSE(json::parse(res->body)["error"].get<std::string>().empty());
    EXPECT_EQ(get("/events?format=json")["events"].size(), 0u);
}

TEST_F(ControlPlaneTest, TwoOperatorsDownTimesOut) {
    attack("operator", 0);
    attack("operator", 1);
    EXPECT_EQ(send_and_settle()["status"], "timeout");
    EXPECT_EQ(get("/metrics")["recovery_rate"], 0.0);
}

TEST_F(ControlPlaneTest, EavesdropEntropyAppearsInMetrics) {
    attack("eavesdrop", 0);
    for (int i = 0; i < 3; ++i) send_and_settle({{"payload_size", 1024}});
    const auto m = get("/metrics");
    ASSERT_EQ(m["entropy"].size(), 1u);
    EXPECT_EQ(m["entropy"][0]["tap"], "relay-0");
    EXPECT_GT(m["entropy"][0]["entropy"].get<double>(), 0.98);
    EXPECT_EQ(m["messages"]["recovered"], 3);
}

TEST_F(ControlPlaneTest, SchemeSwitch) {
    const auto [status, body] = post("/attack", {{"verb", "set-scheme"}, {"scheme", "repetition"}});
    ASSERT_EQ(status, 200) << body.dump();
    const auto m = send_and_settle({{"text", "x"}});
    EXPECT_EQ(m["scheme"], "repetition");
    EXPECT_EQ(get("/state")["scheme"], "repetition");
}

TEST_F(ControlPlaneTest, FeedHasNoGapsOrDuplicates) {
    attack("relay", 2);
    for (int i = 0; i < 4; ++i) send_and_settle({{"payload_size", 2000}});
    attack("relay", 2, false);
    const auto events = get("/events?format=json")["events"];
    ASSERT_FALSE(events.empty());
    for (std::size_t i = 0; i < events.size(); ++i) EXPECT_EQ(events[i]["seq"], i + 1);
    // Per message: dispatched first, recovered exactly once; each cell once.
    std::map<MessageId, std::vector<std::string>> per_msg;
    std::set<std::string> cells;
    for (const auto& e : events) {
        if (!e.contains("msg_id")) continue;
        per_msg[e["msg_id"].get<MessageId>()].push_back(e["kind"]);
        if (e["kind"] == "cell-arrived")
            EXPECT_TRUE(cells.insert(json{e["msg_id"], e["fragment"], e["cell"]}.dump()).second);
    }
    EXPECT_EQ(per_msg.size(), 4u);
    for (const auto& [id, kinds] : per_msg) {
        EXPECT_EQ(kinds.front(), "message-dispatched");
        EXPECT_EQ(std::count(kinds.begin(), kinds.end(), "message-recovered"), 1);
    }
    const auto later = get("/events?format=json&since=" + std::to_string(events.size() - 1))["events"];
    ASSERT_EQ(later.size(), 1u);
    EXPECT_EQ(later[0]["kind"], "attack-toggled");
}

TEST_F(ControlPlaneTest, ServerSentEvents) {
    attack("operator", 0);
    std::string received;
    httplib::Client sse("127.0.0.1", server_.endpoint().port);
    sse.set_read_timeout(5, 0);
    std::thread trigger([&] {
        std::this_thread::sleep_for(100ms);
        httplib::Client c("127.0.0.1", server_.endpoint().port);
        c.Post("/attack", json{{"verb", "set-attack"}, {"type", "relay"}, {"index", 1}}.dump(), "application/json");
    });
    sse.Get("/events", httplib::Headers{{"Last-Event-ID", "0"}}, [&](const char* data, std::size_t n) {
        received.append(data, n);
        return received.find("id: 2\n") == std::string::npos;
    });
    trigger.join();
    EXPECT_NE(received.find("id: 1\nevent: attack-toggled\ndata: "), std::string::npos) << received;
    EXPECT_NE(received.find("id: 2\nevent: attack-toggled\ndata: "), std::string::npos) << received;
}

TEST(ControlBindTest, EnvironmentOverride) {
    ::setenv(kBindEnv, "0.0.0.0:9999", 1);
    EXPECT_EQ(control_bind_from_env(), (Endpoint{"0.0.0.0", 9999}));
    ::unsetenv(kBindEnv);
    EXPECT_EQ(control_bind_from_env(), (Endpoint{"127.0.0.1", 8080}));
}

}  // namespace
}  // namespace gridshare
