#include "gridshare/live.hpp"

#include <gtest/gtest.h>

namespace gridshare {
namespace {

using namespace std::chrono_literals;

TopologyConfig short_timeout() {
    auto t = TopologyConfig::loopback();
    t.timeout = 300ms;
    return t;
}

std::vector<std::uint8_t> payload(std::size_t n, std::uint8_t seed) {
    std::vector<std::uint8_t> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = static_cast<std::uint8_t>(seed + i * 7);
    return m;
}

TEST(LiveTest, RecoversOverUdp) {
    LiveTestbed tb(short_timeout());
    const auto msg = payload(5000, 1);
    const auto r = tb.send_and_wait(msg);
    ASSERT_TRUE(r.recovered());
    EXPECT_EQ(r.message, msg);
    EXPECT_EQ(r.fragments.size(), 5u);
    ASSERT_TRUE(r.latency);
    EXPECT_GT(r.latency->count(), 0);
}

TEST(LiveTest, EverySchemeRecovers) {
    LiveTestbed tb(short_timeout());
    for (SchemeKind k : kAllSchemes) {
        tb.set_scheme(k);
        const auto msg = payload(700, static_cast<std::uint8_t>(k));
        const auto r = tb.send_and_wait(msg);
        ASSERT_TRUE(r.recovered()) << scheme_name(k);
        EXPECT_EQ(r.message, msg);
    }
}

TEST(LiveTest, SingleOperatorAndRelayDosPairsRecover) {
    LiveTestbed tb(short_timeout());
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) {
            tb.set_operator_dos(j, true);
            tb.set_relay_dos(i, true);
            for (int m = 0; m < 3; ++m) {
                const auto msg = payload(100 + 1500 * m, static_cast<std::uint8_t>(j * 3 + i));
                const auto r = tb.send_and_wait(msg);
                ASSERT_TRUE(r.recovered()) << "operator " << j << " relay " << i;
                EXPECT_EQ(r.message, msg);
            }
            tb.set_operator_dos(j, false);
            tb.set_relay_dos(i, false);
        }
}

TEST(LiveTest, TwoOperatorsDownTimesOut) {
    LiveTestbed tb(short_timeout());
    tb.set_operator_dos(0, true);
    tb.set_operator_dos(2, true);
    const auto r = tb.send_and_wait(payload(50, 3));
    EXPECT_FALSE(r.recovered());
    EXPECT_TRUE(r.message.empty());
}

TEST(LiveTest, TapCapturesTwelveByteHeaders) {
    LiveTestbed tb(short_timeout());
    auto cap = tb.set_tap({TapPoint::Kind::relay, 0}, true);
    ASSERT_TRUE(cap);
    const auto msg = payload(3000, 9);  // 1024 + 1024 + 952
    const auto r = tb.send_and_wait(msg);
    ASSERT_TRUE(r.recovered());
    const auto records = cap->snapshot();
    ASSERT_EQ(records.size(), 9u);
    std::size_t payload_bytes = 0;
    for (const auto& rec : records) {
        const auto h = decode_header(rec.bytes);
        EXPECT_EQ(h.row, 0);
        EXPECT_EQ(h.msg_id, r.msg_id);
        payload_bytes += rec.bytes.size() - kHeaderSize;
    }
    EXPECT_EQ(payload_bytes, 3u * msg.size());
    tb.set_tap({TapPoint::Kind::relay, 0}, false);
    EXPECT_TRUE(tb.active_taps().empty());
}

TEST(LiveTest, StatsAndEvents) {
    std::mutex mu;
    std::vector<Event> events;
    LiveTestbed tb(short_timeout(), [&](Event e) {
        std::lock_guard lock(mu);
        events.push_back(std::move(e));
    });
    tb.set_relay_dos(1, true);
    ASSERT_TRUE(tb.send_and_wait(payload(10, 0)).recovered());
    const auto s = tb.stats();
    EXPECT_EQ(s.uplinks[0].sent + s.uplinks[1].sent + s.uplinks[2].sent, 9u);
    EXPECT_EQ(s.relays[1].dropped, 3u);
    EXPECT_TRUE(tb.rules().relay_down(1));
    std::lock_guard lock(mu);
    ASSERT_FALSE(events.empty());
    EXPECT_EQ(events.front().kind, EventKind::attack_toggled);
    EXPECT_TRUE(std::any_of(events.begin(), events.end(),
                            [](const Event& e) { return e.kind == EventKind::message_recovered; }));
}

TEST(LiveTest, RejectsBadTargets) {
    LiveTestbed tb(short_timeout());
    EXPECT_THROW(tb.set_operator_dos(3, true), InvalidArgument);
    EXPECT_THROW(tb.set_relay_dos(-1, true), InvalidArgument);
}

TEST(TopologyTest, ParsesAndValidates) {
    const auto j = nlohmann::json::parse(R"({
        "uplinks": [{"channel": "127.0.0.1:7101"}, {"channel": "127.0.0.1:7102"}, {"channel": "127.0.0.1:7103"}],
        "relays": [{"listen": "127.0.0.1:7201"}, {"listen": "127.0.0.1:7202"}, {"listen": "127.0.0.1:7203"}],
        "receiver": {"listen": "127.0.0.1:7300"},
        "scheme": "one-layer-2-of-3", "timeout_ms": 250})");
    const auto t = TopologyConfig::from_json(j);
    EXPECT_EQ(t.relays[2].listen.port, 7203);
    EXPECT_EQ(t.scheme, SchemeKind::one_layer_two);
    EXPECT_EQ(t.timeout, 250ms);
    auto dup = j;
    dup["receiver"]["listen"] = "127.0.0.1:7201";
    EXPECT_THROW(TopologyConfig::from_json(dup), InvalidArgument);
    auto two = j;
    two["relays"].erase(0);
    EXPECT_THROW(TopologyConfig::from_json(two), InvalidArgument);
    EXPECT_THROW(Endpoint::parse("nohost"), InvalidArgument);
    EXPECT_THROW(Endpoint::parse("1.2.3.4:99999"), InvalidArgument);
}

TEST(NetTest, FrameStreamRoundTrip) {
    auto listener = TcpListener::bind({"127.0.0.1", 0});
    auto client = FrameStream::connect(listener.local_endpoint());
    auto server = listener.accept(1000ms);
    ASSERT_TRUE(server);
    client.send_frame(payload(70000, 4));
    client.send_frame({});
    EXPECT_EQ(server->receive_frame(), payload(70000, 4));
    EXPECT_EQ(server->receive_frame(), std::vector<std::uint8_t>{});
    client = FrameStream();
    EXPECT_EQ(server->receive_frame(), std::nullopt);
}

}  // namespace
}  // namespace gridshare
