#include "gridshare/sim.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

namespace gridshare {
namespace {

using namespace std::chrono_literals;

std::vector<std::uint8_t> random_message(SeededRandom& rng, std::size_t n) {
    std::vector<std::uint8_t> m(n);
    rng.fill(m);
    return m;
}

TEST(SimTest, CleanRunDeliversNineDatagrams) {
    SimTestbed tb;
    SeededRandom rng(1);
    const auto msg = random_message(rng, 500);
    tb.dispatch(msg, rng);
    const auto reports = tb.finish();
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_TRUE(reports[0].recovered());
    EXPECT_EQ(reports[0].message, msg);
    EXPECT_EQ(tb.datagrams_at_relays(), 9u);
    EXPECT_EQ(tb.datagrams_at_receiver(), 9u);
}

TEST(SimTest, OperatorDosRemovesItsColumn) {
    SimTestbed tb;
    tb.rules().apply_operator_dos(1, true);
    SeededRandom rng(2);
    tb.dispatch(random_message(rng, 200), rng);
    const auto reports = tb.finish();
    EXPECT_EQ(tb.datagrams_at_relays(), 6u);
    EXPECT_EQ(tb.uplink(1).suppressed, 3u);
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_TRUE(reports[0].recovered());
}

TEST(SimTest, RelayDosRemovesItsRow) {
    SimTestbed tb;
    tb.rules().apply_relay_dos(2, true);
    SeededRandom rng(3);
    tb.dispatch(random_message(rng, 200), rng);
    const auto reports = tb.finish();
    EXPECT_EQ(tb.datagrams_at_relays(), 9u);
    EXPECT_EQ(tb.relay(2).dropped, 3u);
    EXPECT_EQ(tb.datagrams_at_receiver(), 6u);
    EXPECT_TRUE(reports.at(0).recovered());
}

TEST(SimTest, EveryOperatorRelayPairRecovers) {
    SeededRandom rng(4);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) {
            SimTestbed tb;
            tb.rules().apply_operator_dos(j, true);
            tb.rules().apply_relay_dos(i, true);
            std::vector<std::vector<std::uint8_t>> sent;
            for (int k = 0; k < 5; ++k) {
                sent.push_back(random_message(rng, 1 + 700 * k));
                tb.dispatch(sent.back(), rng, static_cast<MessageId>(k + 1));
            }
            const auto reports = tb.finish();
            ASSERT_EQ(reports.size(), 5u);
            for (const auto& r : reports) {
                ASSERT_TRUE(r.recovered()) << "operator " << j << " relay " << i;
                EXPECT_EQ(r.message, sent.at(r.msg_id - 1));
            }
        }
}

TEST(SimTest, TwoOperatorsDownTimesOut) {
    SeededRandom rng(5);
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
            SimTestbed tb;
            tb.rules().apply_operator_dos(a, true);
            tb.rules().apply_operator_dos(b, true);
            tb.dispatch(random_message(rng, 300), rng);
            const auto reports = tb.finish();
            ASSERT_EQ(reports.size(), 1u);
            EXPECT_FALSE(reports[0].recovered());
            EXPECT_TRUE(reports[0].message.empty());
        }
}

TEST(SimTest, TapIsPassive) {
    SimOptions opt;
    opt.delays = {1ms, 3ms, 9};
    const auto run = [&](bool tap) {
        SimTestbed tb(opt);
        std::shared_ptr<TapCapture> cap;
        if (tap) cap = tb.attach_tap({TapPoint::Kind::relay, 1});
        SeededRandom rng(6);
        for (int k = 0; k < 10; ++k) tb.dispatch(random_message(rng, 3000), rng);
        tb.finish();
        if (tap) EXPECT_EQ(cap->size(), 90u);  // 10 messages x 3 fragments x 3 cells
        std::vector<std::string> out;
        for (const auto& e : tb.events()) out.push_back(to_json(e).dump());
        return out;
    };
    EXPECT_EQ(run(false), run(true));
}

TEST(SimTest, UplinkTapSeesOnlyItsColumn) {
    SimTestbed tb;
    auto cap = tb.attach_tap({TapPoint::Kind::uplink, 0});
    SeededRandom rng(7);
    tb.dispatch(random_message(rng, 10), rng);
    tb.finish();
    for (const auto& rec : cap->snapshot()) EXPECT_EQ(rec.bytes.at(1), 0);
    EXPECT_EQ(cap->size(), 3u);
}

TEST(SimTest, DelaysArePairedAcrossSchemes) {
    LinkDelayModel m{1ms, 5ms, 42};
    EXPECT_EQ(m.delay(3, Hop::relay_to_receiver, {1, 2}), m.delay(3, Hop::relay_to_receiver, {1, 2}));
    std::set<Timestamp::rep> distinct;
    for (int k = 0; k < 9; ++k) {
        const auto d = m.delay(0, Hop::uplink_to_relay, CellIndex::from_linear(k));
        EXPECT_GE(d, 1ms);
        EXPECT_LE(d, 6ms);
        distinct.insert(d.count());
    }
    EXPECT_GT(distinct.size(), 1u);
}

TEST(SimTest, RepetitionNeverSlowerUnderSameDelays) {
    SimOptions opt;
    opt.delays = {100us, 2ms, 77};
    std::array<std::vector<Timestamp>, 4> lat;
    for (SchemeKind k : kAllSchemes) {
        opt.scheme = k;
        SimTestbed tb(opt);
        SeededRandom rng(8);
        for (int m = 0; m < 50; ++m) {
            tb.dispatch(random_message(rng, 800), rng, static_cast<MessageId>(m + 1));
            tb.advance(10ms);
        }
        auto reports = tb.finish();
        std::sort(reports.begin(), reports.end(), [](auto& a, auto& b) { return a.msg_id < b.msg_id; });
        for (const auto& r : reports) lat[static_cast<int>(k)].push_back(*r.latency);
    }
    const auto& rep = lat[static_cast<int>(SchemeKind::repetition)];
    for (SchemeKind k : kAllSchemes)
        for (std::size_t m = 0; m < rep.size(); ++m) EXPECT_LE(rep[m], lat[static_cast<int>(k)][m]);
}

}  // namespace
}  // namespace gridshare
