#include "gridshare/attack.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "gridshare/nodes.hpp"
#include "gridshare/random.hpp"

namespace gridshare {
namespace {

TEST(SampleAttackTest, DegenerateProbabilities) {
    SeededRandom rng(1);
    for (int i = 0; i < 1000; ++i) {
        EXPECT_EQ(sample_attack(AttackModel::symmetric(0.0), rng), AttackOutcome{});
        const AttackOutcome both = sample_attack(AttackModel::symmetric(1.0), rng);
        ASSERT_TRUE(both.operator_target && both.relay_target);
        EXPECT_GE(*both.operator_target, 0);
        EXPECT_LT(*both.operator_target, 3);
        EXPECT_EQ(both.lost_cells().size(), 5);
    }
}

TEST(SampleAttackTest, BothTargetedFrequencyAtHalf) {
    SeededRandom rng(2024);
    const AttackModel model = AttackModel::symmetric(0.5);
    int both = 0;
    std::array<int, 3> column_hits{};
    constexpr int trials = 1000000;
    for (int i = 0; i < trials; ++i) {
        const AttackOutcome o = sample_attack(model, rng);
        both += o.operator_target && o.relay_target;
        if (o.operator_target) ++column_hits[*o.operator_target];
    }
    EXPECT_NEAR(static_cast<double>(both) / trials, 0.25, 0.002);
    for (int h : column_hits) EXPECT_NEAR(static_cast<double>(h) / trials, 0.5 / 3, 0.002);
}

TEST(SampleAttackTest, RejectsBadProbability) {
    SeededRandom rng(1);
    EXPECT_THROW(sample_attack(AttackModel{1.5, 0.0}, rng), InvalidArgument);
    EXPECT_THROW(sample_attack(AttackModel{0.0, -0.1}, rng), InvalidArgument);
}

TEST(AttackRulesTest, TogglesAreIdempotentAndChecked) {
    AttackRules r;
    r.apply_relay_dos(2, true);
    r.apply_relay_dos(2, true);
    EXPECT_TRUE(r.relay_down(2));
    r.apply_relay_dos(2, false);
    EXPECT_FALSE(r.relay_down(2));
    EXPECT_THROW(r.apply_operator_dos(3, true), InvalidArgument);
    EXPECT_THROW(r.apply_relay_dos(-1, true), InvalidArgument);
    EXPECT_THROW(r.set_tap({TapPoint::Kind::relay, 5}, true), InvalidArgument);
}

TEST(AttackRulesTest, LossIsConfinedToOneRowAndOneColumn) {
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) {
            const AttackOutcome o{c, r};
            const CellSet lost = o.lost_cells();
            EXPECT_EQ(lost, CellSet::row(r) | CellSet::column(c));
            EXPECT_EQ(lost.size(), 5);
            EXPECT_TRUE(select_decodable_submatrix(CellSet::all() - lost).has_value());
        }
    // Operator 1 and relay 1: rows {0,2} x cols {0,2} survive.
    EXPECT_EQ(CellSet::all() - (AttackOutcome{1, 1}.lost_cells()), (Submatrix{{0, 2}, {0, 2}}.cells()));
}

TEST(RelayTest, ForwardsBytesWithoutInspection) {
    RelayState relay{.index = 1};
    AttackRules rules;
    const Datagram truncated{1, 2, 3, 4, 5};
    EXPECT_EQ(relay_forward(truncated, relay, rules), truncated);
    const Datagram d = make_datagram({1, 0, 0, true, 9}, std::vector<std::uint8_t>{7, 7});
    EXPECT_EQ(relay_forward(d, relay, rules), d);
    rules.apply_relay_dos(1, true);
    EXPECT_EQ(relay_forward(d, relay, rules), std::nullopt);
    EXPECT_EQ(relay.dropped, 1u);
    rules.apply_relay_dos(1, false);
    EXPECT_EQ(relay_forward(d, relay, rules), d);
    EXPECT_EQ(relay.forwarded, 3u);
}

TEST(UplinkTest, OperatorDosSuppressesEverything) {
    UplinkState up{.index = 0};
    AttackRules rules;
    const Datagram d = make_datagram({2, 0, 0, true, 9}, std::vector<std::uint8_t>{1});
    EXPECT_EQ(uplink_route(up, rules, d), 2);
    rules.apply_operator_dos(0, true);
    EXPECT_EQ(uplink_route(up, rules, d), std::nullopt);
    EXPECT_EQ(up.sent, 1u);
    EXPECT_EQ(up.suppressed, 1u);
}

std::vector<CapturedDatagram> capture_row(SchemeKind scheme, const std::vector<std::uint8_t>& message, int messages) {
    SeededRandom rng(77);
    auto tap = std::make_shared<TapCapture>(TapPoint{TapPoint::Kind::relay, 0});
    RelayState relay{.index = 0, .tap = tap};
    AttackRules rules;
    for (int m = 0; m < messages; ++m) {
        const Transmission t = prepare_transmission(message, scheme, random_message_id(rng), 1024, rng);
        for (const auto& column : t.per_column)
            for (const auto& d : column)
                if (d[0] == 0) relay_forward(d, relay, rules);
    }
    return tap->snapshot();
}

TEST(CaptureAnalysisTest, TwoLayerSharesLookRandom) {
    const std::vector<std::uint8_t> zeros(1024, 0);
    const auto records = capture_row(SchemeKind::two_layer, zeros, 5);
    const auto report = analyze_capture(std::span<const CapturedDatagram>(records), zeros);
    EXPECT_GE(report.payload_bits, 100000u);
    EXPECT_GE(report.entropy, 0.99);
    EXPECT_FALSE(report.plaintext_found);
}

TEST(CaptureAnalysisTest, RepetitionLeaksEverything) {
    const std::vector<std::uint8_t> zeros(1024, 0);
    const auto records = capture_row(SchemeKind::repetition, zeros, 5);
    const auto report = analyze_capture(std::span<const CapturedDatagram>(records), zeros);
    EXPECT_EQ(report.entropy, 0.0);
    EXPECT_TRUE(report.plaintext_found);
}

TEST(CaptureAnalysisTest, OneRowCannotBeDecoded) {
    SeededRandom rng(4);
    std::vector<std::uint8_t> msg(64);
    rng.fill(msg);
    const auto records = capture_row(SchemeKind::two_layer, msg, 1);
    std::vector<CellShare> cells;
    for (const auto& r : records) {
        const auto p = parse_datagram(r.bytes);
        cells.push_back({p.header.cell(), Block::from_bytes(p.payload)});
    }
    ASSERT_EQ(cells.size(), 3u);
    EXPECT_THROW(decode_two_layer(cells), InsufficientShares);
}

TEST(CaptureAnalysisTest, EmptyCaptureIsAnError) {
    EXPECT_THROW(analyze_capture(std::span<const CapturedDatagram>{}), InvalidArgument);
}

TEST(CaptureDumpTest, WriteThenRead) {
    std::vector<CapturedDatagram> records{{1, {1, 2, 3}}, {0xFFFFFFFFFFull, {}}, {5, Datagram(2000, 0x5A)}};
    std::stringstream ss;
    write_capture(ss, records);
    EXPECT_EQ(ss.str().size(), 8u + 3 * 12 + 3 + 0 + 2000);
    EXPECT_EQ(read_capture(ss), records);

    std::stringstream truncated(ss.str().substr(0, ss.str().size() - 1));
    EXPECT_THROW(read_capture(truncated), IoError);
    std::stringstream garbage("not a dump at all");
    EXPECT_THROW(read_capture(garbage), IoError);
}

}  // namespace
}  // namespace gridshare
