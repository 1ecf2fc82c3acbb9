#include "gridshare/nodes.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace gridshare {
namespace {

using namespace std::chrono_literals;

struct Fixture {
    SeededRandom rng{31};
    std::vector<std::uint8_t> message;
    Transmission tx;
    std::map<CellIndex, Datagram> by_cell;  // single-fragment messages only

    explicit Fixture(SchemeKind scheme = SchemeKind::two_layer, std::size_t size = 100) : message(size) {
        rng.fill(message);
        tx = prepare_transmission(message, scheme, 0xABCDEF, 1024, rng);
        for (const auto& col : tx.per_column)
            for (const auto& d : col) by_cell[decode_header(d).cell()] = d;
    }
};

std::vector<EventKind> kinds(const std::vector<Event>& events) {
    std::vector<EventKind> out;
    for (const auto& e : events) out.push_back(e.kind);
    return out;
}

TEST(ReceiverTest, DecodesAtFourthCellOfSubmatrix) {
    Fixture fx;
    ReceiverState rx;
    const std::vector<CellIndex> order{{0, 0}, {2, 0}, {0, 1}, {2, 1}};
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto events = rx.ingest(fx.by_cell.at(order[i]), Timestamp(i));
        if (i < 3) {
            EXPECT_EQ(kinds(events), std::vector{EventKind::cell_arrived});
            continue;
        }
        ASSERT_EQ(kinds(events), (std::vector{EventKind::cell_arrived, EventKind::fragment_decoded,
                                              EventKind::message_recovered}));
        EXPECT_EQ(events[1].submatrix, (Submatrix{{0, 2}, {0, 1}}));
        EXPECT_EQ(events[2].latency, Timestamp(3));
    }
    const auto reports = rx.take_reports();
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_TRUE(reports[0].recovered());
    EXPECT_EQ(reports[0].message, fx.message);
    EXPECT_EQ(reports[0].fragments[0].submatrix, (Submatrix{{0, 2}, {0, 1}}));
}

TEST(ReceiverTest, RowPlusColumnNeverDecodes) {
    Fixture fx;
    ReceiverState rx;
    for (CellIndex c : (CellSet::row(1) | CellSet::column(2)).cells()) {
        const auto events = rx.ingest(fx.by_cell.at(c), {});
        EXPECT_EQ(kinds(events), std::vector{EventKind::cell_arrived});
    }
    EXPECT_TRUE(rx.take_reports().empty());
}

TEST(ReceiverTest, DuplicateCellIsIdempotent) {
    Fixture fx;
    ReceiverState rx;
    EXPECT_EQ(rx.ingest(fx.by_cell.at({1, 1}), {}).size(), 1u);
    EXPECT_TRUE(rx.ingest(fx.by_cell.at({1, 1}), {}).empty());
    EXPECT_EQ(rx.cells_ingested(), 1u);
}

TEST(ReceiverTest, ConflictingCellRaisesIntegrityEvent) {
    Fixture fx;
    ReceiverState rx;
    rx.ingest(fx.by_cell.at({1, 1}), {});
    Datagram forged = fx.by_cell.at({1, 1});
    forged.back() ^= 1;
    EXPECT_EQ(kinds(rx.ingest(forged, {})), std::vector{EventKind::integrity_error});
    EXPECT_EQ(rx.integrity_error_count(), 1u);
}

TEST(ReceiverTest, LateCorruptCellIsCaughtByCrossCheck) {
    Fixture fx;
    ReceiverState rx;
    for (CellIndex c : Submatrix{{0, 1}, {0, 1}}.cells().cells()) rx.ingest(fx.by_cell.at(c), {});
    ASSERT_EQ(rx.take_reports().size(), 1u);
    // After recovery, late cells are recorded but nothing else happens.
    Datagram forged = fx.by_cell.at({2, 2});
    forged.back() ^= 1;
    EXPECT_EQ(kinds(rx.ingest(forged, {})), std::vector{EventKind::cell_arrived});
}

TEST(ReceiverTest, CorruptCellBeforeRecoveryIsDetected) {
    Fixture fx(SchemeKind::two_layer, 3000);  // three fragments
    ReceiverState rx;
    // Fragment 0 receives all nine cells, one of them corrupted.
    for (const auto& d : fx.tx.per_column[0]) {
        if (decode_header(d).fragment != 0) continue;
        rx.ingest(d, {});
    }
    bool integrity = false;
    for (int col = 1; col < 3; ++col)
        for (const auto& d : fx.tx.per_column[col]) {
            const auto h = decode_header(d);
            if (h.fragment != 0) continue;
            Datagram copy = d;
            if (h.row == 0 && h.col == 1) copy.back() ^= 0x10;
            for (const auto& e : rx.ingest(copy, {})) integrity |= e.kind == EventKind::integrity_error;
        }
    EXPECT_TRUE(integrity);
}

TEST(ReceiverTest, MalformedDatagramCountedAndIgnored) {
    ReceiverState rx;
    const Datagram junk{0x03, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
    EXPECT_EQ(kinds(rx.ingest(junk, {})), std::vector{EventKind::malformed_datagram});
    EXPECT_EQ(kinds(rx.ingest(Datagram{1, 2, 3}, {})), std::vector{EventKind::malformed_datagram});
    EXPECT_EQ(rx.malformed_count(), 2u);
    EXPECT_EQ(rx.pending_count(), 0u);
}

TEST(ReceiverTest, TimeoutSweep) {
    ReceiverState empty;
    EXPECT_TRUE(empty.timeout_sweep(Timestamp(100s)).empty());

    Fixture fx;
    ReceiverState rx(ReceiverConfig{.timeout = 5s});
    rx.expect(fx.tx.msg_id, Timestamp(0));
    // Only column 0 survives: two operators down.
    for (int r = 0; r < 3; ++r) rx.ingest(fx.by_cell.at({r, 0}), Timestamp(1ms));
    EXPECT_TRUE(rx.timeout_sweep(Timestamp(4s)).empty());
    const auto reports = rx.timeout_sweep(Timestamp(5s));
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_EQ(reports[0].outcome, DeliveryReport::Outcome::timeout);
    EXPECT_EQ(reports[0].fragments[0].received, CellSet::column(0));
    EXPECT_TRUE(rx.timeout_sweep(Timestamp(10s)).empty());  // reported once
}

TEST(ReceiverTest, RecoveredMessageUntouchedBySweep) {
    Fixture fx;
    ReceiverState rx;
    for (const auto& [cell, d] : fx.by_cell) rx.ingest(d, {});
    EXPECT_TRUE(rx.finished(fx.tx.msg_id));
    EXPECT_TRUE(rx.timeout_sweep(Timestamp(1h)).empty());
}

TEST(ReceiverTest, ExpectedMessageWithNoArrivalsTimesOut) {
    ReceiverState rx(ReceiverConfig{.timeout = 1s});
    rx.expect(77, Timestamp(0));
    const auto reports = rx.timeout_sweep(Timestamp(2s));
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_TRUE(reports[0].fragments.empty());
}

TEST(ReceiverTest, EachSchemeRecoversFromItsFootprint) {
    for (SchemeKind kind : kAllSchemes) {
        Fixture fx(kind, 5000);
        ReceiverState rx(ReceiverConfig{.scheme = kind});
        std::size_t datagrams = 0;
        for (const auto& col : fx.tx.per_column)
            for (const auto& d : col) {
                rx.ingest(d, {});
                ++datagrams;
            }
        EXPECT_EQ(datagrams, static_cast<std::size_t>(scheme_footprint(kind).size()) * fx.tx.fragment_count);
        const auto reports = rx.take_reports();
        ASSERT_EQ(reports.size(), 1u) << scheme_name(kind);
        EXPECT_EQ(reports[0].message, fx.message);
    }
}

TEST(ReceiverTest, ShuffledMultiFragmentArrival) {
    Fixture fx(SchemeKind::two_layer, 10000);
    std::vector<Datagram> all;
    for (const auto& col : fx.tx.per_column) all.insert(all.end(), col.begin(), col.end());
    std::shuffle(all.begin(), all.end(), fx.rng.engine());
    ReceiverState rx;
    int decoded = 0;
    int recovered = 0;
    for (const auto& d : all)
        for (const auto& e : rx.ingest(d, {})) {
            decoded += e.kind == EventKind::fragment_decoded;
            recovered += e.kind == EventKind::message_recovered;
        }
    EXPECT_EQ(decoded, static_cast<int>(fx.tx.fragment_count));
    EXPECT_EQ(recovered, 1);
    EXPECT_EQ(rx.take_reports().at(0).message, fx.message);
}

}  // namespace
}  // namespace gridshare
