#include "gridshare/oracle.hpp"

#include <gtest/gtest.h>

#include "gridshare/entropy.hpp"
#include "gridshare/random.hpp"

namespace gridshare {
namespace {

TEST(RecoveryOracleTest, ConformingParamsSingleSymbol) {
    const VerificationReport r = verify_recovery_exhaustive(SchemeParams::standard(), 1);
    EXPECT_EQ(r.recovery_cases_checked, 1024u * 9u);
    EXPECT_EQ(r.recovery_failures, 0u);
}

TEST(RecoveryOracleTest, EveryConformingPointOrder) {
    std::array<Gf4, 3> pts{gf4::one, gf4::omega, gf4::omega2};
    std::sort(pts.begin(), pts.end(), [](Gf4 a, Gf4 b) { return a.code() < b.code(); });
    do {
        SchemeParams p;
        p.column_points = pts;
        p.row_points = {pts[2], pts[0], pts[1]};
        ASSERT_TRUE(p.conforming());
        EXPECT_EQ(verify_recovery_exhaustive(p, 1).recovery_failures, 0u);
    } while (std::next_permutation(pts.begin(), pts.end(), [](Gf4 a, Gf4 b) { return a.code() < b.code(); }));
}

TEST(RecoveryOracleTest, DuplicatedColumnPointsFail) {
    SchemeParams p;
    p.column_points = {gf4::one, gf4::one, gf4::omega2};
    EXPECT_FALSE(p.conforming());
    const VerificationReport r = verify_recovery_exhaustive(p, 1);
    EXPECT_GT(r.recovery_failures, 0u);
}

TEST(RecoveryOracleTest, RejectsOversizedEnumeration) {
    EXPECT_THROW(verify_recovery_exhaustive(SchemeParams::standard(), 3), InvalidArgument);
}

TEST(SecrecyOracleTest, ConformingParams) {
    const VerificationReport r = verify_secrecy_exhaustive(SchemeParams::standard());
    EXPECT_EQ(r.secrecy_cases_checked, 9u);
    EXPECT_EQ(r.secrecy_failures, 0u);
}

TEST(SecrecyOracleTest, ZeroInnerKeysLeak) {
    const VerificationReport r = verify_secrecy_exhaustive(SchemeParams::standard(), {.zero_inner_keys = true});
    EXPECT_GT(r.secrecy_failures, 0u);
}

TEST(SecrecyOracleTest, AuthorizedSetsAreNotIndependent) {
    // Sanity check that the distribution comparison can detect dependence.
    for (const auto& s : AccessSet::all_authorized())
        EXPECT_FALSE(observation_independent_of_secret(s.members(), SchemeParams::standard()));
}

TEST(SecrecyOracleTest, NoProperSubsetOfASubmatrixLeaks) {
    const VerificationReport r = verify_small_subsets_exhaustive(SchemeParams::standard(), 3);
    EXPECT_EQ(r.secrecy_cases_checked, 9u + 36u + 84u);
    EXPECT_EQ(r.secrecy_failures, 0u);
}

// The nested construction's full access structure: a cell set determines S
// iff two of its columns each hold at least two cells (each such column
// yields its outer share), and is independent of S otherwise. Every 2x2 is
// of this kind; no row-plus-column set is.
TEST(SecrecyOracleTest, AccessStructureIsAllOrNothing) {
    for (std::uint16_t bits = 1; bits < 0x200; ++bits) {
        const CellSet s(bits);
        int rich_columns = 0;
        for (int c = 0; c < 3; ++c) rich_columns += (s & CellSet::column(c)).size() >= 2;
        const bool determines = rich_columns >= 2;
        if (select_decodable_submatrix(s)) ASSERT_TRUE(determines);
        EXPECT_EQ(observation_independent_of_secret(s, SchemeParams::standard()), !determines) << bits;
        if (!determines) continue;
        for (Gf4 secret : gf4::all) {
            // Determinism: with these cells fixed, the secret is unique.
            SeededRandom rng(bits);
            const ShareMatrix m = encode_two_layer(Block::from_symbols({secret}), rng);
            int consistent = 0;
            for (Gf4 other : gf4::all)
                for (unsigned rnd = 0; rnd < 256; ++rnd) {
                    const ShareMatrix alt = detail::encode_symbols(other, rnd, SchemeParams::standard(), false);
                    bool same = true;
                    for (CellIndex c : s.cells()) same = same && alt.at(c) == m.at(c);
                    if (same && other != secret) ++consistent;
                }
            EXPECT_EQ(consistent, 0) << bits;
        }
    }
}

TEST(EntropyTest, Examples) {
    EXPECT_EQ(entropy_per_bit(std::vector<std::uint8_t>(64, 0)), 0.0);
    EXPECT_EQ(entropy_per_bit(std::vector<std::uint8_t>(64, 0xFF)), 0.0);
    EXPECT_DOUBLE_EQ(entropy_per_bit(std::vector<std::uint8_t>(64, 0x0F)), 1.0);
    EXPECT_THROW(entropy_per_bit({}), InvalidArgument);

    SeededRandom rng(99);
    std::vector<std::uint8_t> bytes(12500);  // 10^5 bits
    rng.fill(bytes);
    EXPECT_GE(entropy_per_bit(bytes), 0.99);
}

TEST(EntropyTest, MatchesBinaryEntropyFormula) {
    // One bit set in each byte: q = 1/8.
    const double q = 0.125;
    const double expected = -(q * std::log2(q) + (1 - q) * std::log2(1 - q));
    EXPECT_NEAR(entropy_per_bit(std::vector<std::uint8_t>(100, 0x10)), expected, 1e-12);
}

TEST(EntropyTest, SingleShareOfFixedMessageLooksUniform) {
    SeededRandom rng(5);
    const Block fixed(4 * 4096);  // all-zero message
    BitTally tally;
    for (int i = 0; i < 8; ++i) tally.add(encode_two_layer(fixed, rng).at(1, 2).bytes());
    EXPECT_GE(tally.entropy(), 0.999);
}

}  // namespace
}  // namespace gridshare
