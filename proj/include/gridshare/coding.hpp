#pragma once

// Two-layer 3x3 secret sharing plus the one-layer and repetition baselines.
//
// Two-layer construction (nested 2-of-3 over GF(4)):
//
//   outer, across operators:  C_j     = S   ^ K   * x_j
//   inner, across relays:     M[i][j] = C_j ^ K_j * y_i
//
// Any two shares a = V ^ K*p_a and b = V ^ K*p_b of a 2-of-3 layer give
//
//   V = (a * p_b ^ b * p_a) * (p_a ^ p_b)^-1
//
// so a 2x2 submatrix yields two outer shares, and those yield S. Everything
// reduces to block_xor and block_scale.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "gridshare/error.hpp"
#include "gridshare/gf4.hpp"
#include "gridshare/grid.hpp"
#include "gridshare/random.hpp"

namespace gridshare {

struct SchemeParams {
    std::array<Gf4, 3> column_points{gf4::one, gf4::omega, gf4::omega2};
    std::array<Gf4, 3> row_points{gf4::one, gf4::omega, gf4::omega2};

    // True when each triple is exactly {1, w, w^2}.
    [[nodiscard]] bool conforming() const { return is_permutation(column_points) && is_permutation(row_points); }

    static SchemeParams standard() { return {}; }

private:
    static bool is_permutation(const std::array<Gf4, 3>& pts) {
        unsigned seen = 0;
        for (Gf4 p : pts) seen |= 1u << p.code();
        return seen == 0b1110u;
    }
};

struct EncodingRandomness {
    Block outer_key;
    std::array<Block, 3> inner_keys;

    template <RandomSource R>
    static EncodingRandomness draw(R& rng, std::size_t symbol_count) {
        EncodingRandomness r;
        r.outer_key = random_block(rng, symbol_count);
        for (auto& k : r.inner_keys) k = random_block(rng, symbol_count);
        return r;
    }

    static EncodingRandomness zeros(std::size_t symbol_count) {
        return {Block(symbol_count), {Block(symbol_count), Block(symbol_count), Block(symbol_count)}};
    }
};

class ShareMatrix {
public:
    ShareMatrix() = default;

    [[nodiscard]] const Block& at(CellIndex c) const { return cells_[c.row][c.col]; }
    [[nodiscard]] Block& at(CellIndex c) { return cells_[c.row][c.col]; }
    [[nodiscard]] const Block& at(int row, int col) const { return cells_[row][col]; }
    [[nodiscard]] Block& at(int row, int col) { return cells_[row][col]; }

    friend bool operator==(const ShareMatrix&, const ShareMatrix&) = default;

private:
    std::array<std::array<Block, 3>, 3> cells_;
};

struct CellShare {
    CellIndex cell;
    Block block;
};

// Sparse view of received cells, indexed by CellIndex::linear().
using CellTable = std::array<std::optional<Block>, kCellCount>;

inline CellSet available_cells(const CellTable& table) {
    CellSet s;
    for (int i = 0; i < kCellCount; ++i)
        if (table[i]) s.insert(CellIndex::from_linear(i));
    return s;
}

// Builds a table, rejecting out-of-range indices and conflicting duplicates.
inline CellTable make_cell_table(std::span<const CellShare> cells) {
    CellTable table;
    for (const auto& [cell, block] : cells) {
        if (!cell.valid()) throw InvalidArgument("cell index out of range");
        auto& slot = table[cell.linear()];
        if (slot && *slot != block) throw IntegrityError("conflicting copies of the same cell");
        slot = block;
    }
    return table;
}

// Recovers V from shares of V ^ K*p at two distinct points.
inline Block recover_pair(const Block& share_a, const Block& share_b, Gf4 point_a, Gf4 point_b) {
    const Gf4 denominator_inv = gf4::inv(point_a + point_b);
    Block v = block_scale(share_a, point_b);
    v ^= block_scale(share_b, point_a);
    return block_scale(v, denominator_inv);
}

inline ShareMatrix encode_two_layer(const Block& secret, const EncodingRandomness& rand,
                                    const SchemeParams& params = {}) {
    if (rand.outer_key.symbol_count() != secret.symbol_count())
        throw LengthMismatch("encode_two_layer: outer key length differs from message");
    for (const auto& k : rand.inner_keys)
        if (k.symbol_count() != secret.symbol_count())
            throw LengthMismatch("encode_two_layer: inner key length differs from message");

    ShareMatrix m;
    for (int j = 0; j < 3; ++j) {
        Block column = block_xor(secret, block_scale(rand.outer_key, params.column_points[j]));
        for (int i = 0; i < 3; ++i)
            m.at(i, j) = block_xor(column, block_scale(rand.inner_keys[j], params.row_points[i]));
    }
    return m;
}

template <RandomSource R>
ShareMatrix encode_two_layer(const Block& secret, R& rng, const SchemeParams& params = {}) {
    return encode_two_layer(secret, EncodingRandomness::draw(rng, secret.symbol_count()), params);
}

// Decodes from exactly the four cells of `m`, which must all be present.
inline Block decode_submatrix(const CellTable& table, const Submatrix& m, const SchemeParams& params = {}) {
    const auto cell = [&](int r, int c) -> const Block& {
        const auto& slot = table[CellIndex{r, c}.linear()];
        if (!slot) throw InsufficientShares("submatrix cell missing");
        return *slot;
    };
    const auto [ra, rb] = m.rows;
    const auto [ca, cb] = m.cols;
    const Gf4 ya = params.row_points[ra];
    const Gf4 yb = params.row_points[rb];
    const Block column_a = recover_pair(cell(ra, ca), cell(rb, ca), ya, yb);
    const Block column_b = recover_pair(cell(ra, cb), cell(rb, cb), ya, yb);
    return recover_pair(column_a, column_b, params.column_points[ca], params.column_points[cb]);
}

struct DecodeOptions {
    // With more than one 2x2 available, decode a second one and compare.
    bool cross_check = true;
};

struct TwoLayerDecode {
    Block secret;
    Submatrix used;
    std::optional<Submatrix> cross_checked;
};

inline TwoLayerDecode decode_two_layer_table(const CellTable& table, const SchemeParams& params = {},
                                             DecodeOptions options = {}) {
    const CellSet available = available_cells(table);
    const auto first = select_decodable_submatrix(available);
    if (!first) throw InsufficientShares();

    TwoLayerDecode out{decode_submatrix(table, *first, params), *first, std::nullopt};
    if (options.cross_check) {
        const auto all = all_submatrices();
        for (auto it = all.rbegin(); it != all.rend(); ++it) {
            if (*it == *first) break;
            if (!available.contains(it->cells())) continue;
            if (decode_submatrix(table, *it, params) != out.secret)
                throw IntegrityError("redundant 2x2 decodes disagree");
            out.cross_checked = *it;
            break;
        }
    }
    return out;
}

inline Block decode_two_layer(std::span<const CellShare> cells, const SchemeParams& params = {},
                              DecodeOptions options = {}) {
    return decode_two_layer_table(make_cell_table(cells), params, options).secret;
}

// ---- one-layer baselines -------------------------------------------------

enum class OneLayerVariant { all_of_three, two_of_three };

// All-of-3 XOR split: (A1, A2, A1 ^ A2 ^ S).
inline std::array<Block, 3> encode_one_layer_xor(const Block& secret, const Block& a1, const Block& a2) {
    return {a1, a2, block_xor(block_xor(a1, a2), secret)};
}

// 2-of-3 over GF(4): share_k = S ^ K * x_k.
inline std::array<Block, 3> encode_one_layer_threshold(const Block& secret, const Block& key,
                                                       const std::array<Gf4, 3>& points = SchemeParams{}.column_points) {
    return {block_xor(secret, block_scale(key, points[0])), block_xor(secret, block_scale(key, points[1])),
            block_xor(secret, block_scale(key, points[2]))};
}

template <RandomSource R>
std::array<Block, 3> encode_one_layer(const Block& secret, OneLayerVariant variant, R& rng) {
    const std::size_t n = secret.symbol_count();
    if (variant == OneLayerVariant::all_of_three) {
        Block a1 = random_block(rng, n);
        Block a2 = random_block(rng, n);
        return encode_one_layer_xor(secret, a1, a2);
    }
    return encode_one_layer_threshold(secret, random_block(rng, n));
}

using OneLayerShares = std::array<std::optional<Block>, 3>;

inline Block decode_one_layer(const OneLayerShares& shares, OneLayerVariant variant,
                              const std::array<Gf4, 3>& points = SchemeParams{}.column_points) {
    if (variant == OneLayerVariant::all_of_three) {
        if (!shares[0] || !shares[1] || !shares[2]) throw InsufficientShares("all-of-3 needs every share");
        return block_xor(block_xor(*shares[0], *shares[1]), *shares[2]);
    }
    std::array<int, 2> present{};
    int count = 0;
    for (int k = 0; k < 3 && count < 2; ++k)
        if (shares[k]) present[count++] = k;
    if (count < 2) throw InsufficientShares("2-of-3 needs two shares");
    return recover_pair(*shares[present[0]], *shares[present[1]], points[present[0]], points[present[1]]);
}

// ---- repetition baseline -------------------------------------------------

inline ShareMatrix encode_repetition(const Block& secret) {
    ShareMatrix m;
    for (int i = 0; i < kCellCount; ++i) m.at(CellIndex::from_linear(i)) = secret;
    return m;
}

inline Block decode_repetition(std::span<const CellShare> cells) {
    if (cells.empty()) throw InsufficientShares("repetition decode needs one cell");
    return cells.front().block;
}

}  // namespace gridshare
