#pragma once

// Geometry of the 3x3 share grid: rows are relays, columns are operators.

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "gridshare/error.hpp"

namespace gridshare {

inline constexpr int kGridSize = 3;
inline constexpr int kCellCount = kGridSize * kGridSize;

struct CellIndex {
    int row = 0;
    int col = 0;

    [[nodiscard]] constexpr bool valid() const {
        return row >= 0 && row < kGridSize && col >= 0 && col < kGridSize;
    }
    [[nodiscard]] constexpr int linear() const { return row * kGridSize + col; }

    static constexpr CellIndex from_linear(int i) { return {i / kGridSize, i % kGridSize}; }

    static CellIndex checked(int row, int col) {
        CellIndex c{row, col};
        if (!c.valid()) throw InvalidArgument("cell index out of range");
        return c;
    }

    friend constexpr auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

inline std::ostream& operator<<(std::ostream& os, CellIndex c) {
    return os << "(" << c.row << "," << c.col << ")";
}

// A set of grid cells as a 9-bit mask, bit (row*3 + col).
class CellSet {
public:
    constexpr CellSet() = default;
    constexpr explicit CellSet(std::uint16_t bits) : bits_(bits & 0x1FFu) {}

    static constexpr CellSet all() { return CellSet(0x1FF); }
    static constexpr CellSet row(int r) { return CellSet(static_cast<std::uint16_t>(0x7u << (3 * r))); }
    static constexpr CellSet column(int c) { return CellSet(static_cast<std::uint16_t>(0x49u << c)); }

    [[nodiscard]] constexpr std::uint16_t bits() const { return bits_; }
    [[nodiscard]] constexpr bool contains(CellIndex c) const { return (bits_ >> c.linear()) & 1u; }
    [[nodiscard]] constexpr bool contains(CellSet other) const { return (bits_ & other.bits_) == other.bits_; }
    [[nodiscard]] constexpr int size() const { return std::popcount(bits_); }
    [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }

    constexpr CellSet& insert(CellIndex c) {
        bits_ = static_cast<std::uint16_t>(bits_ | (1u << c.linear()));
        return *this;
    }
    constexpr CellSet& erase(CellIndex c) {
        bits_ = static_cast<std::uint16_t>(bits_ & ~(1u << c.linear()));
        return *this;
    }

    [[nodiscard]] std::vector<CellIndex> cells() const {
        std::vector<CellIndex> out;
        for (int i = 0; i < kCellCount; ++i)
            if ((bits_ >> i) & 1u) out.push_back(CellIndex::from_linear(i));
        return out;
    }

    friend constexpr CellSet operator|(CellSet a, CellSet b) {
        return CellSet(static_cast<std::uint16_t>(a.bits_ | b.bits_));
    }
    friend constexpr CellSet operator&(CellSet a, CellSet b) {
        return CellSet(static_cast<std::uint16_t>(a.bits_ & b.bits_));
    }
    friend constexpr CellSet operator-(CellSet a, CellSet b) {
        return CellSet(static_cast<std::uint16_t>(a.bits_ & ~b.bits_));
    }
    friend constexpr bool operator==(CellSet, CellSet) = default;

private:
    std::uint16_t bits_ = 0;
};

// Two rows crossed with two columns; indices ascending.
struct Submatrix {
    std::array<int, 2> rows{};
    std::array<int, 2> cols{};

    [[nodiscard]] constexpr CellSet cells() const {
        CellSet s;
        for (int r : rows)
            for (int c : cols) s.insert({r, c});
        return s;
    }

    friend constexpr auto operator<=>(const Submatrix&, const Submatrix&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Submatrix& m) {
    return os << "rows{" << m.rows[0] << "," << m.rows[1] << "} x cols{" << m.cols[0] << "," << m.cols[1] << "}";
}

inline constexpr std::array<std::array<int, 2>, 3> kIndexPairs{{{0, 1}, {0, 2}, {1, 2}}};

// All nine 2x2 submatrices, in lexicographic (row pair, column pair) order.
inline constexpr std::array<Submatrix, 9> all_submatrices() {
    std::array<Submatrix, 9> out{};
    std::size_t k = 0;
    for (const auto& rp : kIndexPairs)
        for (const auto& cp : kIndexPairs) out[k++] = Submatrix{rp, cp};
    return out;
}

// The lexicographically smallest 2x2 submatrix fully contained in `available`.
inline std::optional<Submatrix> select_decodable_submatrix(CellSet available) {
    for (const Submatrix& m : all_submatrices())
        if (available.contains(m.cells())) return m;
    return std::nullopt;
}

// A qualified (2x2) or forbidden (one full row plus one full column) set.
class AccessSet {
public:
    enum class Kind { authorized, forbidden };

    static AccessSet authorized(Submatrix m) { return AccessSet(Kind::authorized, m.cells()); }

    static AccessSet forbidden(int row, int col) {
        if (!CellIndex{row, col}.valid()) throw InvalidArgument("forbidden set index out of range");
        return AccessSet(Kind::forbidden, CellSet::row(row) | CellSet::column(col));
    }

    static std::vector<AccessSet> all_authorized() {
        std::vector<AccessSet> out;
        for (const auto& m : all_submatrices()) out.push_back(authorized(m));
        return out;
    }

    static std::vector<AccessSet> all_forbidden() {
        std::vector<AccessSet> out;
        for (int r = 0; r < kGridSize; ++r)
            for (int c = 0; c < kGridSize; ++c) out.push_back(forbidden(r, c));
        return out;
    }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] CellSet members() const { return members_; }

private:
    AccessSet(Kind kind, CellSet members) : kind_(kind), members_(members) {}

    Kind kind_;
    CellSet members_;
};

}  // namespace gridshare
