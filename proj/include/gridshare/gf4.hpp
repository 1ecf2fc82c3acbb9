#pragma once

// GF(4) = {0, 1, w, w^2} with w^2 = w + 1.
//
// Symbols are 2-bit codes (hi, lo): 00 -> 0, 01 -> 1, 10 -> w, 11 -> w^2.
// Addition is XOR of the codes. Multiplication by a constant is a fixed
// rearrangement of the two bits plus one XOR:
//
//   x * w   : (hi, lo) -> (hi ^ lo, hi)
//   x * w^2 : (hi, lo) -> (lo, hi ^ lo)
//
// A Block packs symbols four to a byte, most-significant pair first, so
// scaling a whole block is a handful of word-wide shifts, masks and XORs.

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <ostream>
#include <span>
#include <vector>

#include "gridshare/error.hpp"

namespace gridshare {

class Gf4 {
public:
    constexpr Gf4() = default;
    constexpr explicit Gf4(std::uint8_t code) : code_(code & 0x3u) {}

    [[nodiscard]] constexpr std::uint8_t code() const { return code_; }
    [[nodiscard]] constexpr bool is_zero() const { return code_ == 0; }
    [[nodiscard]] constexpr std::uint8_t hi() const { return (code_ >> 1) & 1u; }
    [[nodiscard]] constexpr std::uint8_t lo() const { return code_ & 1u; }

    static constexpr Gf4 from_bits(std::uint8_t hi, std::uint8_t lo) {
        return Gf4(static_cast<std::uint8_t>(((hi & 1u) << 1) | (lo & 1u)));
    }

    friend constexpr bool operator==(Gf4, Gf4) = default;

private:
    std::uint8_t code_ = 0;
};

namespace gf4 {

inline constexpr Gf4 zero{0};
inline constexpr Gf4 one{1};
inline constexpr Gf4 omega{2};
inline constexpr Gf4 omega2{3};

inline constexpr std::array<Gf4, 4> all{zero, one, omega, omega2};
inline constexpr std::array<Gf4, 3> nonzero{one, omega, omega2};

constexpr Gf4 add(Gf4 a, Gf4 b) { return Gf4(static_cast<std::uint8_t>(a.code() ^ b.code())); }

constexpr Gf4 times_omega(Gf4 a) { return Gf4::from_bits(a.hi() ^ a.lo(), a.hi()); }

constexpr Gf4 times_omega2(Gf4 a) { return Gf4::from_bits(a.lo(), a.hi() ^ a.lo()); }

// b = b.hi * w + b.lo * 1, so a * b = (b.lo ? a : 0) ^ (b.hi ? a*w : 0).
constexpr Gf4 mul(Gf4 a, Gf4 b) {
    Gf4 r = zero;
    if (b.lo()) r = add(r, a);
    if (b.hi()) r = add(r, times_omega(a));
    return r;
}

// The multiplicative group is cyclic of order 3: a^-1 = a^2.
inline Gf4 inv(Gf4 a) {
    if (a.is_zero()) throw DomainError("GF(4): zero has no multiplicative inverse");
    return mul(a, a);
}

}  // namespace gf4

constexpr Gf4 operator+(Gf4 a, Gf4 b) { return gf4::add(a, b); }
constexpr Gf4 operator*(Gf4 a, Gf4 b) { return gf4::mul(a, b); }

inline std::ostream& operator<<(std::ostream& os, Gf4 s) {
    static constexpr const char* names[] = {"0", "1", "w", "w^2"};
    return os << names[s.code()];
}

// An n-bit value, n = 2 * symbol_count. Bits past n in the final byte are
// always zero.
class Block {
public:
    Block() = default;

    explicit Block(std::size_t symbol_count)
        : symbols_(symbol_count), bytes_((symbol_count + 3) / 4, 0) {}

    static Block from_bytes(std::span<const std::uint8_t> bytes) {
        Block b;
        b.symbols_ = bytes.size() * 4;
        b.bytes_.assign(bytes.begin(), bytes.end());
        return b;
    }

    static Block from_bytes(std::vector<std::uint8_t>&& bytes) {
        Block b;
        b.symbols_ = bytes.size() * 4;
        b.bytes_ = std::move(bytes);
        return b;
    }

    // Symbols listed most-significant first.
    static Block from_symbols(std::initializer_list<Gf4> symbols) {
        Block b(symbols.size());
        std::size_t i = 0;
        for (Gf4 s : symbols) b.set_symbol(i++, s);
        return b;
    }

    [[nodiscard]] std::size_t symbol_count() const { return symbols_; }
    [[nodiscard]] std::size_t bit_count() const { return symbols_ * 2; }
    [[nodiscard]] std::size_t byte_count() const { return bytes_.size(); }
    [[nodiscard]] bool empty() const { return symbols_ == 0; }

    [[nodiscard]] std::span<const std::uint8_t> bytes() const { return bytes_; }
    [[nodiscard]] std::span<std::uint8_t> mutable_bytes() { return bytes_; }
    [[nodiscard]] const std::vector<std::uint8_t>& byte_vector() const { return bytes_; }

    [[nodiscard]] Gf4 symbol(std::size_t i) const {
        const unsigned shift = 6 - 2 * (i % 4);
        return Gf4(static_cast<std::uint8_t>(bytes_[i / 4] >> shift));
    }

    void set_symbol(std::size_t i, Gf4 s) {
        const unsigned shift = 6 - 2 * (i % 4);
        auto& byte = bytes_[i / 4];
        byte = static_cast<std::uint8_t>((byte & ~(0x3u << shift)) | (s.code() << shift));
    }

    [[nodiscard]] bool is_zero() const {
        return std::all_of(bytes_.begin(), bytes_.end(), [](std::uint8_t b) { return b == 0; });
    }

    // Clears bits beyond symbol_count in the trailing byte.
    void clear_padding() {
        if (const std::size_t used = symbols_ % 4; used != 0 && !bytes_.empty())
            bytes_.back() &= static_cast<std::uint8_t>(0xFFu << (8 - 2 * used));
    }

    Block& operator^=(const Block& other) {
        if (other.symbols_ != symbols_) throw LengthMismatch("block_xor: operands differ in length");
        xor_bytes(bytes_, other.bytes_);
        return *this;
    }

    friend bool operator==(const Block&, const Block&) = default;

private:
    static void xor_bytes(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src) {
        std::size_t i = 0;
        for (; i + 8 <= dst.size(); i += 8) {
            std::uint64_t a, b;
            std::memcpy(&a, dst.data() + i, 8);
            std::memcpy(&b, src.data() + i, 8);
            a ^= b;
            std::memcpy(dst.data() + i, &a, 8);
        }
        for (; i < dst.size(); ++i) dst[i] ^= src[i];
    }

    std::size_t symbols_ = 0;
    std::vector<std::uint8_t> bytes_;
};

inline Block block_xor(const Block& a, const Block& b) {
    Block r = a;
    r ^= b;
    return r;
}

namespace detail {

// Per-word symbol scaling. With H = hi bits moved into the lo positions and
// L = lo bits, every symbol of the word is transformed in parallel.
inline std::uint64_t scale_word(std::uint64_t w, Gf4 c) {
    constexpr std::uint64_t lo_mask = 0x5555555555555555ull;
    const std::uint64_t h = (w >> 1) & lo_mask;
    const std::uint64_t l = w & lo_mask;
    switch (c.code()) {
        case 0: return 0;
        case 1: return w;
        case 2: return ((h ^ l) << 1) | h;
        default: return (l << 1) | (h ^ l);
    }
}

}  // namespace detail

// Symbolwise multiplication of every symbol of a by c.
inline Block block_scale(const Block& a, Gf4 c) {
    if (c == gf4::one) return a;
    Block r = a;
    auto bytes = r.mutable_bytes();
    std::size_t i = 0;
    for (; i + 8 <= bytes.size(); i += 8) {
        std::uint64_t w;
        std::memcpy(&w, bytes.data() + i, 8);
        w = detail::scale_word(w, c);
        std::memcpy(bytes.data() + i, &w, 8);
    }
    for (; i < bytes.size(); ++i)
        bytes[i] = static_cast<std::uint8_t>(detail::scale_word(bytes[i], c));
    return r;
}

inline std::ostream& operator<<(std::ostream& os, const Block& b) {
    os << "Block[";
    for (std::size_t i = 0; i < b.symbol_count(); ++i) os << (i ? " " : "") << b.symbol(i);
    return os << "]";
}

}  // namespace gridshare
