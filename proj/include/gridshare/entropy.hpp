#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>

#include "gridshare/error.hpp"

namespace gridshare {

// Running count of ones over a bit stream.
struct BitTally {
    std::uint64_t ones = 0;
    std::uint64_t bits = 0;

    void add(std::span<const std::uint8_t> bytes) {
        for (std::uint8_t b : bytes) ones += static_cast<std::uint64_t>(std::popcount(b));
        bits += 8 * bytes.size();
    }

    // Binary entropy of the empirical ones fraction, in bits per bit.
    [[nodiscard]] double entropy() const {
        if (bits == 0) throw InvalidArgument("entropy of an empty bit stream");
        const double q = static_cast<double>(ones) / static_cast<double>(bits);
        const auto term = [](double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; };
        return term(q) + term(1.0 - q);
    }
};

inline double entropy_per_bit(std::span<const std::uint8_t> samples) {
    BitTally t;
    t.add(samples);
    return t.entropy();
}

}  // namespace gridshare
