#pragma once

// Randomness sources for share generation.
//
// SystemRandom draws from the kernel CSPRNG and is what live encodes use.
// SeededRandom is a reproducible generator for experiments and tests; it
// must never feed production shares.

#include <sys/random.h>

#include <cerrno>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>

#include "gridshare/error.hpp"
#include "gridshare/gf4.hpp"

namespace gridshare {

template <class R>
concept RandomSource = requires(R& r, std::span<std::uint8_t> out) {
    { r.fill(out) };
};

class SystemRandom {
public:
    void fill(std::span<std::uint8_t> out) {
        std::size_t done = 0;
        while (done < out.size()) {
            const ssize_t n = ::getrandom(out.data() + done, out.size() - done, 0);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw IoError(std::string("getrandom: ") + std::strerror(errno));
            }
            done += static_cast<std::size_t>(n);
        }
    }
};

// splitmix64 finalizer; used to derive independent per-trial seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64(index + 0x632BE59BD9B4E019ull));
}

class SeededRandom {
public:
    using result_type = std::mt19937_64::result_type;

    explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}

    void fill(std::span<std::uint8_t> out) {
        std::size_t i = 0;
        for (; i + 8 <= out.size(); i += 8) {
            const std::uint64_t w = engine_();
            std::memcpy(out.data() + i, &w, 8);
        }
        if (i < out.size()) {
            const std::uint64_t w = engine_();
            std::memcpy(out.data() + i, &w, out.size() - i);
        }
    }

    // UniformRandomBitGenerator, so <random> distributions work directly.
    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

template <RandomSource R>
Block random_block(R& rng, std::size_t symbol_count) {
    Block b(symbol_count);
    rng.fill(b.mutable_bytes());
    b.clear_padding();
    return b;
}

}  // namespace gridshare
