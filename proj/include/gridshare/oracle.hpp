#pragma once

// Exhaustive checkers for the access structure of the two-layer code.
//
// Recovery: every (secret, randomness) tuple at a small symbol count,
// decoded from each of the nine 2x2 submatrices.
// Secrecy: for single-symbol secrets, the joint distribution of the cells
// in an observed set, taken over all randomness, must not depend on the
// secret.

#include <array>
#include <chrono>
#include <cstdint>
#include <vector>

#include "gridshare/coding.hpp"

namespace gridshare {

struct VerificationReport {
    std::uint64_t recovery_cases_checked = 0;
    std::uint64_t recovery_failures = 0;
    std::uint64_t secrecy_cases_checked = 0;
    std::uint64_t secrecy_failures = 0;
    std::chrono::duration<double> elapsed{};

    [[nodiscard]] bool passed() const { return recovery_failures == 0 && secrecy_failures == 0; }
};

namespace detail {

// Block of `symbols` symbols from the base-4 digits of `value`.
inline Block block_from_digits(std::uint64_t value, std::size_t symbols) {
    Block b(symbols);
    for (std::size_t i = 0; i < symbols; ++i) {
        b.set_symbol(i, Gf4(static_cast<std::uint8_t>(value & 3u)));
        value >>= 2;
    }
    return b;
}

// Encodes with secret and the four keys given as single symbols.
inline ShareMatrix encode_symbols(Gf4 secret, unsigned randomness, const SchemeParams& params, bool zero_inner) {
    EncodingRandomness r;
    r.outer_key = block_from_digits(randomness & 3u, 1);
    for (int j = 0; j < 3; ++j)
        r.inner_keys[j] = block_from_digits(zero_inner ? 0 : (randomness >> (2 * (j + 1))) & 3u, 1);
    Block s(1);
    s.set_symbol(0, secret);
    return encode_two_layer(s, r, params);
}

}  // namespace detail

inline VerificationReport verify_recovery_exhaustive(const SchemeParams& params, std::size_t symbol_count = 1) {
    if (symbol_count == 0 || symbol_count > 2)
        throw InvalidArgument("verify_recovery_exhaustive: symbol_count must be 1 or 2");

    const auto start = std::chrono::steady_clock::now();
    VerificationReport report;
    const std::uint64_t per_block = std::uint64_t{1} << (2 * symbol_count);
    const std::uint64_t tuples = std::uint64_t{1} << (10 * symbol_count);  // 4^(5n)
    const auto submatrices = all_submatrices();

    for (std::uint64_t t = 0; t < tuples; ++t) {
        std::uint64_t v = t;
        const auto next = [&] {
            Block b = detail::block_from_digits(v % per_block, symbol_count);
            v /= per_block;
            return b;
        };
        const Block secret = next();
        EncodingRandomness rand;
        rand.outer_key = next();
        for (auto& k : rand.inner_keys) k = next();

        const ShareMatrix m = encode_two_layer(secret, rand, params);
        for (const Submatrix& sub : submatrices) {
            ++report.recovery_cases_checked;
            std::vector<CellShare> cells;
            for (CellIndex c : sub.cells().cells()) cells.push_back({c, m.at(c)});
            try {
                if (decode_two_layer(cells, params) != secret) ++report.recovery_failures;
            } catch (const Error&) {
                ++report.recovery_failures;
            }
        }
    }
    report.elapsed = std::chrono::steady_clock::now() - start;
    return report;
}

struct SecrecyOptions {
    // Forces every inner key to zero; a deliberately broken variant.
    bool zero_inner_keys = false;
};

// True iff the observation distribution of `observed` is the same for all
// four single-symbol secrets.
inline bool observation_independent_of_secret(CellSet observed, const SchemeParams& params,
                                              SecrecyOptions options = {}) {
    const std::vector<CellIndex> cells = observed.cells();
    const std::size_t bins = std::size_t{1} << (2 * cells.size());
    std::array<std::vector<std::uint32_t>, 4> histogram;
    for (auto& h : histogram) h.assign(bins, 0);

    for (Gf4 secret : gf4::all) {
        for (unsigned randomness = 0; randomness < 256; ++randomness) {
            const ShareMatrix m = detail::encode_symbols(secret, randomness, params, options.zero_inner_keys);
            std::size_t bin = 0;
            for (CellIndex c : cells) bin = (bin << 2) | m.at(c).symbol(0).code();
            ++histogram[secret.code()][bin];
        }
    }
    for (int s = 1; s < 4; ++s)
        if (histogram[s] != histogram[0]) return false;
    return true;
}

inline VerificationReport verify_secrecy_exhaustive(const SchemeParams& params, SecrecyOptions options = {}) {
    const auto start = std::chrono::steady_clock::now();
    VerificationReport report;
    for (const AccessSet& set : AccessSet::all_forbidden()) {
        ++report.secrecy_cases_checked;
        if (!observation_independent_of_secret(set.members(), params, options)) ++report.secrecy_failures;
    }
    report.elapsed = std::chrono::steady_clock::now() - start;
    return report;
}

// Every subset of at most `max_cells` cells (so every proper subset of a 2x2
// when max_cells = 3) must be independent of the secret.
inline VerificationReport verify_small_subsets_exhaustive(const SchemeParams& params, int max_cells = 3) {
    const auto start = std::chrono::steady_clock::now();
    VerificationReport report;
    for (std::uint16_t bits = 1; bits < 0x200; ++bits) {
        const CellSet s(bits);
        if (s.size() > max_cells) continue;
        ++report.secrecy_cases_checked;
        if (!observation_independent_of_secret(s, params)) ++report.secrecy_failures;
    }
    report.elapsed = std::chrono::steady_clock::now() - start;
    return report;
}

}  // namespace gridshare
