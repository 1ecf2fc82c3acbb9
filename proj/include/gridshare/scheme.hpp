#pragma once

// How each coding scheme occupies the 3x3 operator/relay grid.
//
//   two-layer    all nine cells, any 2x2 decodes
//   one-layer    share k rides operator k to relay k (the diagonal)
//   repetition   the plaintext on all nine cells, any one decodes

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridshare/coding.hpp"

namespace gridshare {

enum class SchemeKind { two_layer, one_layer_all, one_layer_two, repetition };

inline constexpr std::array<SchemeKind, 4> kAllSchemes{SchemeKind::two_layer, SchemeKind::one_layer_all,
                                                       SchemeKind::one_layer_two, SchemeKind::repetition};

inline std::string_view scheme_name(SchemeKind k) {
    switch (k) {
        case SchemeKind::two_layer: return "two-layer";
        case SchemeKind::one_layer_all: return "one-layer-all-of-3";
        case SchemeKind::one_layer_two: return "one-layer-2-of-3";
        case SchemeKind::repetition: return "repetition";
    }
    return "?";
}

inline SchemeKind parse_scheme(std::string_view name) {
    for (SchemeKind k : kAllSchemes)
        if (scheme_name(k) == name) return k;
    if (name == "one-layer") return SchemeKind::one_layer_all;
    throw InvalidArgument("unknown scheme '" + std::string(name) + "'");
}

inline CellSet scheme_footprint(SchemeKind k) {
    if (k == SchemeKind::one_layer_all || k == SchemeKind::one_layer_two)
        return CellSet().insert({0, 0}).insert({1, 1}).insert({2, 2});
    return CellSet::all();
}

template <RandomSource R>
std::vector<CellShare> encode_cells(SchemeKind kind, const Block& fragment, R& rng, const SchemeParams& params = {}) {
    std::vector<CellShare> out;
    switch (kind) {
        case SchemeKind::two_layer: {
            const ShareMatrix m = encode_two_layer(fragment, rng, params);
            for (int i = 0; i < kCellCount; ++i) out.push_back({CellIndex::from_linear(i), m.at(CellIndex::from_linear(i))});
            break;
        }
        case SchemeKind::one_layer_all:
        case SchemeKind::one_layer_two: {
            const auto variant =
                kind == SchemeKind::one_layer_all ? OneLayerVariant::all_of_three : OneLayerVariant::two_of_three;
            auto shares = encode_one_layer(fragment, variant, rng);
            for (int k = 0; k < 3; ++k) out.push_back({{k, k}, std::move(shares[k])});
            break;
        }
        case SchemeKind::repetition:
            for (int i = 0; i < kCellCount; ++i) out.push_back({CellIndex::from_linear(i), fragment});
            break;
    }
    return out;
}

struct SchemeDecode {
    Block secret;
    CellSet used;
    std::optional<Submatrix> submatrix;
};

// Decodes once the scheme's access condition is met; nullopt otherwise.
// Integrity failures propagate as IntegrityError.
inline std::optional<SchemeDecode> try_decode(SchemeKind kind, const CellTable& table, const SchemeParams& params = {},
                                              DecodeOptions options = {}) {
    const CellSet available = available_cells(table);
    switch (kind) {
        case SchemeKind::two_layer: {
            if (!select_decodable_submatrix(available)) return std::nullopt;
            auto d = decode_two_layer_table(table, params, options);
            return SchemeDecode{std::move(d.secret), d.used.cells(), d.used};
        }
        case SchemeKind::one_layer_all:
        case SchemeKind::one_layer_two: {
            OneLayerShares shares;
            CellSet used;
            for (int k = 0; k < 3; ++k) {
                if (table[CellIndex{k, k}.linear()]) shares[k] = table[CellIndex{k, k}.linear()];
            }
            const bool all = kind == SchemeKind::one_layer_all;
            int present = 0;
            for (int k = 0; k < 3; ++k) present += shares[k].has_value();
            if (present < (all ? 3 : 2)) return std::nullopt;
            int taken = 0;
            for (int k = 0; k < 3 && taken < (all ? 3 : 2); ++k)
                if (shares[k]) {
                    used.insert({k, k});
                    ++taken;
                }
            return SchemeDecode{
                decode_one_layer(shares, all ? OneLayerVariant::all_of_three : OneLayerVariant::two_of_three,
                                 params.column_points),
                used, std::nullopt};
        }
        case SchemeKind::repetition: {
            for (int i = 0; i < kCellCount; ++i) {
                if (!table[i]) continue;
                if (options.cross_check)
                    for (int k = i + 1; k < kCellCount; ++k)
                        if (table[k] && *table[k] != *table[i]) throw IntegrityError("repetition copies disagree");
                return SchemeDecode{*table[i], CellSet().insert(CellIndex::from_linear(i)), std::nullopt};
            }
            return std::nullopt;
        }
    }
    return std::nullopt;
}

}  // namespace gridshare
