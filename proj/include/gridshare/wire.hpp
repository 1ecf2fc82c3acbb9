#pragma once

// Share datagram format.
//
//   offset  size  field
//   0       1     row (relay index, 0..2)
//   1       1     col (operator index, 0..2)
//   2       4     sequence, big-endian: bit 31 = final fragment, bits 0..30 = fragment index
//   6       6     message id, big-endian 48-bit
//   12      ...   share payload
//
// The payload length is implied by the datagram length.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "gridshare/error.hpp"
#include "gridshare/grid.hpp"

namespace gridshare {

inline constexpr std::size_t kHeaderSize = 12;
inline constexpr std::uint32_t kFinalFlag = 0x80000000u;
inline constexpr std::uint32_t kMaxFragmentIndex = 0x7FFFFFFFu;
inline constexpr std::uint64_t kMaxMessageId = (std::uint64_t{1} << 48) - 1;

using MessageId = std::uint64_t;
using Datagram = std::vector<std::uint8_t>;

struct PacketHeader {
    std::uint8_t row = 0;
    std::uint8_t col = 0;
    std::uint32_t fragment = 0;
    bool final = false;
    MessageId msg_id = 0;

    [[nodiscard]] CellIndex cell() const { return {row, col}; }

    friend bool operator==(const PacketHeader&, const PacketHeader&) = default;
};

inline std::array<std::uint8_t, kHeaderSize> encode_header(const PacketHeader& h) {
    if (h.row > 2 || h.col > 2) throw MalformedHeader("header cell index out of range");
    if (h.fragment > kMaxFragmentIndex) throw MalformedHeader("fragment index exceeds 31 bits");
    if (h.msg_id > kMaxMessageId) throw MalformedHeader("message id exceeds 48 bits");

    std::array<std::uint8_t, kHeaderSize> out{};
    out[0] = h.row;
    out[1] = h.col;
    const std::uint32_t seq = h.fragment | (h.final ? kFinalFlag : 0u);
    for (int i = 0; i < 4; ++i) out[2 + i] = static_cast<std::uint8_t>(seq >> (24 - 8 * i));
    for (int i = 0; i < 6; ++i) out[6 + i] = static_cast<std::uint8_t>(h.msg_id >> (40 - 8 * i));
    return out;
}

inline PacketHeader decode_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) throw MalformedHeader("datagram shorter than header");
    PacketHeader h;
    h.row = bytes[0];
    h.col = bytes[1];
    if (h.row > 2 || h.col > 2) throw MalformedHeader("header cell index out of range");
    std::uint32_t seq = 0;
    for (int i = 0; i < 4; ++i) seq = (seq << 8) | bytes[2 + i];
    h.final = (seq & kFinalFlag) != 0;
    h.fragment = seq & kMaxFragmentIndex;
    for (int i = 0; i < 6; ++i) h.msg_id = (h.msg_id << 8) | bytes[6 + i];
    return h;
}

inline Datagram make_datagram(const PacketHeader& h, std::span<const std::uint8_t> payload) {
    if (payload.empty()) throw InvalidArgument("share payload must be non-empty");
    const auto header = encode_header(h);
    Datagram d(kHeaderSize + payload.size());
    std::copy(header.begin(), header.end(), d.begin());
    std::copy(payload.begin(), payload.end(), d.begin() + kHeaderSize);
    return d;
}

struct ParsedDatagram {
    PacketHeader header;
    std::span<const std::uint8_t> payload;
};

inline ParsedDatagram parse_datagram(std::span<const std::uint8_t> datagram) {
    ParsedDatagram p{decode_header(datagram), datagram.subspan(kHeaderSize)};
    if (p.payload.empty()) throw MalformedHeader("datagram carries no payload");
    return p;
}

// Random 48-bit message identifier.
template <class R>
MessageId random_message_id(R& rng) {
    std::array<std::uint8_t, 6> b{};
    rng.fill(b);
    MessageId id = 0;
    for (auto x : b) id = (id << 8) | x;
    return id;
}

struct Fragment {
    std::uint32_t index = 0;
    bool final = false;
    std::vector<std::uint8_t> bytes;
};

inline std::vector<Fragment> fragment_message(std::span<const std::uint8_t> message, std::size_t payload_size) {
    if (message.empty()) throw InvalidArgument("cannot fragment an empty message");
    if (payload_size == 0) throw InvalidArgument("payload size must be at least one byte");
    const std::size_t count = (message.size() + payload_size - 1) / payload_size;
    if (count - 1 > kMaxFragmentIndex) throw InvalidArgument("message needs too many fragments");

    std::vector<Fragment> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t begin = i * payload_size;
        const std::size_t end = std::min(message.size(), begin + payload_size);
        out.push_back({static_cast<std::uint32_t>(i), i + 1 == count,
                       std::vector<std::uint8_t>(message.begin() + begin, message.begin() + end)});
    }
    return out;
}

// Reassembly state for one message.
class FragmentSet {
public:
    explicit FragmentSet(MessageId id = 0) : msg_id_(id) {}

    [[nodiscard]] MessageId msg_id() const { return msg_id_; }
    [[nodiscard]] std::optional<std::uint32_t> final_index() const { return final_index_; }

    void set_final(std::uint32_t index) {
        if (final_index_ && *final_index_ != index) throw IntegrityError("conflicting final fragment index");
        final_index_ = index;
    }

    // Records a decoded fragment. Re-recording identical bytes is a no-op.
    void add_decoded(std::uint32_t index, std::vector<std::uint8_t> plaintext) {
        auto [it, inserted] = decoded_.try_emplace(index, std::move(plaintext));
        if (!inserted && it->second != plaintext) throw IntegrityError("conflicting plaintext for fragment");
    }

    [[nodiscard]] bool is_decoded(std::uint32_t index) const { return decoded_.contains(index); }
    [[nodiscard]] std::size_t decoded_count() const { return decoded_.size(); }
    [[nodiscard]] const std::map<std::uint32_t, std::vector<std::uint8_t>>& decoded() const { return decoded_; }

private:
    MessageId msg_id_;
    std::optional<std::uint32_t> final_index_;
    std::map<std::uint32_t, std::vector<std::uint8_t>> decoded_;
};

// The whole message once the final fragment is known and every index up to
// it is decoded.
inline std::optional<std::vector<std::uint8_t>> reassemble(const FragmentSet& fs) {
    const auto final = fs.final_index();
    if (!final) return std::nullopt;
    const auto& decoded = fs.decoded();
    if (decoded.size() < static_cast<std::size_t>(*final) + 1) return std::nullopt;
    std::vector<std::uint8_t> out;
    for (std::uint32_t i = 0; i <= *final; ++i) {
        const auto it = decoded.find(i);
        if (it == decoded.end()) return std::nullopt;
        out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
}

}  // namespace gridshare
