#pragma once

// Standalone node roles, one per process, wired by a topology file.
//
// The sender hands each operator its column over a local TCP stream (one
// length-prefixed frame per datagram); uplinks, relays and the receiver
// then talk UDP. Without a shared clock the receiver times each message
// from its first arriving cell.

#include <atomic>
#include <fstream>

#include "gridshare/live.hpp"

namespace gridshare {

struct RoleOptions {
    bool down = false;                  // start with this node's DoS rule active
    std::optional<std::string> capture; // relay: mirror arriving datagrams to this dump file
};

inline void run_uplink(const TopologyConfig& topology, int index, const RoleOptions& options,
                       const std::atomic<bool>& stop) {
    if (index < 0 || index >= kGridSize) throw InvalidArgument("uplink index must be 0, 1 or 2");
    std::array<Endpoint, 3> relays;
    for (int i = 0; i < 3; ++i) relays[i] = topology.relays[i].listen;
    UplinkNode node(index, topology.uplinks[index].bind, relays);
    if (options.down) node.set_dos(true);
    auto listener = TcpListener::bind(topology.uplinks[index].channel);
    while (!stop) {
        auto stream = listener.accept(std::chrono::milliseconds(200));
        if (!stream) continue;
        std::vector<Datagram> column;
        try {
            while (!stop) {
                if (!wait_readable(stream->fd(), std::chrono::milliseconds(200))) continue;
                auto frame = stream->receive_frame();
                if (!frame) break;
                column.push_back(std::move(*frame));
            }
        } catch (const IoError&) {
            // sender went away mid-frame; forward what arrived intact
        }
        node.submit(std::move(column));
    }
    node.flush();
}

inline void run_relay(const TopologyConfig& topology, int index, const RoleOptions& options,
                      const std::atomic<bool>& stop) {
    if (index < 0 || index >= kGridSize) throw InvalidArgument("relay index must be 0, 1 or 2");
    const auto& rc = topology.relays[index];
    RelayNode node(index, rc.listen, rc.forward.value_or(topology.receiver));
    if (options.down) node.set_dos(true);
    std::shared_ptr<TapCapture> tap;
    if (options.capture) tap = node.set_tap(true);
    while (!stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (tap) {
        std::ofstream out(*options.capture, std::ios::binary);
        if (!out) throw IoError("cannot write capture " + *options.capture);
        const auto records = tap->snapshot();
        write_capture(out, records);
    }
}

// Runs until `stop` or until `max_reports` messages have a final outcome.
inline std::vector<DeliveryReport> run_receiver(const TopologyConfig& topology, EventSink sink,
                                                const std::atomic<bool>& stop, std::size_t max_reports = 0) {
    ReceiverNode node(topology.receiver,
                      ReceiverConfig{topology.scheme, {}, std::chrono::duration_cast<Timestamp>(topology.timeout),
                                     topology.integrity},
                      std::move(sink));
    while (!stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        if (max_reports && node.reports().size() >= max_reports) break;
    }
    return node.reports();
}

// Encodes one message and pushes each column to its operator's uplink.
template <RandomSource R>
MessageId send_via_uplinks(const TopologyConfig& topology, std::span<const std::uint8_t> message, R& rng) {
    Transmission t = prepare_transmission(message, topology.scheme, random_message_id(rng), topology.payload_size, rng);
    std::array<FrameStream, 3> streams;
    for (int j = 0; j < 3; ++j) {
        try {
            streams[j] = FrameStream::connect(topology.uplinks[j].channel);
        } catch (const IoError& e) {
            throw IoError("dispatch failed: uplink " + std::to_string(j) + " (" + topology.uplinks[j].label +
                          ") unreachable: " + e.what());
        }
    }
    for (int j = 0; j < 3; ++j)
        for (const Datagram& d : t.per_column[j]) streams[j].send_frame(d);
    return t.msg_id;
}

}  // namespace gridshare
