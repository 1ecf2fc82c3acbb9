#pragma once

// Topology file: JSON describing where each node listens.
//
//   {
//     "uplinks":  [ {"label": "operator-A", "channel": "127.0.0.1:7101", "bind": "127.0.0.1:0"}, ... x3 ],
//     "relays":   [ {"listen": "127.0.0.1:7201", "forward": "127.0.0.1:7300"}, ... x3 ],
//     "receiver": {"listen": "127.0.0.1:7300"},
//     "payload_size": 1024,
//     "timeout_ms": 5000,
//     "scheme": "two-layer",
//     "integrity": true
//   }
//
// Port 0 requests an ephemeral port (single-process testbeds only). A relay
// without "forward" sends to the receiver.

#include <array>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"

#include "gridshare/net.hpp"
#include "gridshare/scheme.hpp"
#include "gridshare/wire.hpp"

namespace gridshare {

struct UplinkConfig {
    std::string label;
    Endpoint channel;  // local distribution channel (stream) listen address
    Endpoint bind;     // UDP egress address
};

struct RelayConfig {
    Endpoint listen;
    std::optional<Endpoint> forward;
};

struct TopologyConfig {
    std::array<UplinkConfig, 3> uplinks;
    std::array<RelayConfig, 3> relays;
    Endpoint receiver;
    std::size_t payload_size = 1024;
    std::chrono::milliseconds timeout{5000};
    SchemeKind scheme = SchemeKind::two_layer;
    bool integrity = true;

    void validate() const {
        if (payload_size == 0 || payload_size > UdpSocket::kMaxDatagram - 28 - kHeaderSize)
            throw InvalidArgument("payload_size must be in [1, 65495]");
        if (timeout.count() <= 0) throw InvalidArgument("timeout_ms must be positive");
        std::set<std::string> seen;
        const auto unique = [&](const Endpoint& e) {
            if (e.port == 0) return;
            if (!seen.insert(e.str()).second) throw InvalidArgument("duplicate address " + e.str() + " in topology");
        };
        for (const auto& u : uplinks) {
            unique(u.channel);
            unique(u.bind);
        }
        for (const auto& r : relays) unique(r.listen);
        unique(receiver);
    }

    // Every node on 127.0.0.1 with ephemeral ports.
    static TopologyConfig loopback() {
        TopologyConfig t;
        const char* labels[] = {"operator-A", "operator-B", "operator-C"};
        for (int k = 0; k < 3; ++k) t.uplinks[k].label = labels[k];
        return t;
    }

    static TopologyConfig from_json(const nlohmann::json& j) {
        TopologyConfig t;
        const auto& ups = j.at("uplinks");
        const auto& rels = j.at("relays");
        if (!ups.is_array() || ups.size() != 3) throw InvalidArgument("topology needs exactly 3 uplinks");
        if (!rels.is_array() || rels.size() != 3) throw InvalidArgument("topology needs exactly 3 relays");
        for (int k = 0; k < 3; ++k) {
            t.uplinks[k].label = ups[k].value("label", "operator-" + std::to_string(k));
            t.uplinks[k].channel = Endpoint::parse(ups[k].value("channel", "127.0.0.1:0"));
            t.uplinks[k].bind = Endpoint::parse(ups[k].value("bind", "127.0.0.1:0"));
            t.relays[k].listen = Endpoint::parse(rels[k].at("listen").get<std::string>());
            if (rels[k].contains("forward")) t.relays[k].forward = Endpoint::parse(rels[k]["forward"].get<std::string>());
        }
        t.receiver = Endpoint::parse(j.at("receiver").at("listen").get<std::string>());
        t.payload_size = j.value("payload_size", std::size_t{1024});
        t.timeout = std::chrono::milliseconds(j.value("timeout_ms", 5000));
        t.scheme = parse_scheme(j.value("scheme", std::string("two-layer")));
        t.integrity = j.value("integrity", true);
        t.validate();
        return t;
    }

    static TopologyConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open topology file " + path);
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument("topology file " + path + ": " + e.what());
        }
    }
};

}  // namespace gridshare
