#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>

#include "CLI11.hpp"

#include "gridshare/control_server.hpp"
#include "gridshare/experiment.hpp"
#include "gridshare/oracle.hpp"
#include "gridshare/roles.hpp"

using namespace gridshare;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
}

std::vector<std::uint8_t> read_input(const std::string& path) {
    if (path == "-") {
        std::cin >> std::noskipws;
        return {std::istream_iterator<char>(std::cin), std::istream_iterator<char>()};
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_output(const std::string& path, std::span<const std::uint8_t> data) {
    if (path == "-") {
        std::cout.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

std::string hex_id(MessageId id) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%012llx", static_cast<unsigned long long>(id));
    return buf;
}

TopologyConfig topology_or_loopback(const std::string& path) {
    return path.empty() ? TopologyConfig::loopback() : TopologyConfig::load(path);
}

int cmd_encode(const std::string& in, const std::string& out, const std::string& scheme, std::size_t payload_size) {
    SystemRandom rng;
    const auto message = read_input(in);
    const auto t = prepare_transmission(message, parse_scheme(scheme), random_message_id(rng), payload_size, rng);
    std::vector<CapturedDatagram> records;
    for (const auto& column : t.per_column)
        for (const auto& d : column) records.push_back({0, d});
    std::ofstream os(out, std::ios::binary);
    if (!os) throw IoError("cannot write " + out);
    write_capture(os, records);
    std::cerr << "msg_id " << hex_id(t.msg_id) << ": " << t.fragment_count << " fragment(s), " << records.size()
              << " datagrams\n";
    return 0;
}

int cmd_decode(const std::string& in, const std::string& out, const std::string& scheme,
               const std::vector<int>& drop_rows, const std::vector<int>& drop_cols) {
    std::ifstream is(in, std::ios::binary);
    if (!is) throw IoError("cannot open " + in);
    const auto records = read_capture(is);
    for (int r : drop_rows)
        if (r < 0 || r > 2) throw InvalidArgument("--drop-row must be 0, 1 or 2");
    for (int c : drop_cols)
        if (c < 0 || c > 2) throw InvalidArgument("--drop-col must be 0, 1 or 2");

    ReceiverState rx(ReceiverConfig{parse_scheme(scheme)});
    std::set<MessageId> ids;
    Timestamp now{0};
    for (const auto& rec : records) {
        if (rec.bytes.size() >= kHeaderSize) {
            const auto h = decode_header(rec.bytes);
            ids.insert(h.msg_id);
            if (std::count(drop_rows.begin(), drop_rows.end(), h.row) ||
                std::count(drop_cols.begin(), drop_cols.end(), h.col))
                continue;
        }
        for (const auto& e : rx.ingest(rec.bytes, now += Timestamp(1)))
            if (e.kind == EventKind::integrity_error) std::cerr << "integrity error: " << e.detail << "\n";
    }
    if (ids.size() != 1) throw InvalidArgument("capture must hold exactly one message, found " + std::to_string(ids.size()));
    rx.timeout_sweep(now + std::chrono::hours(1));
    const auto reports = rx.take_reports();
    if (reports.empty() || !reports[0].recovered()) {
        std::cerr << "insufficient shares: no decodable 2x2 for every fragment\n";
        return 2;
    }
    write_output(out, reports[0].message);
    for (const auto& f : reports[0].fragments)
        if (f.submatrix)
            std::cerr << "fragment " << f.index << ": rows {" << f.submatrix->rows[0] << "," << f.submatrix->rows[1]
                      << "} cols {" << f.submatrix->cols[0] << "," << f.submatrix->cols[1] << "}\n";
    return 0;
}

int cmd_verify() {
    const auto params = SchemeParams::standard();
    const auto show = [](const char* name, const VerificationReport& r) {
        std::cout << name << ": recovery " << r.recovery_cases_checked << " cases, " << r.recovery_failures
                  << " failures; secrecy " << r.secrecy_cases_checked << " sets, " << r.secrecy_failures
                  << " failures; " << std::chrono::duration<double>(r.elapsed).count() << " s\n";
        return r.passed();
    };
    bool ok = show("recovery (1 symbol)", verify_recovery_exhaustive(params, 1));
    ok = show("secrecy (row+column)", verify_secrecy_exhaustive(params)) && ok;
    ok = show("secrecy (subsets <= 3 cells)", verify_small_subsets_exhaustive(params)) && ok;
    std::cout << (ok ? "OK\n" : "FAILED\n");
    return ok ? 0 : 1;
}

int cmd_send(const std::string& topology_path, const std::string& in, const std::string& text,
             const std::string& scheme) {
    auto topology = TopologyConfig::load(topology_path);
    if (!scheme.empty()) topology.scheme = parse_scheme(scheme);
    std::vector<std::uint8_t> message = text.empty() ? read_input(in) : std::vector<std::uint8_t>(text.begin(), text.end());
    if (message.empty()) throw InvalidArgument("message is empty");
    SystemRandom rng;
    std::cout << hex_id(send_via_uplinks(topology, message, rng)) << "\n";
    return 0;
}

int cmd_recv(const std::string& topology_path, const std::string& scheme, std::size_t count, const std::string& out) {
    auto topology = TopologyConfig::load(topology_path);
    if (!scheme.empty()) topology.scheme = parse_scheme(scheme);
    std::mutex mu;
    const auto reports = run_receiver(
        topology,
        [&](Event e) {
            std::lock_guard lock(mu);
            std::cout << to_json(e).dump() << std::endl;
        },
        g_stop, count);
    if (!out.empty()) {
        for (const auto& r : reports)
            if (r.recovered()) {
                write_output(out, r.message);
                break;
            }
    }
    const bool all_ok = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.recovered(); });
    return all_ok ? 0 : 2;
}

int cmd_experiment(const std::string& config_path, const std::string& out) {
    const auto config = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    config.validate();
    const auto results = run_experiment(config);
    emit_results(config, results, out);
    std::cout << summary_text(config, results);
    return 0;
}

int cmd_demo(const std::string& topology_path, const std::string& bind, double duration_s) {
    ControlPlane plane(topology_or_loopback(topology_path));
    ControlServer server(plane, bind.empty() ? control_bind_from_env() : Endpoint::parse(bind));
    std::cerr << "control plane listening on http://" << server.endpoint().str() << "\n";
    const auto start = std::chrono::steady_clock::now();
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        if (duration_s > 0 && std::chrono::steady_clock::now() - start > std::chrono::duration<double>(duration_s))
            break;
    }
    server.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gridshare: two-layer 3x3 secret sharing over operator/relay paths"};
    app.require_subcommand(1);

    std::string in = "-", topology, config, text, bind, capture;
    std::string encode_out, encode_scheme, decode_out, decode_scheme, send_scheme, recv_scheme, recv_out, experiment_out;
    std::size_t payload_size = 1024, count = 0;
    int index = 0;
    bool down = false;
    double duration = 0;
    std::vector<int> drop_rows, drop_cols;

    auto* encode = app.add_subcommand("encode", "encode a message into a share dump");
    encode->add_option("--in", in, "input file, - for stdin");
    encode->add_option("--out", encode_out, "share dump to write")->required();
    encode->add_option("--scheme", encode_scheme, "two-layer | one-layer-all-of-3 | one-layer-2-of-3 | repetition")
        ->default_val("two-layer");
    encode->add_option("--payload-size", payload_size, "fragment payload bytes")->default_val(1024);

    auto* decode = app.add_subcommand("decode", "recover a message from a share dump");
    decode->add_option("--in", in, "share dump")->required();
    decode->add_option("--out", decode_out, "output file, - for stdout")->default_val("-");
    decode->add_option("--scheme", decode_scheme)->default_val("two-layer");
    decode->add_option("--drop-row", drop_rows, "discard cells in this row (repeatable)");
    decode->add_option("--drop-col", drop_cols, "discard cells in this column (repeatable)");

    auto* verify = app.add_subcommand("verify", "exhaustive recovery and secrecy checks");

    auto* send = app.add_subcommand("send", "encode a message and hand columns to the uplinks");
    send->add_option("--topology", topology)->required();
    send->add_option("--in", in, "input file, - for stdin");
    send->add_option("--text", text, "message text instead of --in");
    send->add_option("--scheme", send_scheme, "override the topology's scheme");

    auto* uplink = app.add_subcommand("uplink", "run uplink agent (operator) j");
    uplink->add_option("--topology", topology)->required();
    uplink->add_option("--index", index)->required();
    uplink->add_flag("--down", down, "start under DoS");

    auto* relay = app.add_subcommand("relay", "run relay i");
    relay->add_option("--topology", topology)->required();
    relay->add_option("--index", index)->required();
    relay->add_flag("--down", down, "start under DoS");
    relay->add_option("--capture", capture, "mirror arriving datagrams to this dump file on exit");

    auto* recv = app.add_subcommand("recv", "run the receiver; prints events as JSON lines");
    recv->add_option("--topology", topology)->required();
    recv->add_option("--scheme", recv_scheme, "override the topology's scheme");
    recv->add_option("--count", count, "exit after this many messages finish");
    recv->add_option("--out", recv_out, "write the first recovered message here");

    auto* experiment = app.add_subcommand("experiment", "recovery, entropy and latency experiments");
    experiment->add_option("--config", config, "experiment config JSON (defaults if omitted)");
    experiment->add_option("--out", experiment_out, "output directory")->default_val("results");

    auto* demo = app.add_subcommand("demo", "single-process testbed with the HTTP control plane");
    demo->add_option("--topology", topology, "topology JSON (loopback with ephemeral ports if omitted)");
    demo->add_option("--bind", bind, std::string("control plane address (default $") + kBindEnv + " or " + kDefaultBind + ")");
    demo->add_option("--duration", duration, "seconds to run; 0 runs until interrupted");

    CLI11_PARSE(app, argc, argv);
    install_signal_handlers();

    try {
        if (*encode) return cmd_encode(in, encode_out, encode_scheme, payload_size);
        if (*decode) return cmd_decode(in, decode_out, decode_scheme, drop_rows, drop_cols);
        if (*verify) return cmd_verify();
        if (*send) return cmd_send(topology, in, text, send_scheme);
        if (*uplink) {
            run_uplink(TopologyConfig::load(topology), index, {down, std::nullopt}, g_stop);
            return 0;
        }
        if (*relay) {
            RoleOptions opts{down, std::nullopt};
            if (!capture.empty()) opts.capture = capture;
            run_relay(TopologyConfig::load(topology), index, opts, g_stop);
            return 0;
        }
        if (*recv) return cmd_recv(topology, recv_scheme, count, recv_out);
        if (*experiment) return cmd_experiment(config, experiment_out);
        if (*demo) return cmd_demo(topology, bind, duration);
    } catch (const std::exception& e) {
        std::cerr << "gridshare: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
