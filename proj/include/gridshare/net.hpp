#pragma once

// Thin RAII wrappers over POSIX UDP and TCP sockets (IPv4).

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridshare/error.hpp"

namespace gridshare {

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    static Endpoint parse(const std::string& text) {
        const auto colon = text.rfind(':');
        if (colon == std::string::npos) throw InvalidArgument("endpoint '" + text + "' is not host:port");
        Endpoint e;
        e.host = text.substr(0, colon);
        try {
            const unsigned long port = std::stoul(text.substr(colon + 1));
            if (port > 65535) throw InvalidArgument("port out of range in '" + text + "'");
            e.port = static_cast<std::uint16_t>(port);
        } catch (const std::logic_error&) {
            throw InvalidArgument("bad port in endpoint '" + text + "'");
        }
        return e;
    }

    [[nodiscard]] std::string str() const { return host + ":" + std::to_string(port); }

    [[nodiscard]] sockaddr_in sockaddr() const {
        sockaddr_in a{};
        a.sin_family = AF_INET;
        a.sin_port = htons(port);
        const std::string h = host == "localhost" ? "127.0.0.1" : host;
        if (::inet_pton(AF_INET, h.c_str(), &a.sin_addr) != 1) throw InvalidArgument("bad IPv4 address '" + host + "'");
        return a;
    }

    static Endpoint from(const sockaddr_in& a) {
        char buf[INET_ADDRSTRLEN] = {};
        ::inet_ntop(AF_INET, &a.sin_addr, buf, sizeof buf);
        return {buf, ntohs(a.sin_port)};
    }

    friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

[[noreturn]] inline void throw_errno(const std::string& what) {
    throw IoError(what + ": " + std::strerror(errno));
}

class FileDescriptor {
public:
    FileDescriptor() = default;
    explicit FileDescriptor(int fd) : fd_(fd) {}
    FileDescriptor(FileDescriptor&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    FileDescriptor& operator=(FileDescriptor&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    FileDescriptor(const FileDescriptor&) = delete;
    FileDescriptor& operator=(const FileDescriptor&) = delete;
    ~FileDescriptor() { reset(); }

    [[nodiscard]] int get() const { return fd_; }
    [[nodiscard]] bool valid() const { return fd_ >= 0; }

    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

// True when fd becomes readable within the timeout.
inline bool wait_readable(int fd, std::chrono::milliseconds timeout) {
    pollfd p{fd, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (r < 0 && errno != EINTR) throw_errno("poll");
    return r > 0;
}

class UdpSocket {
public:
    static constexpr std::size_t kMaxDatagram = 65535;

    UdpSocket() = default;

    static UdpSocket bind(const Endpoint& local) {
        UdpSocket s;
        s.fd_ = FileDescriptor(::socket(AF_INET, SOCK_DGRAM, 0));
        if (!s.fd_.valid()) throw_errno("socket");
        int size = 4 << 20;
        ::setsockopt(s.fd_.get(), SOL_SOCKET, SO_RCVBUF, &size, sizeof size);
        const sockaddr_in a = local.sockaddr();
        if (::bind(s.fd_.get(), reinterpret_cast<const ::sockaddr*>(&a), sizeof a) != 0)
            throw_errno("bind " + local.str());
        return s;
    }

    [[nodiscard]] Endpoint local_endpoint() const {
        sockaddr_in a{};
        socklen_t len = sizeof a;
        if (::getsockname(fd_.get(), reinterpret_cast<::sockaddr*>(&a), &len) != 0) throw_errno("getsockname");
        return Endpoint::from(a);
    }

    void send_to(std::span<const std::uint8_t> data, const sockaddr_in& to) const {
        if (::sendto(fd_.get(), data.data(), data.size(), 0, reinterpret_cast<const ::sockaddr*>(&to), sizeof to) < 0)
            throw_errno("sendto");
    }

    void send_to(std::span<const std::uint8_t> data, const Endpoint& to) const { send_to(data, to.sockaddr()); }

    // One datagram, or nullopt if none arrives within the timeout.
    std::optional<std::vector<std::uint8_t>> receive(std::chrono::milliseconds timeout) const {
        if (!wait_readable(fd_.get(), timeout)) return std::nullopt;
        std::vector<std::uint8_t> buf(kMaxDatagram);
        const ssize_t n = ::recv(fd_.get(), buf.data(), buf.size(), 0);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) return std::nullopt;
            throw_errno("recv");
        }
        buf.resize(static_cast<std::size_t>(n));
        return buf;
    }

    [[nodiscard]] int fd() const { return fd_.get(); }

private:
    FileDescriptor fd_;
};

// Length-prefixed frames over a TCP stream: u32 big-endian length | bytes.
class FrameStream {
public:
    FrameStream() = default;
    explicit FrameStream(FileDescriptor fd) : fd_(std::move(fd)) {}

    static FrameStream connect(const Endpoint& to) {
        FileDescriptor fd(::socket(AF_INET, SOCK_STREAM, 0));
        if (!fd.valid()) throw_errno("socket");
        const sockaddr_in a = to.sockaddr();
        if (::connect(fd.get(), reinterpret_cast<const ::sockaddr*>(&a), sizeof a) != 0)
            throw_errno("connect " + to.str());
        int one = 1;
        ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return FrameStream(std::move(fd));
    }

    void send_frame(std::span<const std::uint8_t> payload) const {
        const auto len = static_cast<std::uint32_t>(payload.size());
        const std::uint8_t head[4] = {static_cast<std::uint8_t>(len >> 24), static_cast<std::uint8_t>(len >> 16),
                                      static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len)};
        write_all(head);
        write_all(payload);
    }

    // Next frame; nullopt on orderly close.
    std::optional<std::vector<std::uint8_t>> receive_frame() const {
        std::uint8_t head[4];
        if (!read_all(head)) return std::nullopt;
        const std::uint32_t len = (std::uint32_t{head[0]} << 24) | (std::uint32_t{head[1]} << 16) |
                                  (std::uint32_t{head[2]} << 8) | head[3];
        std::vector<std::uint8_t> buf(len);
        if (!read_all(buf)) throw IoError("stream closed mid-frame");
        return buf;
    }

    [[nodiscard]] int fd() const { return fd_.get(); }

private:
    void write_all(std::span<const std::uint8_t> data) const {
        while (!data.empty()) {
            const ssize_t n = ::send(fd_.get(), data.data(), data.size(), MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw_errno("send");
            }
            data = data.subspan(static_cast<std::size_t>(n));
        }
    }

    bool read_all(std::span<std::uint8_t> out) const {
        std::size_t done = 0;
        while (done < out.size()) {
            const ssize_t n = ::recv(fd_.get(), out.data() + done, out.size() - done, 0);
            if (n == 0) {
                if (done == 0) return false;
                throw IoError("stream closed mid-frame");
            }
            if (n < 0) {
                if (errno == EINTR) continue;
                throw_errno("recv");
            }
            done += static_cast<std::size_t>(n);
        }
        return true;
    }

    FileDescriptor fd_;
};

class TcpListener {
public:
    static TcpListener bind(const Endpoint& local) {
        TcpListener l;
        l.fd_ = FileDescriptor(::socket(AF_INET, SOCK_STREAM, 0));
        if (!l.fd_.valid()) throw_errno("socket");
        int one = 1;
        ::setsockopt(l.fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        const sockaddr_in a = local.sockaddr();
        if (::bind(l.fd_.get(), reinterpret_cast<const ::sockaddr*>(&a), sizeof a) != 0)
            throw_errno("bind " + local.str());
        if (::listen(l.fd_.get(), 8) != 0) throw_errno("listen");
        return l;
    }

    // Accepts one connection, or nullopt on timeout.
    std::optional<FrameStream> accept(std::chrono::milliseconds timeout) const {
        if (!wait_readable(fd_.get(), timeout)) return std::nullopt;
        FileDescriptor fd(::accept(fd_.get(), nullptr, nullptr));
        if (!fd.valid()) {
            if (errno == EINTR || errno == EAGAIN) return std::nullopt;
            throw_errno("accept");
        }
        int one = 1;
        ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return FrameStream(std::move(fd));
    }

    [[nodiscard]] Endpoint local_endpoint() const {
        sockaddr_in a{};
        socklen_t len = sizeof a;
        if (::getsockname(fd_.get(), reinterpret_cast<::sockaddr*>(&a), &len) != 0) throw_errno("getsockname");
        return Endpoint::from(a);
    }

private:
    FileDescriptor fd_;
};

}  // namespace gridshare
