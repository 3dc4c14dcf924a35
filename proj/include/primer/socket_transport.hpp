#pragma once

#include "primer/transport.hpp"

#include <atomic>
#include <mutex>
#include <vector>

namespace primer {

// Owning POSIX file descriptor.
class UniqueFd {
public:
    UniqueFd() = default;
    explicit UniqueFd(int fd) : fd_(fd) {}
    ~UniqueFd() { reset(); }

    UniqueFd(UniqueFd&& other) noexcept : fd_(other.release()) {}
    UniqueFd& operator=(UniqueFd&& other) noexcept
    {
        if (this != &other) {
            reset(other.release());
        }
        return *this;
    }
    UniqueFd(const UniqueFd&) = delete;
    UniqueFd& operator=(const UniqueFd&) = delete;

    int get() const noexcept { return fd_; }
    explicit operator bool() const noexcept { return fd_ >= 0; }
    int release() noexcept
    {
        int fd = fd_;
        fd_ = -1;
        return fd;
    }
    void reset(int fd = -1) noexcept;

private:
    int fd_ = -1;
};

// Stream over a connected, non-blocking TCP or UDP socket.
class SocketStream : public Stream {
public:
    SocketStream(UniqueFd fd, IpProtocol protocol);

    bool send(ByteView data) override;
    ReceiveResult receive(std::chrono::milliseconds timeout) override;
    void close() override;

    Endpoint local() const override { return local_; }
    Endpoint remote() const override { return remote_; }
    IpProtocol protocol() const override { return protocol_; }

private:
    UniqueFd fd_;
    std::atomic<bool> closed_{false};
    IpProtocol protocol_;
    Endpoint local_;
    Endpoint remote_;
};

struct SocketTransportOptions {
    // Raw IPv4 injection needs CAP_NET_RAW; off unless explicitly enabled.
    bool allow_raw = false;
    // Bind the recorded source port on connect (best effort).
    bool bind_source_port = false;
};

class SocketTransport : public Transport {
public:
    explicit SocketTransport(SocketTransportOptions options = {});

    ConnectOutcome connect(IpProtocol protocol, Endpoint local_hint, Endpoint remote,
                           std::chrono::milliseconds timeout) override;
    void send_raw(ByteView ip_datagram) override;
    std::optional<Bytes> receive_raw(std::chrono::milliseconds timeout) override;
    std::string name() const override { return "os"; }

private:
    void open_raw();

    SocketTransportOptions options_;
    std::mutex raw_mutex_;
    UniqueFd raw_send_;
    std::vector<UniqueFd> raw_receive_;
};

} // namespace primer
