#include "primer/socket_transport.hpp"

#include "primer/error.hpp"
#include "wire.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace primer {

namespace {

sockaddr_in to_sockaddr(Endpoint ep)
{
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(ep.port);
    sa.sin_addr.s_addr = htonl(ep.addr.value());
    return sa;
}

Endpoint from_sockaddr(const sockaddr_in& sa)
{
    return Endpoint{Ipv4Address(ntohl(sa.sin_addr.s_addr)), ntohs(sa.sin_port)};
}

bool set_nonblocking(int fd)
{
    int flags = ::fcntl(fd, F_GETFL, 0);
    return flags >= 0 && ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) == 0;
}

int poll_one(int fd, short events, std::chrono::milliseconds timeout)
{
    pollfd pfd{fd, events, 0};
    int rc;
    do {
        rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    } while (rc < 0 && errno == EINTR);
    return rc <= 0 ? rc : pfd.revents;
}

ConnectStatus classify(int err)
{
    switch (err) {
    case ECONNREFUSED:
    case ECONNRESET:
        return ConnectStatus::Refused;
    case ETIMEDOUT:
        return ConnectStatus::TimedOut;
    default:
        return ConnectStatus::Unreachable;
    }
}

} // namespace

void UniqueFd::reset(int fd) noexcept
{
    if (fd_ >= 0) {
        ::close(fd_);
    }
    fd_ = fd;
}

SocketStream::SocketStream(UniqueFd fd, IpProtocol protocol)
    : fd_(std::move(fd)), protocol_(protocol)
{
    set_nonblocking(fd_.get());
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    if (::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&sa), &len) == 0) {
        local_ = from_sockaddr(sa);
    }
    len = sizeof sa;
    if (::getpeername(fd_.get(), reinterpret_cast<sockaddr*>(&sa), &len) == 0) {
        remote_ = from_sockaddr(sa);
    }
}

bool SocketStream::send(ByteView data)
{
    std::size_t sent = 0;
    while (sent < data.size()) {
        if (closed_) {
            return false;
        }
        auto n = ::send(fd_.get(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n > 0) {
            sent += static_cast<std::size_t>(n);
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
            if (poll_one(fd_.get(), POLLOUT, std::chrono::milliseconds(1000)) <= 0) {
                return false;
            }
            continue;
        }
        return false;
    }
    return true;
}

ReceiveResult SocketStream::receive(std::chrono::milliseconds timeout)
{
    if (closed_) {
        return {ReceiveResult::Status::Closed, {}};
    }
    int revents = poll_one(fd_.get(), POLLIN, timeout);
    if (revents == 0) {
        return {ReceiveResult::Status::Timeout, {}};
    }
    if (revents < 0 || closed_) {
        return {ReceiveResult::Status::Closed, {}};
    }
    Bytes buf(65536);
    auto n = ::recv(fd_.get(), buf.data(), buf.size(), 0);
    if (n > 0) {
        buf.resize(static_cast<std::size_t>(n));
        return {ReceiveResult::Status::Data, std::move(buf)};
    }
    if (n == 0 && protocol_ == IpProtocol::Udp && !closed_) {
        return {ReceiveResult::Status::Data, {}};
    }
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
        return {ReceiveResult::Status::Timeout, {}};
    }
    return {ReceiveResult::Status::Closed, {}};
}

// The descriptor stays open until destruction so a concurrent receive()
// never polls a recycled fd; shutdown() wakes it instead.
void SocketStream::close()
{
    if (!closed_.exchange(true)) {
        ::shutdown(fd_.get(), SHUT_RDWR);
    }
}

SocketTransport::SocketTransport(SocketTransportOptions options) : options_(options) {}

ConnectOutcome SocketTransport::connect(IpProtocol protocol, Endpoint local_hint, Endpoint remote,
                                        std::chrono::milliseconds timeout)
{
    const int type = protocol == IpProtocol::Udp ? SOCK_DGRAM : SOCK_STREAM;
    UniqueFd fd(::socket(AF_INET, type | SOCK_CLOEXEC, 0));
    if (!fd) {
        throw Error(ErrorCode::TransportUnavailable,
                    std::string("socket(): ") + std::strerror(errno));
    }
    if (options_.bind_source_port && local_hint.port != 0) {
        int one = 1;
        ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        auto sa = to_sockaddr(Endpoint{Ipv4Address(), local_hint.port});
        // Failure leaves the kernel to pick an ephemeral port.
        (void)::bind(fd.get(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa);
    }
    set_nonblocking(fd.get());
    auto sa = to_sockaddr(remote);
    if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
        if (errno != EINPROGRESS) {
            int err = errno;
            return {classify(err), nullptr, std::strerror(err)};
        }
        int revents = poll_one(fd.get(), POLLOUT, timeout);
        if (revents == 0) {
            return {ConnectStatus::TimedOut, nullptr, "connect timed out"};
        }
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) {
            return {classify(err), nullptr, std::strerror(err)};
        }
    }
    return {ConnectStatus::Established, std::make_unique<SocketStream>(std::move(fd), protocol), {}};
}

void SocketTransport::open_raw()
{
    if (!options_.allow_raw) {
        throw Error(ErrorCode::TransportUnavailable,
                    "raw injection over OS sockets requires --unsafe-raw");
    }
    if (raw_send_) {
        return;
    }
    UniqueFd send_fd(::socket(AF_INET, SOCK_RAW | SOCK_CLOEXEC, IPPROTO_RAW));
    if (!send_fd) {
        throw Error(ErrorCode::TransportUnavailable,
                    std::string("raw socket: ") + std::strerror(errno) + " (needs CAP_NET_RAW)");
    }
    std::vector<UniqueFd> receivers;
    for (int proto : {IPPROTO_TCP, IPPROTO_UDP, IPPROTO_ICMP}) {
        UniqueFd r(::socket(AF_INET, SOCK_RAW | SOCK_CLOEXEC, proto));
        if (!r) {
            throw Error(ErrorCode::TransportUnavailable,
                        std::string("raw socket: ") + std::strerror(errno));
        }
        set_nonblocking(r.get());
        receivers.push_back(std::move(r));
    }
    raw_send_ = std::move(send_fd);
    raw_receive_ = std::move(receivers);
}

void SocketTransport::send_raw(ByteView ip_datagram)
{
    std::lock_guard lock(raw_mutex_);
    open_raw();
    if (ip_datagram.size() < 20) {
        throw Error(ErrorCode::SendFailure, "datagram shorter than an IPv4 header");
    }
    auto sa = to_sockaddr(Endpoint{Ipv4Address(wire::be32(ip_datagram, 16)), 0});
    auto n = ::sendto(raw_send_.get(), ip_datagram.data(), ip_datagram.size(), 0,
                      reinterpret_cast<const sockaddr*>(&sa), sizeof sa);
    if (n < 0 || static_cast<std::size_t>(n) != ip_datagram.size()) {
        throw Error(ErrorCode::SendFailure, std::string("sendto: ") + std::strerror(errno));
    }
}

std::optional<Bytes> SocketTransport::receive_raw(std::chrono::milliseconds timeout)
{
    std::vector<pollfd> fds;
    {
        std::lock_guard lock(raw_mutex_);
        open_raw();
        for (const auto& fd : raw_receive_) {
            fds.push_back(pollfd{fd.get(), POLLIN, 0});
        }
    }
    int rc = ::poll(fds.data(), fds.size(), static_cast<int>(timeout.count()));
    if (rc <= 0) {
        return std::nullopt;
    }
    for (const auto& pfd : fds) {
        if (pfd.revents & POLLIN) {
            Bytes buf(65536);
            auto n = ::recv(pfd.fd, buf.data(), buf.size(), 0);
            if (n > 0) {
                buf.resize(static_cast<std::size_t>(n));
                return buf;
            }
        }
    }
    return std::nullopt;
}

} // namespace primer
