#include "primer/error.hpp"
#include "primer/socket_transport.hpp"

#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <fcntl.h>
#include <unistd.h>

namespace primer {
namespace {

using namespace std::chrono_literals;

const Ipv4Address kLocalhost{127, 0, 0, 1};

UniqueFd bound_socket(int type, std::uint16_t& port)
{
    UniqueFd fd(::socket(AF_INET, type, 0));
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa);
    socklen_t len = sizeof sa;
    ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&sa), &len);
    port = ntohs(sa.sin_port);
    return fd;
}

Bytes bytes(std::string_view s)
{
    return Bytes(s.begin(), s.end());
}

TEST(SocketTransport, TcpRoundTrip)
{
    std::uint16_t port = 0;
    auto listener = bound_socket(SOCK_STREAM, port);
    ASSERT_EQ(::listen(listener.get(), 4), 0);

    SocketTransport transport;
    auto out = transport.connect(IpProtocol::Tcp, {}, Endpoint{kLocalhost, port}, 500ms);
    ASSERT_EQ(out.status, ConnectStatus::Established);
    EXPECT_EQ(out.stream->remote(), (Endpoint{kLocalhost, port}));

    UniqueFd peer(::accept(listener.get(), nullptr, nullptr));
    ASSERT_TRUE(peer);
    ASSERT_TRUE(out.stream->send(bytes("hello")));
    char buf[16];
    auto n = ::recv(peer.get(), buf, sizeof buf, 0);
    ASSERT_EQ(n, 5);
    ::send(peer.get(), "world", 5, 0);
    auto r = out.stream->receive(500ms);
    EXPECT_EQ(r.status, ReceiveResult::Status::Data);
    EXPECT_EQ(r.data, bytes("world"));
    EXPECT_EQ(out.stream->receive(10ms).status, ReceiveResult::Status::Timeout);

    peer.reset();
    EXPECT_EQ(out.stream->receive(500ms).status, ReceiveResult::Status::Closed);
    out.stream->close();
    EXPECT_FALSE(out.stream->send(bytes("x")));
}

TEST(SocketTransport, RefusedConnection)
{
    std::uint16_t port = 0;
    {
        auto probe = bound_socket(SOCK_STREAM, port);
    }
    SocketTransport transport;
    auto out = transport.connect(IpProtocol::Tcp, {}, Endpoint{kLocalhost, port}, 500ms);
    EXPECT_EQ(out.status, ConnectStatus::Refused);
    EXPECT_FALSE(out.stream);
}

TEST(SocketTransport, UdpDatagrams)
{
    std::uint16_t port = 0;
    auto server = bound_socket(SOCK_DGRAM, port);
    SocketTransport transport;
    auto out = transport.connect(IpProtocol::Udp, {}, Endpoint{kLocalhost, port}, 500ms);
    ASSERT_EQ(out.status, ConnectStatus::Established);
    ASSERT_TRUE(out.stream->send(bytes("ping")));

    sockaddr_in from{};
    socklen_t len = sizeof from;
    char buf[16];
    auto n = ::recvfrom(server.get(), buf, sizeof buf, 0, reinterpret_cast<sockaddr*>(&from), &len);
    ASSERT_EQ(n, 4);
    ::sendto(server.get(), "pong", 4, 0, reinterpret_cast<sockaddr*>(&from), len);
    auto r = out.stream->receive(500ms);
    EXPECT_EQ(r.data, bytes("pong"));
}

TEST(SocketTransport, RawRequiresOptIn)
{
    SocketTransport transport;
    Bytes datagram(20, 0);
    try {
        transport.send_raw(datagram);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TransportUnavailable);
    }
    EXPECT_THROW(transport.receive_raw(1ms), Error);
    EXPECT_EQ(transport.name(), "os");
}

TEST(UniqueFd, ClosesOnResetAndMove)
{
    int fds[2];
    ASSERT_EQ(::pipe(fds), 0);
    UniqueFd a(fds[0]);
    UniqueFd b(std::move(a));
    EXPECT_FALSE(a);
    EXPECT_EQ(b.get(), fds[0]);
    b.reset();
    EXPECT_LT(::fcntl(fds[0], F_GETFD), 0);
    ::close(fds[1]);
}

} // namespace
} // namespace primer
