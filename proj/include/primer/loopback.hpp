#pragma once

#include "primer/transport.hpp"

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>

namespace primer {

// A participant on the in-memory network, reachable at one IPv4 address.
class LoopbackHost {
public:
    enum class Admission {
        Accept,
        Refuse, // connection reset
        Drop,   // no answer at all
    };

    virtual ~LoopbackHost() = default;

    virtual Admission admit(IpProtocol protocol, std::uint16_t port) = 0;
    // Called after Accept with the server side of the new connection.
    virtual void accept(std::unique_ptr<Stream> server_side) = 0;
    // A complete IPv4 datagram addressed to this host.
    virtual void on_datagram(Bytes ip_datagram) = 0;
};

// Deterministic in-process network. Streams preserve message boundaries:
// one send() on one end is one Data result on the other.
class LoopbackNetwork {
public:
    // Throws Error(BindFailure) when the address is already taken.
    void attach(Ipv4Address addr, std::shared_ptr<LoopbackHost> host);
    void detach(Ipv4Address addr);

    // Routes by destination address; silently dropped when nobody is there.
    void deliver(ByteView ip_datagram);

    ConnectOutcome connect(IpProtocol protocol, Endpoint local, Endpoint remote,
                           std::chrono::milliseconds timeout);

private:
    std::shared_ptr<LoopbackHost> host_at(Ipv4Address addr);

    std::mutex mutex_;
    std::map<Ipv4Address, std::shared_ptr<LoopbackHost>> hosts_;
    std::uint16_t next_ephemeral_ = 49152;
};

// One host's view of a LoopbackNetwork. The network must outlive it.
class LoopbackTransport : public Transport {
public:
    LoopbackTransport(LoopbackNetwork& network, Ipv4Address local);
    ~LoopbackTransport() override;

    LoopbackTransport(const LoopbackTransport&) = delete;
    LoopbackTransport& operator=(const LoopbackTransport&) = delete;

    ConnectOutcome connect(IpProtocol protocol, Endpoint local_hint, Endpoint remote,
                           std::chrono::milliseconds timeout) override;
    void send_raw(ByteView ip_datagram) override;
    std::optional<Bytes> receive_raw(std::chrono::milliseconds timeout) override;
    std::string name() const override { return "loopback"; }

    Ipv4Address address() const { return local_; }

private:
    class Inbox;

    LoopbackNetwork& network_;
    Ipv4Address local_;
    std::shared_ptr<Inbox> inbox_;
};

} // namespace primer
