#pragma once

#include "primer/net_types.hpp"

#include <chrono>
#include <memory>
#include <optional>
#include <string>

namespace primer {

struct ReceiveResult {
    enum class Status {
        Data,
        Timeout,
        Closed,
    };
    Status status = Status::Timeout;
    Bytes data;
};

// A connected, message-or-byte stream to one peer (TCP connection or
// connected UDP socket).
class Stream {
public:
    virtual ~Stream() = default;

    // False once the stream can no longer carry data.
    virtual bool send(ByteView data) = 0;
    virtual ReceiveResult receive(std::chrono::milliseconds timeout) = 0;
    virtual void close() = 0;

    virtual Endpoint local() const = 0;
    virtual Endpoint remote() const = 0;
    virtual IpProtocol protocol() const = 0;
};

enum class ConnectStatus {
    Established,
    Refused,
    TimedOut,
    Unreachable,
};

std::string_view to_string(ConnectStatus status);

struct ConnectOutcome {
    ConnectStatus status = ConnectStatus::Unreachable;
    std::unique_ptr<Stream> stream;
    std::string detail;
};

// Where replayed traffic goes. Session replay uses connect(); raw replay
// uses send_raw()/receive_raw() with complete IPv4 datagrams.
class Transport {
public:
    virtual ~Transport() = default;

    virtual ConnectOutcome connect(IpProtocol protocol, Endpoint local_hint, Endpoint remote,
                                   std::chrono::milliseconds timeout) = 0;

    // Throws Error(TransportUnavailable) when raw injection is not possible.
    virtual void send_raw(ByteView ip_datagram) = 0;
    virtual std::optional<Bytes> receive_raw(std::chrono::milliseconds timeout) = 0;

    virtual std::string name() const = 0;
};

} // namespace primer
