#include "primer/loopback.hpp"

#include "primer/error.hpp"
#include "wire.hpp"

#include <atomic>
#include <thread>

namespace primer {

std::string_view to_string(ConnectStatus status)
{
    switch (status) {
    case ConnectStatus::Established: return "established";
    case ConnectStatus::Refused: return "refused";
    case ConnectStatus::TimedOut: return "timed out";
    case ConnectStatus::Unreachable: return "unreachable";
    }
    return "unknown";
}

namespace {

struct PipeState {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<Bytes> queue[2];
    bool closed[2] = {false, false};
};

class PipeEnd : public Stream {
public:
    PipeEnd(std::shared_ptr<PipeState> state, int side, Endpoint local, Endpoint remote,
            IpProtocol protocol)
        : state_(std::move(state)), side_(side), local_(local), remote_(remote), protocol_(protocol)
    {
    }

    ~PipeEnd() override { close(); }

    bool send(ByteView data) override
    {
        std::lock_guard lock(state_->mutex);
        if (state_->closed[side_] || state_->closed[1 - side_]) {
            return false;
        }
        state_->queue[1 - side_].emplace_back(data.begin(), data.end());
        state_->cv.notify_all();
        return true;
    }

    ReceiveResult receive(std::chrono::milliseconds timeout) override
    {
        std::unique_lock lock(state_->mutex);
        auto& inbound = state_->queue[side_];
        state_->cv.wait_for(lock, timeout, [&] {
            return !inbound.empty() || state_->closed[1 - side_] || state_->closed[side_];
        });
        if (!inbound.empty()) {
            ReceiveResult r{ReceiveResult::Status::Data, std::move(inbound.front())};
            inbound.pop_front();
            return r;
        }
        if (state_->closed[1 - side_] || state_->closed[side_]) {
            return {ReceiveResult::Status::Closed, {}};
        }
        return {ReceiveResult::Status::Timeout, {}};
    }

    void close() override
    {
        std::lock_guard lock(state_->mutex);
        state_->closed[side_] = true;
        state_->cv.notify_all();
    }

    Endpoint local() const override { return local_; }
    Endpoint remote() const override { return remote_; }
    IpProtocol protocol() const override { return protocol_; }

private:
    std::shared_ptr<PipeState> state_;
    int side_;
    Endpoint local_;
    Endpoint remote_;
    IpProtocol protocol_;
};

// UDP "connection" to a port that silently drops: sends vanish, nothing returns.
class BlackHoleStream : public Stream {
public:
    BlackHoleStream(Endpoint local, Endpoint remote) : local_(local), remote_(remote) {}

    bool send(ByteView) override { return !closed_; }
    ReceiveResult receive(std::chrono::milliseconds timeout) override
    {
        if (closed_) {
            return {ReceiveResult::Status::Closed, {}};
        }
        std::this_thread::sleep_for(timeout);
        return {ReceiveResult::Status::Timeout, {}};
    }
    void close() override { closed_ = true; }
    Endpoint local() const override { return local_; }
    Endpoint remote() const override { return remote_; }
    IpProtocol protocol() const override { return IpProtocol::Udp; }

private:
    Endpoint local_;
    Endpoint remote_;
    std::atomic<bool> closed_{false};
};

} // namespace

void LoopbackNetwork::attach(Ipv4Address addr, std::shared_ptr<LoopbackHost> host)
{
    std::lock_guard lock(mutex_);
    if (!hosts_.emplace(addr, std::move(host)).second) {
        throw Error(ErrorCode::BindFailure, "loopback address " + addr.to_string() + " in use");
    }
}

void LoopbackNetwork::detach(Ipv4Address addr)
{
    std::lock_guard lock(mutex_);
    hosts_.erase(addr);
}

std::shared_ptr<LoopbackHost> LoopbackNetwork::host_at(Ipv4Address addr)
{
    std::lock_guard lock(mutex_);
    auto it = hosts_.find(addr);
    return it == hosts_.end() ? nullptr : it->second;
}

void LoopbackNetwork::deliver(ByteView ip_datagram)
{
    if (ip_datagram.size() < 20 || (ip_datagram[0] >> 4) != 4) {
        return;
    }
    auto host = host_at(Ipv4Address(wire::be32(ip_datagram, 16)));
    if (host) {
        host->on_datagram(Bytes(ip_datagram.begin(), ip_datagram.end()));
    }
}

ConnectOutcome LoopbackNetwork::connect(IpProtocol protocol, Endpoint local, Endpoint remote,
                                        std::chrono::milliseconds timeout)
{
    auto host = host_at(remote.addr);
    if (!host) {
        return {ConnectStatus::Unreachable, nullptr, "no host at " + remote.addr.to_string()};
    }
    if (local.port == 0) {
        std::lock_guard lock(mutex_);
        local.port = next_ephemeral_;
        next_ephemeral_ = next_ephemeral_ == 65535 ? 49152 : next_ephemeral_ + 1;
    }
    switch (host->admit(protocol, remote.port)) {
    case LoopbackHost::Admission::Refuse:
        return {ConnectStatus::Refused, nullptr, "connection refused by " + remote.to_string()};
    case LoopbackHost::Admission::Drop:
        if (protocol == IpProtocol::Udp) {
            return {ConnectStatus::Established, std::make_unique<BlackHoleStream>(local, remote), {}};
        }
        std::this_thread::sleep_for(timeout);
        return {ConnectStatus::TimedOut, nullptr, "no answer from " + remote.to_string()};
    case LoopbackHost::Admission::Accept:
        break;
    }
    auto state = std::make_shared<PipeState>();
    auto client = std::make_unique<PipeEnd>(state, 0, local, remote, protocol);
    host->accept(std::make_unique<PipeEnd>(state, 1, remote, local, protocol));
    return {ConnectStatus::Established, std::move(client), {}};
}

class LoopbackTransport::Inbox : public LoopbackHost {
public:
    Admission admit(IpProtocol, std::uint16_t) override { return Admission::Refuse; }
    void accept(std::unique_ptr<Stream>) override {}

    void on_datagram(Bytes ip_datagram) override
    {
        std::lock_guard lock(mutex_);
        queue_.push_back(std::move(ip_datagram));
        cv_.notify_all();
    }

    std::optional<Bytes> pop(std::chrono::milliseconds timeout)
    {
        std::unique_lock lock(mutex_);
        if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) {
            return std::nullopt;
        }
        Bytes b = std::move(queue_.front());
        queue_.pop_front();
        return b;
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Bytes> queue_;
};

LoopbackTransport::LoopbackTransport(LoopbackNetwork& network, Ipv4Address local)
    : network_(network), local_(local), inbox_(std::make_shared<Inbox>())
{
    network_.attach(local_, inbox_);
}

LoopbackTransport::~LoopbackTransport()
{
    network_.detach(local_);
}

ConnectOutcome LoopbackTransport::connect(IpProtocol protocol, Endpoint local_hint,
                                          Endpoint remote, std::chrono::milliseconds timeout)
{
    return network_.connect(protocol, Endpoint{local_, local_hint.port}, remote, timeout);
}

void LoopbackTransport::send_raw(ByteView ip_datagram)
{
    network_.deliver(ip_datagram);
}

std::optional<Bytes> LoopbackTransport::receive_raw(std::chrono::milliseconds timeout)
{
    return inbox_->pop(timeout);
}

} // namespace primer
