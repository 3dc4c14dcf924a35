#include "primer/mock_honeypot.hpp"

#include "primer/error.hpp"
#include "primer/packet_codec.hpp"
#include "primer/socket_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <list>
#include <thread>

namespace primer {

namespace {

using namespace std::chrono_literals;

constexpr auto kPollInterval = 20ms;

struct ConnectionLog {
    std::mutex mutex;
    Transcript transcript;

    void record(TranscriptEvent::Direction dir, ByteView data)
    {
        if (data.empty()) {
            return;
        }
        std::lock_guard lock(mutex);
        auto now = Timestamp::now();
        auto& sink = dir == TranscriptEvent::Direction::Inbound ? transcript.inbound
                                                                 : transcript.outbound;
        sink.insert(sink.end(), data.begin(), data.end());
        transcript.events.push_back(TranscriptEvent{now, dir, Bytes(data.begin(), data.end())});
        transcript.end = now;
    }

    void finish()
    {
        std::lock_guard lock(mutex);
        transcript.end = Timestamp::now();
    }
};

struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
};

} // namespace

// State shared by the handle, loopback host and worker threads.
struct HoneypotCore {
    explicit HoneypotCore(ServiceProfile p) : profile(std::move(p)) {}

    ServiceProfile profile;
    std::atomic<bool> stopping{false};

    std::mutex log_mutex;
    std::vector<std::shared_ptr<ConnectionLog>> logs;
    std::uint64_t next_id = 1;

    std::mutex worker_mutex;
    std::list<Worker> workers;

    const ServiceScript* script_for(ServicePort port) const
    {
        auto it = profile.services.find(port);
        return it == profile.services.end() ? nullptr : &it->second;
    }

    std::shared_ptr<ConnectionLog> open_log(Endpoint peer, ServicePort service)
    {
        auto log = std::make_shared<ConnectionLog>();
        log->transcript.peer = peer;
        log->transcript.service = service;
        log->transcript.start = Timestamp::now();
        log->transcript.end = log->transcript.start;
        std::lock_guard lock(log_mutex);
        log->transcript.id = next_id++;
        logs.push_back(log);
        return log;
    }

    void reap()
    {
        std::lock_guard lock(worker_mutex);
        for (auto it = workers.begin(); it != workers.end();) {
            if (it->done->load()) {
                it->thread.join();
                it = workers.erase(it);
            } else {
                ++it;
            }
        }
    }

    void join_all()
    {
        std::list<Worker> all;
        {
            std::lock_guard lock(worker_mutex);
            all.swap(workers);
        }
        for (auto& w : all) {
            w.thread.join();
        }
    }
};

namespace {

void run_connection(HoneypotCore& core, std::unique_ptr<Stream> stream, ServiceScript script,
                    ServicePort service)
{
    auto log = core.open_log(stream->remote(), service);
    ServiceSession session(std::move(script));
    bool open = true;
    if (service.protocol == IpProtocol::Tcp) {
        auto banner = session.take_banner();
        if (!banner.empty()) {
            open = stream->send(banner);
            log->record(TranscriptEvent::Direction::Outbound, banner);
        }
    }
    while (open && !core.stopping.load()) {
        auto r = stream->receive(kPollInterval);
        if (r.status == ReceiveResult::Status::Closed) {
            break;
        }
        if (r.status == ReceiveResult::Status::Timeout) {
            continue;
        }
        log->record(TranscriptEvent::Direction::Inbound, r.data);
        Bytes reply;
        if (service.protocol == IpProtocol::Udp) {
            reply = session.take_banner();
        }
        auto out = session.on_data(r.data);
        reply.insert(reply.end(), out.begin(), out.end());
        if (!reply.empty()) {
            open = stream->send(reply);
            log->record(TranscriptEvent::Direction::Outbound, reply);
        }
    }
    stream->close();
    log->finish();
}

void spawn_connection(const std::shared_ptr<HoneypotCore>& core, std::unique_ptr<Stream> stream,
                      ServicePort service)
{
    const auto* script = core->script_for(service);
    if (!script || core->stopping.load()) {
        stream->close();
        return;
    }
    core->reap();
    auto done = std::make_shared<std::atomic<bool>>(false);
    std::thread t([core, done, service, script = *script, s = std::move(stream)]() mutable {
        run_connection(*core, std::move(s), std::move(script), service);
        done->store(true);
    });
    std::lock_guard lock(core->worker_mutex);
    core->workers.push_back(Worker{std::move(t), std::move(done)});
}

// Per-segment responder for raw datagrams: no retransmission, no windows,
// just enough state to hand out banners and service replies.
class RawResponder {
public:
    explicit RawResponder(HoneypotCore& core) : core_(core) {}

    std::optional<Bytes> respond(ByteView datagram)
    {
        ParsedPacket in;
        try {
            in = decode_frame(datagram, LinkType::RawIp);
        } catch (const Error&) {
            return std::nullopt;
        }
        if (in.ip.dst_addr != core_.profile.identity) {
            return std::nullopt;
        }
        std::lock_guard lock(mutex_);
        if (const auto* tcp = in.tcp()) {
            return on_tcp(in, *tcp);
        }
        if (in.udp()) {
            return on_udp(in, datagram);
        }
        if (const auto* icmp = in.icmp()) {
            if (core_.profile.answer_ping && icmp->type == IcmpMessage::kEchoRequest) {
                ParsedPacket out = reply_to(in);
                IcmpMessage reply = *icmp;
                reply.type = IcmpMessage::kEchoReply;
                out.transport = reply;
                out.payload = in.payload;
                return finish(out);
            }
        }
        return std::nullopt;
    }

private:
    struct FlowState {
        std::unique_ptr<ServiceSession> session;
        std::shared_ptr<ConnectionLog> log;
        std::uint32_t next_seq = 0;
    };

    using FlowKey = std::pair<Endpoint, ServicePort>;

    ParsedPacket reply_to(const ParsedPacket& in)
    {
        ParsedPacket out;
        out.ip.src_addr = in.ip.dst_addr;
        out.ip.dst_addr = in.ip.src_addr;
        out.ip.protocol = in.ip.protocol;
        out.ip.identification = next_ip_id_++;
        out.ip.ttl = 64;
        return out;
    }

    Bytes finish(ParsedPacket& out)
    {
        finalize_lengths(out);
        recompute_checksums(out);
        return encode_ip_datagram(out, Checksums::Preserve);
    }

    FlowState& flow(const ParsedPacket& in, ServicePort service, const ServiceScript& script)
    {
        FlowKey key{Endpoint{in.ip.src_addr, in.src_port()}, service};
        auto it = flows_.find(key);
        if (it == flows_.end()) {
            FlowState st;
            st.session = std::make_unique<ServiceSession>(script);
            st.log = core_.open_log(key.first, service);
            st.next_seq = 0x1000'0000u + static_cast<std::uint32_t>(flows_.size()) * 0x0100'0000u;
            it = flows_.emplace(key, std::move(st)).first;
        }
        return it->second;
    }

    std::optional<Bytes> tcp_segment(const ParsedPacket& in, const TcpHeader& peer,
                                     std::uint16_t flags, std::uint32_t seq, std::uint32_t ack,
                                     Bytes payload)
    {
        ParsedPacket out = reply_to(in);
        out.ip.flags = Ipv4Header::kDontFragment;
        TcpHeader h;
        h.src_port = peer.dst_port;
        h.dst_port = peer.src_port;
        h.seq = seq;
        h.ack = ack;
        h.flags = flags;
        h.window = 64240;
        out.transport = h;
        out.payload = std::move(payload);
        return finish(out);
    }

    std::optional<Bytes> on_tcp(const ParsedPacket& in, const TcpHeader& tcp)
    {
        ServicePort service{IpProtocol::Tcp, tcp.dst_port};
        const auto* script = core_.script_for(service);
        const auto consumed = static_cast<std::uint32_t>(in.payload.size()) +
                              (tcp.has(TcpHeader::kSyn) ? 1u : 0u) +
                              (tcp.has(TcpHeader::kFin) ? 1u : 0u);
        if (!script) {
            if (core_.profile.closed_policy == ClosedPolicy::Reject && !tcp.has(TcpHeader::kRst)) {
                return tcp_segment(in, tcp, TcpHeader::kRst | TcpHeader::kAck, 0,
                                   tcp.seq + consumed, {});
            }
            return std::nullopt;
        }
        if (tcp.has(TcpHeader::kRst)) {
            return std::nullopt;
        }
        auto& st = flow(in, service, *script);
        const std::uint32_t ack = tcp.seq + consumed;
        if (tcp.has(TcpHeader::kSyn) && !tcp.has(TcpHeader::kAck)) {
            auto isn = st.next_seq++;
            return tcp_segment(in, tcp, TcpHeader::kSyn | TcpHeader::kAck, isn, ack, {});
        }
        Bytes reply;
        if (!in.payload.empty()) {
            st.log->record(TranscriptEvent::Direction::Inbound, in.payload);
            reply = st.session->take_banner();
            auto out = st.session->on_data(in.payload);
            reply.insert(reply.end(), out.begin(), out.end());
        } else if (!tcp.has(TcpHeader::kFin)) {
            reply = st.session->take_banner();
            if (reply.empty()) {
                return std::nullopt;
            }
        }
        std::uint16_t flags = TcpHeader::kAck;
        if (!reply.empty()) {
            flags |= TcpHeader::kPsh;
        }
        if (tcp.has(TcpHeader::kFin)) {
            flags |= TcpHeader::kFin;
        }
        auto seq = st.next_seq;
        st.next_seq += static_cast<std::uint32_t>(reply.size()) + (tcp.has(TcpHeader::kFin) ? 1u : 0u);
        st.log->record(TranscriptEvent::Direction::Outbound, reply);
        if (tcp.has(TcpHeader::kFin)) {
            st.log->finish();
        }
        return tcp_segment(in, tcp, flags, seq, ack, std::move(reply));
    }

    std::optional<Bytes> on_udp(const ParsedPacket& in, ByteView datagram)
    {
        const auto& udp = *in.udp();
        ServicePort service{IpProtocol::Udp, udp.dst_port};
        const auto* script = core_.script_for(service);
        if (!script) {
            if (core_.profile.closed_policy != ClosedPolicy::Reject) {
                return std::nullopt;
            }
            ParsedPacket out = reply_to(in);
            out.ip.protocol = static_cast<std::uint8_t>(IpProtocol::Icmp);
            IcmpMessage icmp;
            icmp.type = IcmpMessage::kDestUnreachable;
            icmp.code = 3;
            out.transport = icmp;
            auto quoted = std::min(datagram.size(), in.ip.header_length() + 8);
            out.payload.assign(datagram.begin(), datagram.begin() + static_cast<long>(quoted));
            return finish(out);
        }
        auto& st = flow(in, service, *script);
        st.log->record(TranscriptEvent::Direction::Inbound, in.payload);
        Bytes reply = st.session->take_banner();
        auto out = st.session->on_data(in.payload);
        reply.insert(reply.end(), out.begin(), out.end());
        if (reply.empty()) {
            return std::nullopt;
        }
        st.log->record(TranscriptEvent::Direction::Outbound, reply);
        ParsedPacket pkt = reply_to(in);
        UdpHeader h;
        h.src_port = udp.dst_port;
        h.dst_port = udp.src_port;
        pkt.transport = h;
        pkt.payload = std::move(reply);
        return finish(pkt);
    }

    HoneypotCore& core_;
    std::mutex mutex_;
    std::map<FlowKey, FlowState> flows_;
    std::uint16_t next_ip_id_ = 1;
};

class HoneypotHost : public LoopbackHost {
public:
    HoneypotHost(std::shared_ptr<HoneypotCore> core, LoopbackNetwork& network)
        : core_(std::move(core)), network_(network), responder_(*core_)
    {
    }

    Admission admit(IpProtocol protocol, std::uint16_t port) override
    {
        if (core_->stopping.load()) {
            return Admission::Drop;
        }
        if (core_->script_for(ServicePort{protocol, port})) {
            return Admission::Accept;
        }
        return core_->profile.closed_policy == ClosedPolicy::Reject ? Admission::Refuse
                                                                   : Admission::Drop;
    }

    void accept(std::unique_ptr<Stream> server_side) override
    {
        ServicePort service{server_side->protocol(), server_side->local().port};
        spawn_connection(core_, std::move(server_side), service);
    }

    void on_datagram(Bytes ip_datagram) override
    {
        if (core_->stopping.load()) {
            return;
        }
        if (auto reply = responder_.respond(ip_datagram)) {
            network_.deliver(*reply);
        }
    }

private:
    std::shared_ptr<HoneypotCore> core_;
    LoopbackNetwork& network_;
    RawResponder responder_;
};

struct Listener {
    UniqueFd fd;
    ServicePort service;
    Endpoint bound;
};

struct UdpPeer {
    std::unique_ptr<ServiceSession> session;
    std::shared_ptr<ConnectionLog> log;
};

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

Listener bind_listener(ServicePort service, const SocketListen& listen)
{
    const int port = service.port + listen.port_offset;
    if (port <= 0 || port > 65535) {
        throw Error(ErrorCode::BindFailure,
                    service.to_string() + " plus offset is outside the port range");
    }
    const bool tcp = service.protocol == IpProtocol::Tcp;
    UniqueFd fd(::socket(AF_INET, (tcp ? SOCK_STREAM : SOCK_DGRAM) | SOCK_NONBLOCK | SOCK_CLOEXEC, 0));
    if (!fd) {
        throw Error(ErrorCode::BindFailure, std::string("socket: ") + std::strerror(errno));
    }
    int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    auto sa = to_sockaddr(Endpoint{listen.bind_addr, static_cast<std::uint16_t>(port)});
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 ||
        (tcp && ::listen(fd.get(), 64) != 0)) {
        throw Error(ErrorCode::BindFailure, "cannot bind " + service.to_string() + " on " +
                                                listen.bind_addr.to_string() + ":" +
                                                std::to_string(port) + ": " + std::strerror(errno));
    }
    return Listener{std::move(fd), service, Endpoint{listen.bind_addr, static_cast<std::uint16_t>(port)}};
}

void socket_loop(const std::shared_ptr<HoneypotCore>& core, std::vector<Listener>& listeners)
{
    std::map<std::pair<std::size_t, Endpoint>, UdpPeer> udp_peers;
    std::vector<pollfd> fds;
    for (const auto& l : listeners) {
        fds.push_back(pollfd{l.fd.get(), POLLIN, 0});
    }
    std::vector<std::uint8_t> buf(65536);
    while (!core->stopping.load()) {
        for (auto& p : fds) {
            p.revents = 0;
        }
        int rc = ::poll(fds.data(), fds.size(), static_cast<int>(kPollInterval.count()));
        if (rc <= 0) {
            continue;
        }
        for (std::size_t i = 0; i < fds.size(); ++i) {
            if (!(fds[i].revents & POLLIN)) {
                continue;
            }
            const auto& l = listeners[i];
            if (l.service.protocol == IpProtocol::Tcp) {
                int c = ::accept4(l.fd.get(), nullptr, nullptr, SOCK_CLOEXEC);
                if (c >= 0) {
                    spawn_connection(core, std::make_unique<SocketStream>(UniqueFd(c), IpProtocol::Tcp),
                                     l.service);
                }
                continue;
            }
            sockaddr_in from{};
            socklen_t len = sizeof from;
            auto n = ::recvfrom(l.fd.get(), buf.data(), buf.size(), 0,
                                reinterpret_cast<sockaddr*>(&from), &len);
            if (n < 0) {
                continue;
            }
            auto peer = from_sockaddr(from);
            auto& st = udp_peers[{i, peer}];
            if (!st.session) {
                st.session = std::make_unique<ServiceSession>(*core->script_for(l.service));
                st.log = core->open_log(peer, l.service);
            }
            ByteView data(buf.data(), static_cast<std::size_t>(n));
            st.log->record(TranscriptEvent::Direction::Inbound, data);
            Bytes reply = st.session->take_banner();
            auto out = st.session->on_data(data);
            reply.insert(reply.end(), out.begin(), out.end());
            if (!reply.empty()) {
                ::sendto(l.fd.get(), reply.data(), reply.size(), 0,
                         reinterpret_cast<sockaddr*>(&from), len);
                st.log->record(TranscriptEvent::Direction::Outbound, reply);
            }
        }
    }
}

} // namespace

struct HoneypotHandle::Impl {
    std::shared_ptr<HoneypotCore> core;
    LoopbackNetwork* network = nullptr;
    std::vector<Listener> listeners;
    std::vector<Endpoint> bound;
    std::thread socket_thread;
    bool stopped = false;
    std::mutex stop_mutex;

    void stop()
    {
        std::lock_guard lock(stop_mutex);
        if (stopped) {
            return;
        }
        stopped = true;
        core->stopping.store(true);
        if (network) {
            network->detach(core->profile.identity);
        }
        if (socket_thread.joinable()) {
            socket_thread.join();
        }
        core->join_all();
        listeners.clear();
    }
};

HoneypotHandle::HoneypotHandle(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

HoneypotHandle::~HoneypotHandle()
{
    shutdown();
}

void HoneypotHandle::shutdown()
{
    impl_->stop();
}

bool HoneypotHandle::running() const
{
    return !impl_->core->stopping.load();
}

std::vector<Endpoint> HoneypotHandle::listening() const
{
    return impl_->bound;
}

std::unique_ptr<HoneypotHandle> serve(const ServiceProfile& profile, LoopbackNetwork& network)
{
    auto impl = std::make_unique<HoneypotHandle::Impl>();
    impl->core = std::make_shared<HoneypotCore>(profile);
    network.attach(profile.identity, std::make_shared<HoneypotHost>(impl->core, network));
    impl->network = &network;
    return std::make_unique<HoneypotHandle>(std::move(impl));
}

std::unique_ptr<HoneypotHandle> serve(const ServiceProfile& profile, const SocketListen& listen)
{
    auto impl = std::make_unique<HoneypotHandle::Impl>();
    impl->core = std::make_shared<HoneypotCore>(profile);
    for (const auto& [service, script] : profile.services) {
        impl->listeners.push_back(bind_listener(service, listen));
        impl->bound.push_back(impl->listeners.back().bound);
    }
    auto* raw = impl.get();
    impl->socket_thread = std::thread([raw] { socket_loop(raw->core, raw->listeners); });
    return std::make_unique<HoneypotHandle>(std::move(impl));
}

std::vector<Transcript> harvest_log(HoneypotHandle& handle)
{
    auto& core = *handle.impl().core;
    std::vector<std::shared_ptr<ConnectionLog>> logs;
    {
        std::lock_guard lock(core.log_mutex);
        logs = core.logs;
    }
    std::vector<Transcript> out;
    out.reserve(logs.size());
    for (const auto& log : logs) {
        std::lock_guard lock(log->mutex);
        out.push_back(log->transcript);
    }
    std::stable_sort(out.begin(), out.end(), [](const Transcript& a, const Transcript& b) {
        return std::tie(a.start, a.id) < std::tie(b.start, b.id);
    });
    return out;
}

} // namespace primer
