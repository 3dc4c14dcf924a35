#include "primer/replay.hpp"

#include "primer/error.hpp"
#include "wire.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

namespace primer {

namespace {

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

struct Decoded {
    std::size_t index;
    ParsedPacket packet;
};

std::vector<Decoded> decode_all(const CaptureFile& capture)
{
    std::vector<Decoded> out;
    out.reserve(capture.records.size());
    for (std::size_t i = 0; i < capture.records.size(); ++i) {
        try {
            out.push_back({i, decode_packet(capture.records[i], capture.link_type)});
        } catch (const Error& e) {
            spdlog::debug("record {} not selectable: {}", i, e.what());
        }
    }
    return out;
}

bool port_allowed(const ParsedPacket& p, const PlanOptions& options)
{
    if (!options.only_ports || (!p.tcp() && !p.udp())) {
        return true;
    }
    ServicePort sp{p.tcp() ? IpProtocol::Tcp : IpProtocol::Udp, p.dst_port()};
    return options.only_ports->count(sp) != 0;
}

using FlowKey = std::tuple<std::uint8_t, std::uint16_t, Ipv4Address, std::uint16_t>;

FlowKey flow_key(const ParsedPacket& p)
{
    return {p.ip.protocol, p.src_port(), p.ip.dst_addr, p.dst_port()};
}

std::vector<PlanEntry> session_entries(const std::vector<const Decoded*>& selected)
{
    std::map<FlowKey, std::uint32_t> flow_ids;
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen_seq;
    std::vector<PlanEntry> entries;
    for (const auto* d : selected) {
        const auto& p = d->packet;
        if ((!p.tcp() && !p.udp()) || p.payload.empty()) {
            continue;
        }
        auto [it, fresh] = flow_ids.emplace(flow_key(p), static_cast<std::uint32_t>(flow_ids.size()));
        const auto flow = it->second;
        if (const auto* tcp = p.tcp()) {
            if (!seen_seq.emplace(flow, tcp->seq).second) {
                continue;
            }
        }
        SessionChunk chunk{flow, p.tcp() ? IpProtocol::Tcp : IpProtocol::Udp, p.src_port(),
                           p.dst_port(), p.payload};
        entries.push_back(PlanEntry{0us, d->index, std::move(chunk)});
    }
    return entries;
}

void assign_offsets(std::vector<PlanEntry>& entries, const CaptureFile& capture, Timestamp base,
                    const TimingPolicy& policy)
{
    std::chrono::microseconds previous{0};
    for (std::size_t i = 0; i < entries.size(); ++i) {
        std::chrono::microseconds offset{0};
        switch (policy.kind) {
        case TimingPolicy::Kind::AsRecorded: {
            auto delta = capture.records[entries[i].source_index].timestamp() - base;
            offset = std::chrono::microseconds(
                std::llround(static_cast<double>(delta.count()) * policy.scale));
            break;
        }
        case TimingPolicy::Kind::Compressed:
            break;
        case TimingPolicy::Kind::FixedRate:
            offset = std::chrono::microseconds(
                std::llround(static_cast<double>(i) * 1e6 / policy.rate));
            break;
        }
        offset = std::max(offset, previous);
        entries[i].offset = offset;
        previous = offset;
    }
}

Bytes render_segment(IpProtocol protocol, Endpoint src, Endpoint dst, std::uint32_t seq,
                     std::uint32_t ack, ByteView payload, std::uint16_t ip_id)
{
    ParsedPacket p;
    p.ip.src_addr = src.addr;
    p.ip.dst_addr = dst.addr;
    p.ip.protocol = static_cast<std::uint8_t>(protocol);
    p.ip.identification = ip_id;
    if (protocol == IpProtocol::Tcp) {
        p.ip.flags = Ipv4Header::kDontFragment;
        TcpHeader h;
        h.src_port = src.port;
        h.dst_port = dst.port;
        h.seq = seq;
        h.ack = ack;
        h.flags = TcpHeader::kPsh | TcpHeader::kAck;
        h.window = 64240;
        p.transport = h;
    } else {
        UdpHeader h;
        h.src_port = src.port;
        h.dst_port = dst.port;
        p.transport = h;
    }
    p.payload.assign(payload.begin(), payload.end());
    finalize_lengths(p);
    recompute_checksums(p);
    return encode_ip_datagram(p, Checksums::Preserve);
}

// Wall-clock stamps that never go backwards within one list.
class Stamper {
public:
    Timestamp next()
    {
        auto now = Timestamp::now();
        if (now < last_) {
            now = last_;
        }
        last_ = now;
        return now;
    }

private:
    Timestamp last_;
};

struct Flow {
    std::uint32_t id = 0;
    IpProtocol protocol = IpProtocol::Tcp;
    Endpoint client;
    Endpoint server;
    std::unique_ptr<Stream> stream;
    std::atomic<std::uint32_t> client_seq{0};
    std::atomic<std::uint32_t> server_seq{0};
    std::atomic<bool> closed{false};
};

class Runner {
public:
    Runner(const ReplayPlan& plan, Transport& transport, const ReplayOptions& options)
        : plan_(plan), transport_(transport), options_(options)
    {
    }

    ReplaySession run()
    {
        session_.mode = plan_.mode;
        session_.start = send_stamp_.next();
        t0_ = Clock::now();
        std::thread receiver([this] { receive_loop(); });
        std::exception_ptr failure;
        Clock::time_point last_tx = t0_;
        try {
            last_tx = send_all();
        } catch (...) {
            failure = std::current_exception();
        }
        if (!failure) {
            std::this_thread::sleep_until(last_tx + options_.reply_window);
        }
        stop_.store(true);
        receiver.join();
        close_flows();
        if (failure) {
            std::rethrow_exception(failure);
        }
        if (receive_error_) {
            std::rethrow_exception(receive_error_);
        }
        session_.received = std::move(received_);
        session_.end = std::max(send_stamp_.next(), session_.received.empty()
                                                        ? Timestamp{}
                                                        : session_.received.back().at);
        if (plan_.mode == ReplayMode::Session && session_.sent.empty() &&
            !session_.failures.empty() && only_hard_refusals_) {
            throw Error(ErrorCode::TransportUnavailable,
                        "no connection to " + plan_.target_addr.to_string() + " could be made: " +
                            session_.failures.front().message);
        }
        return std::move(session_);
    }

private:
    Clock::time_point send_all()
    {
        Clock::time_point last_tx = t0_;
        for (std::size_t i = 0; i < plan_.entries.size(); ++i) {
            const auto& entry = plan_.entries[i];
            const auto due = t0_ + entry.offset;
            std::this_thread::sleep_until(due);
            try {
                if (const auto* pkt = entry.packet()) {
                    send_raw(*pkt, due);
                } else {
                    send_chunk(*entry.chunk(), due);
                }
            } catch (const Error& e) {
                if (e.code() == ErrorCode::TransportUnavailable) {
                    throw;
                }
                fail(i, e.what());
            }
            last_tx = Clock::now();
        }
        return last_tx;
    }

    void fail(std::size_t index, const std::string& message)
    {
        spdlog::warn("entry {}: {}", index, message);
        if (options_.fail_fast) {
            throw Error(ErrorCode::SendFailure, message, index);
        }
        session_.failures.push_back(SendFailureInfo{index, message});
    }

    void note_transmission(Clock::time_point due, Bytes datagram)
    {
        auto at = send_stamp_.next();
        session_.lags.push_back(
            std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - due));
        session_.sent.push_back(TimedRecord{at, PacketRecord::from_frame(at, std::move(datagram))});
    }

    void send_raw(const ParsedPacket& packet, Clock::time_point due)
    {
        auto datagram = encode_ip_datagram(packet, Checksums::Preserve);
        transport_.send_raw(datagram);
        note_transmission(due, std::move(datagram));
    }

    void send_chunk(const SessionChunk& chunk, Clock::time_point due)
    {
        auto flow = flow_for(chunk);
        if (!flow) {
            throw Error(ErrorCode::SendFailure,
                        "flow " + std::to_string(chunk.flow_id) + " has no connection");
        }
        auto seq = flow->client_seq.fetch_add(static_cast<std::uint32_t>(chunk.payload.size()));
        auto datagram = render_segment(chunk.protocol, flow->client, flow->server, seq,
                                       flow->server_seq.load(), chunk.payload, next_ip_id());
        if (!flow->stream->send(chunk.payload)) {
            throw Error(ErrorCode::SendFailure, "connection to " + flow->server.to_string() +
                                                    " closed before entry could be sent");
        }
        note_transmission(due, std::move(datagram));
    }

    std::shared_ptr<Flow> flow_for(const SessionChunk& chunk)
    {
        auto it = flow_state_.find(chunk.flow_id);
        if (it != flow_state_.end()) {
            return it->second;
        }
        auto& slot = flow_state_[chunk.flow_id];
        const int port = chunk.service_port + options_.service_port_offset;
        if (port <= 0 || port > 65535) {
            throw Error(ErrorCode::InvalidArgument, "service port offset leaves the port range");
        }
        Endpoint remote{plan_.target_addr, static_cast<std::uint16_t>(port)};
        auto outcome = transport_.connect(chunk.protocol, Endpoint{plan_.attacker_addr, chunk.source_port},
                                          remote, options_.connect_timeout);
        if (outcome.status != ConnectStatus::Established) {
            if (outcome.status == ConnectStatus::TimedOut) {
                only_hard_refusals_ = false;
            }
            throw Error(ErrorCode::SendFailure, "connect to " + remote.to_string() + " " +
                                                    std::string(to_string(outcome.status)) +
                                                    (outcome.detail.empty() ? "" : ": " + outcome.detail));
        }
        auto flow = std::make_shared<Flow>();
        flow->id = chunk.flow_id;
        flow->protocol = chunk.protocol;
        flow->client = Endpoint{plan_.attacker_addr, chunk.source_port};
        flow->server = Endpoint{plan_.target_addr, chunk.service_port};
        flow->client_seq = 0x0100'0000u * (chunk.flow_id + 1);
        flow->server_seq = 0x8000'0000u + 0x0100'0000u * chunk.flow_id;
        flow->stream = std::move(outcome.stream);
        slot = flow;
        std::lock_guard lock(flows_mutex_);
        flows_.push_back(flow);
        return flow;
    }

    std::uint16_t next_ip_id() { return static_cast<std::uint16_t>(ip_id_.fetch_add(1)); }

    void receive_loop()
    {
        try {
            if (plan_.mode == ReplayMode::Raw) {
                receive_raw();
            } else {
                receive_streams();
            }
        } catch (...) {
            receive_error_ = std::current_exception();
        }
    }

    void receive_raw()
    {
        while (!stop_.load()) {
            auto datagram = transport_.receive_raw(5ms);
            if (!datagram || datagram->size() < kIpv4MinHeaderSize) {
                continue;
            }
            if (Ipv4Address(wire::be32(*datagram, 12)) != plan_.target_addr) {
                continue;
            }
            auto at = receive_stamp_.next();
            received_.push_back(TimedRecord{at, PacketRecord::from_frame(at, std::move(*datagram))});
        }
    }

    void receive_streams()
    {
        while (!stop_.load()) {
            std::vector<std::shared_ptr<Flow>> flows;
            {
                std::lock_guard lock(flows_mutex_);
                flows = flows_;
            }
            bool progressed = false;
            for (const auto& flow : flows) {
                if (flow->closed.load()) {
                    continue;
                }
                auto r = flow->stream->receive(0ms);
                if (r.status == ReceiveResult::Status::Closed) {
                    flow->closed.store(true);
                } else if (r.status == ReceiveResult::Status::Data) {
                    progressed = true;
                    auto seq = flow->server_seq.fetch_add(static_cast<std::uint32_t>(r.data.size()));
                    auto datagram = render_segment(flow->protocol, flow->server, flow->client, seq,
                                                   flow->client_seq.load(), r.data, next_ip_id());
                    auto at = receive_stamp_.next();
                    received_.push_back(TimedRecord{at, PacketRecord::from_frame(at, std::move(datagram))});
                }
            }
            if (!progressed) {
                std::this_thread::sleep_for(1ms);
            }
        }
    }

    void close_flows()
    {
        std::lock_guard lock(flows_mutex_);
        for (const auto& flow : flows_) {
            flow->stream->close();
        }
    }

    const ReplayPlan& plan_;
    Transport& transport_;
    ReplayOptions options_;
    Clock::time_point t0_;
    std::atomic<bool> stop_{false};
    std::atomic<std::uint32_t> ip_id_{1};

    // sender only
    ReplaySession session_;
    Stamper send_stamp_;
    std::map<std::uint32_t, std::shared_ptr<Flow>> flow_state_;
    bool only_hard_refusals_ = true;

    // receiver only
    std::vector<TimedRecord> received_;
    Stamper receive_stamp_;
    std::exception_ptr receive_error_;

    std::mutex flows_mutex_;
    std::vector<std::shared_ptr<Flow>> flows_;
};

} // namespace

std::string_view to_string(ReplayMode mode)
{
    return mode == ReplayMode::Raw ? "raw" : "session";
}

std::optional<ReplayMode> parse_replay_mode(std::string_view text)
{
    if (text == "raw") {
        return ReplayMode::Raw;
    }
    if (text == "session") {
        return ReplayMode::Session;
    }
    return std::nullopt;
}

ReplayMode default_mode_for(const CaptureFile& capture, Ipv4Address attacker)
{
    std::map<FlowKey, bool> payload_seen;
    for (const auto& d : decode_all(capture)) {
        if (d.packet.ip.src_addr != attacker) {
            continue;
        }
        if (!d.packet.tcp()) {
            return ReplayMode::Raw;
        }
        auto& seen = payload_seen[flow_key(d.packet)];
        seen = seen || !d.packet.payload.empty();
    }
    if (payload_seen.empty()) {
        return ReplayMode::Raw;
    }
    for (const auto& [key, seen] : payload_seen) {
        if (!seen) {
            return ReplayMode::Raw;
        }
    }
    return ReplayMode::Session;
}

void TimingPolicy::validate() const
{
    if (kind == Kind::FixedRate && !(rate > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "fixed-rate timing needs a positive rate");
    }
    if (kind == Kind::AsRecorded && !(scale > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "as-recorded timing needs a positive scale");
    }
}

ReplayPlan build_replay_plan(const CaptureFile& capture, Ipv4Address attacker, Ipv4Address target,
                             ReplayMode mode, const TimingPolicy& policy, const PlanOptions& options)
{
    policy.validate();
    if (capture.records.empty()) {
        throw Error(ErrorCode::NoSelectableTraffic, "capture has no records");
    }
    const auto decoded = decode_all(capture);
    if (decoded.empty()) {
        throw Error(ErrorCode::NoSelectableTraffic, "no record in the capture could be decoded");
    }
    std::vector<const Decoded*> selected;
    bool attacker_seen = false;
    for (const auto& d : decoded) {
        if (d.packet.ip.src_addr != attacker) {
            continue;
        }
        attacker_seen = true;
        if (port_allowed(d.packet, options)) {
            selected.push_back(&d);
        }
    }
    if (!attacker_seen) {
        throw Error(ErrorCode::AttackerNotFound,
                    attacker.to_string() + " is not a source address in the capture");
    }

    ReplayPlan plan;
    plan.mode = mode;
    plan.attacker_addr = attacker;
    plan.target_addr = target;
    if (mode == ReplayMode::Raw) {
        for (const auto* d : selected) {
            plan.entries.push_back(PlanEntry{0us, d->index, d->packet});
        }
    } else {
        plan.entries = session_entries(selected);
    }
    if (plan.entries.empty()) {
        throw Error(ErrorCode::NoSelectableTraffic,
                    "nothing from " + attacker.to_string() + " is replayable in " +
                        std::string(to_string(mode)) + " mode");
    }
    assign_offsets(plan.entries, capture, capture.records[selected.front()->index].timestamp(), policy);
    return plan;
}

ReplaySession execute_replay(const ReplayPlan& plan, Transport& transport, const ReplayOptions& options)
{
    if (plan.entries.empty()) {
        throw Error(ErrorCode::NoSelectableTraffic, "replay plan is empty");
    }
    Runner runner(plan, transport, options);
    return runner.run();
}

CaptureFile session_to_capture(const ReplaySession& session)
{
    CaptureFile out;
    out.link_type = LinkType::RawIp;
    out.records.reserve(session.sent.size() + session.received.size());
    std::vector<const TimedRecord*> merged;
    for (const auto& r : session.sent) {
        merged.push_back(&r);
    }
    for (const auto& r : session.received) {
        merged.push_back(&r);
    }
    std::stable_sort(merged.begin(), merged.end(),
                     [](const TimedRecord* a, const TimedRecord* b) { return a->at < b->at; });
    for (const auto* r : merged) {
        out.records.push_back(r->record);
    }
    return out;
}

} // namespace primer
