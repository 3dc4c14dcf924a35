#pragma once

#include "primer/capture_io.hpp"
#include "primer/packet_codec.hpp"
#include "primer/transport.hpp"

#include <chrono>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace primer {

enum class ReplayMode {
    Raw,     // recorded datagrams resent verbatim
    Session, // payloads re-enacted over fresh connections
};

std::string_view to_string(ReplayMode mode);
std::optional<ReplayMode> parse_replay_mode(std::string_view text);

// Session when every attacker packet is TCP and every attacker TCP flow
// carries payload; Raw otherwise.
ReplayMode default_mode_for(const CaptureFile& capture, Ipv4Address attacker);

struct TimingPolicy {
    enum class Kind {
        AsRecorded,
        Compressed,
        FixedRate,
    };
    Kind kind = Kind::AsRecorded;
    double rate = 0.0;  // packets per second, FixedRate
    double scale = 1.0; // multiplier on recorded gaps, AsRecorded

    static TimingPolicy as_recorded(double scale = 1.0) { return {Kind::AsRecorded, 0.0, scale}; }
    static TimingPolicy compressed() { return {Kind::Compressed, 0.0, 1.0}; }
    static TimingPolicy fixed_rate(double rate) { return {Kind::FixedRate, rate, 1.0}; }

    // Throws Error(InvalidArgument) for a non-positive rate or scale.
    void validate() const;
};

struct SessionChunk {
    std::uint32_t flow_id = 0;
    IpProtocol protocol = IpProtocol::Tcp;
    std::uint16_t source_port = 0;  // recorded attacker port
    std::uint16_t service_port = 0; // recorded target port
    Bytes payload;

    bool operator==(const SessionChunk&) const = default;
};

struct PlanEntry {
    std::chrono::microseconds offset{0};
    std::size_t source_index = 0; // record index in the source capture
    std::variant<ParsedPacket, SessionChunk> item;

    const ParsedPacket* packet() const { return std::get_if<ParsedPacket>(&item); }
    const SessionChunk* chunk() const { return std::get_if<SessionChunk>(&item); }
    bool operator==(const PlanEntry&) const = default;
};

struct ReplayPlan {
    ReplayMode mode = ReplayMode::Raw;
    std::vector<PlanEntry> entries;
    Ipv4Address attacker_addr;
    Ipv4Address target_addr;

    bool operator==(const ReplayPlan&) const = default;
};

struct PlanOptions {
    // When set, TCP/UDP packets to other destination ports are left out.
    // Portless traffic is always kept.
    std::optional<std::set<ServicePort>> only_ports;
};

// Raw mode selects every decodable record sent by the attacker. Session mode
// reduces attacker TCP/UDP traffic to per-flow payload chunks: control
// segments without payload, exact retransmissions and portless packets
// produce no entries.
// Throws Error(NoSelectableTraffic) or Error(AttackerNotFound).
ReplayPlan build_replay_plan(const CaptureFile& capture, Ipv4Address attacker, Ipv4Address target,
                             ReplayMode mode, const TimingPolicy& policy,
                             const PlanOptions& options = {});

struct ReplayOptions {
    std::chrono::milliseconds reply_window{2000};
    std::chrono::milliseconds connect_timeout{1000};
    bool fail_fast = false;
    // Added to service ports when connecting (mock listeners on high ports).
    int service_port_offset = 0;
};

struct TimedRecord {
    Timestamp at;
    PacketRecord record; // RawIP datagram stamped with `at`
};

struct SendFailureInfo {
    std::size_t entry_index = 0;
    std::string message;
};

struct ReplaySession {
    ReplayMode mode = ReplayMode::Raw;
    std::vector<TimedRecord> sent;
    std::vector<TimedRecord> received;
    Timestamp start;
    Timestamp end;
    std::vector<SendFailureInfo> failures;
    // How late each transmission was relative to its scheduled offset.
    std::vector<std::chrono::microseconds> lags;
};

// Sends the plan while a concurrent receiver records everything the target
// emits until reply_window after the last transmission. Session traffic is
// rendered as synthesized TCP/UDP segments, one per payload chunk. Per-entry
// failures are collected unless fail_fast, which throws Error(SendFailure).
// Throws Error(TransportUnavailable) when the transport cannot be used at
// all, including when every connection attempt was refused or unreachable.
ReplaySession execute_replay(const ReplayPlan& plan, Transport& transport,
                             const ReplayOptions& options = {});

// Merged by timestamp; sent before received on ties. Always RawIP.
CaptureFile session_to_capture(const ReplaySession& session);

} // namespace primer
