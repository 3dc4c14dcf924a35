#pragma once

#include "primer/capture_io.hpp"
#include "primer/net_types.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

namespace primer {

// One directional conversation row: (addr_a, port_a) -> (addr_b, port_b).
struct ConversationStats {
    Ipv4Address addr_a;
    std::uint16_t port_a = 0; // 0 for portless protocols
    Ipv4Address addr_b;
    std::uint16_t port_b = 0;
    std::uint64_t packets = 0;
    std::uint64_t bytes = 0; // sum of original_len

    bool operator==(const ConversationStats&) const = default;
};

enum class ConversationOrder {
    FirstSeen,
    // Numeric by (addr_a, addr_b); rows sharing both addresses keep first-seen order.
    Address,
};

struct ConversationOptions {
    ConversationOrder order = ConversationOrder::FirstSeen;
    // Merge A->B and B->A into one row oriented by the first packet seen.
    bool bidirectional = false;
};

struct ConversationTable {
    std::vector<ConversationStats> rows;
    std::size_t undecodable = 0;
};

ConversationTable conversation_table(const CaptureFile& capture, ConversationOptions options = {});

struct ExtraneousPort {
    std::uint8_t protocol = 0;
    std::uint16_t port = 0; // 0 for ICMP and other portless traffic
    std::uint64_t packets = 0;

    bool operator==(const ExtraneousPort&) const = default;
};

struct AccuracyReport {
    Ipv4Address target;
    std::set<ServicePort> open_ports;
    std::uint64_t total_toward_target = 0;
    std::uint64_t on_service = 0;
    std::uint64_t off_service = 0;
    double accuracy = 0.0; // on_service / total_toward_target; 0 when nothing reached the target
    std::uint64_t packets_from_target = 0;
    std::uint64_t total_packets = 0;
    double reply_fraction = 0.0; // packets_from_target / total_packets
    std::uint64_t distinct_sources = 0;
    std::uint64_t distinct_dst_ports = 0;
    std::vector<ExtraneousPort> extraneous_ports; // sorted by (protocol, port)
    std::size_t undecodable = 0;

    // Reply fraction as a whole percentage, truncated toward zero.
    std::uint64_t reply_percent() const;
};

AccuracyReport accuracy_report(const CaptureFile& capture, Ipv4Address target,
                               const std::set<ServicePort>& open_ports);

struct VolumeBin {
    Timestamp start;
    std::uint64_t packets = 0;
    std::uint64_t bytes = 0;
};

struct GapStats {
    std::size_t count = 0;
    std::chrono::microseconds min{0};
    std::chrono::microseconds max{0};
    double mean_us = 0.0;
    double median_us = 0.0;
};

struct SourceBurst {
    Ipv4Address source;
    Timestamp first;
    Timestamp last;
    std::uint64_t packets = 0;

    // Shortest window containing every packet from this source.
    std::chrono::microseconds window() const { return last - first; }
};

struct VolumeSeries {
    std::chrono::microseconds bin_width{0};
    std::vector<VolumeBin> bins;     // contiguous from the first packet, empty bins included
    std::optional<GapStats> gaps;    // absent for a single packet
    std::vector<SourceBurst> bursts; // first-seen source order
    std::size_t packets = 0;

    const SourceBurst* burst_for(Ipv4Address source) const;
};

// Throws Error(EmptyCapture) for captures without records and
// Error(InvalidArgument) for a non-positive bin width.
VolumeSeries volume_series(const CaptureFile& capture, std::chrono::microseconds bin_width);

} // namespace primer
