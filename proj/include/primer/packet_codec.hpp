#pragma once

#include "primer/capture_io.hpp"
#include "primer/checksum.hpp"
#include "primer/net_types.hpp"

#include <cstdint>
#include <optional>
#include <variant>

namespace primer {

inline constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
inline constexpr std::size_t kEthernetHeaderSize = 14;
inline constexpr std::size_t kIpv4MinHeaderSize = 20;
inline constexpr std::size_t kTcpMinHeaderSize = 20;
inline constexpr std::size_t kUdpHeaderSize = 8;
inline constexpr std::size_t kIcmpHeaderSize = 8;

struct EthernetHeader {
    MacAddress dst;
    MacAddress src;
    std::uint16_t ethertype = kEtherTypeIpv4;

    bool operator==(const EthernetHeader&) const = default;
};

struct Ipv4Header {
    std::uint8_t version = 4;
    std::uint8_t ihl = 5; // 32-bit words
    std::uint8_t tos = 0;
    std::uint16_t total_length = 0;
    std::uint16_t identification = 0;
    std::uint8_t flags = 0; // 3 bits: reserved, DF, MF
    std::uint16_t fragment_offset = 0;
    std::uint8_t ttl = 64;
    std::uint8_t protocol = 0;
    std::uint16_t header_checksum = 0;
    Ipv4Address src_addr;
    Ipv4Address dst_addr;
    Bytes options;

    static constexpr std::uint8_t kDontFragment = 0x2;
    static constexpr std::uint8_t kMoreFragments = 0x1;

    std::size_t header_length() const { return std::size_t{ihl} * 4; }
    bool operator==(const Ipv4Header&) const = default;
};

struct TcpHeader {
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint32_t seq = 0;
    std::uint32_t ack = 0;
    std::uint8_t data_offset = 5; // 32-bit words
    std::uint16_t flags = 0;      // low 12 bits: reserved + NS + CWR..FIN
    std::uint16_t window = 0;
    std::uint16_t checksum = 0;
    std::uint16_t urgent = 0;
    Bytes options;

    static constexpr std::uint16_t kFin = 0x001;
    static constexpr std::uint16_t kSyn = 0x002;
    static constexpr std::uint16_t kRst = 0x004;
    static constexpr std::uint16_t kPsh = 0x008;
    static constexpr std::uint16_t kAck = 0x010;
    static constexpr std::uint16_t kUrg = 0x020;

    bool has(std::uint16_t flag) const { return (flags & flag) != 0; }
    std::size_t header_length() const { return std::size_t{data_offset} * 4; }
    bool operator==(const TcpHeader&) const = default;
};

struct UdpHeader {
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint16_t length = 0;
    std::uint16_t checksum = 0;

    bool operator==(const UdpHeader&) const = default;
};

struct IcmpMessage {
    std::uint8_t type = 0;
    std::uint8_t code = 0;
    std::uint16_t checksum = 0;
    std::uint32_t rest = 0; // identifier/sequence, gateway, or unused word

    static constexpr std::uint8_t kEchoReply = 0;
    static constexpr std::uint8_t kDestUnreachable = 3;
    static constexpr std::uint8_t kEchoRequest = 8;

    bool operator==(const IcmpMessage&) const = default;
};

// Any other IP protocol; everything after the IP header, kept verbatim.
struct OpaqueProtocol {
    std::uint8_t protocol = 0;
    Bytes bytes;

    bool operator==(const OpaqueProtocol&) const = default;
};

using TransportLayer = std::variant<TcpHeader, UdpHeader, IcmpMessage, OpaqueProtocol>;

struct ParsedPacket {
    std::optional<EthernetHeader> link;
    Ipv4Header ip;
    TransportLayer transport = OpaqueProtocol{};
    Bytes payload;
    // Link-layer bytes past ip.total_length (Ethernet minimum-frame padding).
    Bytes trailer;

    const TcpHeader* tcp() const { return std::get_if<TcpHeader>(&transport); }
    TcpHeader* tcp() { return std::get_if<TcpHeader>(&transport); }
    const UdpHeader* udp() const { return std::get_if<UdpHeader>(&transport); }
    UdpHeader* udp() { return std::get_if<UdpHeader>(&transport); }
    const IcmpMessage* icmp() const { return std::get_if<IcmpMessage>(&transport); }

    // 0 for portless protocols.
    std::uint16_t src_port() const;
    std::uint16_t dst_port() const;

    bool operator==(const ParsedPacket&) const = default;
};

ParsedPacket decode_frame(ByteView frame, LinkType link_type);
ParsedPacket decode_packet(const PacketRecord& record, LinkType link_type);

enum class Checksums {
    Preserve,
    Recompute,
};

Bytes encode_packet(const ParsedPacket& packet, Checksums mode);
// IP datagram only: no link header, no trailer.
Bytes encode_ip_datagram(const ParsedPacket& packet, Checksums mode);

// Fill every checksum field from the current contents. Lengths are untouched.
void recompute_checksums(ParsedPacket& packet);

// Set ip.ihl, ip.total_length, tcp.data_offset and udp.length from the
// contents; for packets assembled by hand.
void finalize_lengths(ParsedPacket& packet);

enum class ChecksumStatus {
    Valid,
    Invalid,
    NotPresent,    // UDP checksum field of zero
    NotApplicable, // layer absent
};

struct ChecksumReport {
    ChecksumStatus ip = ChecksumStatus::NotApplicable;
    ChecksumStatus transport = ChecksumStatus::NotApplicable; // TCP / UDP
    ChecksumStatus icmp = ChecksumStatus::NotApplicable;

    bool all_valid() const
    {
        return ip != ChecksumStatus::Invalid && transport != ChecksumStatus::Invalid &&
               icmp != ChecksumStatus::Invalid;
    }
};

ChecksumReport verify_checksums(const ParsedPacket& packet);

} // namespace primer
