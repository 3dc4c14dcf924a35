#include "primer/packet_codec.hpp"

#include "primer/error.hpp"
#include "wire.hpp"

namespace primer {

namespace {

using wire::be16;
using wire::be32;

constexpr std::size_t kMaxIpLength = 65535;

TcpHeader decode_tcp(ByteView seg, Bytes& payload)
{
    if (seg.size() < kTcpMinHeaderSize) {
        throw Error(ErrorCode::TruncatedHeader, "TCP header shorter than 20 bytes");
    }
    TcpHeader tcp;
    tcp.src_port = be16(seg, 0);
    tcp.dst_port = be16(seg, 2);
    tcp.seq = be32(seg, 4);
    tcp.ack = be32(seg, 8);
    tcp.data_offset = static_cast<std::uint8_t>(seg[12] >> 4);
    tcp.flags = static_cast<std::uint16_t>(((seg[12] & 0x0f) << 8) | seg[13]);
    tcp.window = be16(seg, 14);
    tcp.checksum = be16(seg, 16);
    tcp.urgent = be16(seg, 18);
    const auto hl = tcp.header_length();
    if (hl < kTcpMinHeaderSize || hl > seg.size()) {
        throw Error(ErrorCode::TruncatedHeader,
                    "TCP data offset " + std::to_string(tcp.data_offset) + " does not fit segment");
    }
    tcp.options.assign(seg.begin() + kTcpMinHeaderSize, seg.begin() + static_cast<long>(hl));
    payload.assign(seg.begin() + static_cast<long>(hl), seg.end());
    return tcp;
}

UdpHeader decode_udp(ByteView seg, Bytes& payload)
{
    if (seg.size() < kUdpHeaderSize) {
        throw Error(ErrorCode::TruncatedHeader, "UDP header shorter than 8 bytes");
    }
    UdpHeader udp{be16(seg, 0), be16(seg, 2), be16(seg, 4), be16(seg, 6)};
    payload.assign(seg.begin() + kUdpHeaderSize, seg.end());
    return udp;
}

IcmpMessage decode_icmp(ByteView seg, Bytes& payload)
{
    if (seg.size() < kIcmpHeaderSize) {
        throw Error(ErrorCode::TruncatedHeader, "ICMP message shorter than 8 bytes");
    }
    IcmpMessage icmp{seg[0], seg[1], be16(seg, 2), be32(seg, 4)};
    payload.assign(seg.begin() + kIcmpHeaderSize, seg.end());
    return icmp;
}

void put_ip_header(const Ipv4Header& ip, std::uint16_t checksum, Bytes& out)
{
    wire::put8(out, static_cast<std::uint8_t>((ip.version << 4) | (ip.ihl & 0x0f)));
    wire::put8(out, ip.tos);
    wire::put16(out, ip.total_length);
    wire::put16(out, ip.identification);
    wire::put16(out, static_cast<std::uint16_t>(((ip.flags & 0x7) << 13) |
                                                (ip.fragment_offset & 0x1fff)));
    wire::put8(out, ip.ttl);
    wire::put8(out, ip.protocol);
    wire::put16(out, checksum);
    wire::put32(out, ip.src_addr.value());
    wire::put32(out, ip.dst_addr.value());
    wire::append(out, ip.options);
}

// Transport header bytes (checksum field taken from the header itself).
void put_transport_header(const TransportLayer& layer, Bytes& out)
{
    std::visit(
        [&out](const auto& h) {
            using T = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<T, TcpHeader>) {
                wire::put16(out, h.src_port);
                wire::put16(out, h.dst_port);
                wire::put32(out, h.seq);
                wire::put32(out, h.ack);
                wire::put16(out, static_cast<std::uint16_t>(((h.data_offset & 0x0f) << 12) |
                                                            (h.flags & 0x0fff)));
                wire::put16(out, h.window);
                wire::put16(out, h.checksum);
                wire::put16(out, h.urgent);
                wire::append(out, h.options);
            } else if constexpr (std::is_same_v<T, UdpHeader>) {
                wire::put16(out, h.src_port);
                wire::put16(out, h.dst_port);
                wire::put16(out, h.length);
                wire::put16(out, h.checksum);
            } else if constexpr (std::is_same_v<T, IcmpMessage>) {
                wire::put8(out, h.type);
                wire::put8(out, h.code);
                wire::put16(out, h.checksum);
                wire::put32(out, h.rest);
            } else {
                wire::append(out, h.bytes);
            }
        },
        layer);
}

std::size_t transport_header_size(const TransportLayer& layer)
{
    return std::visit(
        [](const auto& h) -> std::size_t {
            using T = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<T, TcpHeader>) {
                return kTcpMinHeaderSize + h.options.size();
            } else if constexpr (std::is_same_v<T, UdpHeader>) {
                return kUdpHeaderSize;
            } else if constexpr (std::is_same_v<T, IcmpMessage>) {
                return kIcmpHeaderSize;
            } else {
                return h.bytes.size();
            }
        },
        layer);
}

std::uint8_t transport_protocol(const TransportLayer& layer)
{
    return std::visit(
        [](const auto& h) -> std::uint8_t {
            using T = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<T, TcpHeader>) {
                return static_cast<std::uint8_t>(IpProtocol::Tcp);
            } else if constexpr (std::is_same_v<T, UdpHeader>) {
                return static_cast<std::uint8_t>(IpProtocol::Udp);
            } else if constexpr (std::is_same_v<T, IcmpMessage>) {
                return static_cast<std::uint8_t>(IpProtocol::Icmp);
            } else {
                return h.protocol;
            }
        },
        layer);
}

void add_pseudo_header(ChecksumAccumulator& acc, const Ipv4Header& ip, std::uint8_t protocol,
                       std::uint16_t length)
{
    acc.add_u32(ip.src_addr.value());
    acc.add_u32(ip.dst_addr.value());
    acc.add_u16(protocol);
    acc.add_u16(length);
}

// Sum over transport header + payload with the header's checksum field as stored.
std::uint16_t transport_folded_sum(const ParsedPacket& p, std::uint16_t pseudo_length)
{
    Bytes segment;
    put_transport_header(p.transport, segment);
    ChecksumAccumulator acc;
    if (p.tcp() || p.udp()) {
        add_pseudo_header(acc, p.ip, transport_protocol(p.transport), pseudo_length);
    }
    acc.add(segment);
    acc.add(p.payload);
    return acc.folded_sum();
}

std::uint16_t segment_length(const ParsedPacket& p)
{
    return static_cast<std::uint16_t>(transport_header_size(p.transport) + p.payload.size());
}

std::uint16_t udp_pseudo_length(const ParsedPacket& p)
{
    return p.udp()->length;
}

void check_encodable(const ParsedPacket& p)
{
    const std::size_t ip_hl = kIpv4MinHeaderSize + p.ip.options.size();
    const std::size_t total = ip_hl + transport_header_size(p.transport) + p.payload.size();
    if (total > kMaxIpLength) {
        throw Error(ErrorCode::LengthOverflow,
                    "IPv4 datagram of " + std::to_string(total) + " bytes exceeds 65535");
    }
    if (p.ip.options.size() % 4 != 0 || ip_hl > 60 || p.ip.header_length() != ip_hl) {
        throw Error(ErrorCode::InvariantViolation, "IPv4 ihl does not match options length");
    }
    if (p.ip.total_length != total) {
        throw Error(ErrorCode::InvariantViolation,
                    "ip.total_length " + std::to_string(p.ip.total_length) +
                        " does not match contents (" + std::to_string(total) + ")");
    }
    if (const auto* tcp = p.tcp()) {
        if (tcp->options.size() % 4 != 0 ||
            tcp->header_length() != kTcpMinHeaderSize + tcp->options.size()) {
            throw Error(ErrorCode::InvariantViolation, "TCP data offset does not match options");
        }
    }
    if (p.ip.protocol != transport_protocol(p.transport)) {
        throw Error(ErrorCode::InvariantViolation, "ip.protocol does not match transport layer");
    }
}

} // namespace

std::uint16_t ParsedPacket::src_port() const
{
    if (const auto* t = tcp()) {
        return t->src_port;
    }
    if (const auto* u = udp()) {
        return u->src_port;
    }
    return 0;
}

std::uint16_t ParsedPacket::dst_port() const
{
    if (const auto* t = tcp()) {
        return t->dst_port;
    }
    if (const auto* u = udp()) {
        return u->dst_port;
    }
    return 0;
}

ParsedPacket decode_frame(ByteView frame, LinkType link_type)
{
    ParsedPacket p;
    ByteView ip_bytes = frame;
    if (link_type == LinkType::Ethernet) {
        if (frame.size() < kEthernetHeaderSize) {
            throw Error(ErrorCode::TruncatedHeader, "Ethernet header shorter than 14 bytes");
        }
        EthernetHeader eth;
        std::array<std::uint8_t, 6> mac{};
        std::copy_n(frame.begin(), 6, mac.begin());
        eth.dst = MacAddress(mac);
        std::copy_n(frame.begin() + 6, 6, mac.begin());
        eth.src = MacAddress(mac);
        eth.ethertype = be16(frame, 12);
        if (eth.ethertype != kEtherTypeIpv4) {
            throw Error(ErrorCode::NotIPv4, "ethertype " + std::to_string(eth.ethertype));
        }
        p.link = eth;
        ip_bytes = frame.subspan(kEthernetHeaderSize);
    }

    if (ip_bytes.empty()) {
        throw Error(ErrorCode::TruncatedHeader, "no IP header");
    }
    if ((ip_bytes[0] >> 4) != 4) {
        throw Error(ErrorCode::NotIPv4, "IP version " + std::to_string(ip_bytes[0] >> 4));
    }
    if (ip_bytes.size() < kIpv4MinHeaderSize) {
        throw Error(ErrorCode::TruncatedHeader, "IPv4 header shorter than 20 bytes");
    }
    auto& ip = p.ip;
    ip.version = 4;
    ip.ihl = ip_bytes[0] & 0x0f;
    ip.tos = ip_bytes[1];
    ip.total_length = be16(ip_bytes, 2);
    ip.identification = be16(ip_bytes, 4);
    const auto frag = be16(ip_bytes, 6);
    ip.flags = static_cast<std::uint8_t>(frag >> 13);
    ip.fragment_offset = frag & 0x1fff;
    ip.ttl = ip_bytes[8];
    ip.protocol = ip_bytes[9];
    ip.header_checksum = be16(ip_bytes, 10);
    ip.src_addr = Ipv4Address(be32(ip_bytes, 12));
    ip.dst_addr = Ipv4Address(be32(ip_bytes, 16));

    const auto hl = ip.header_length();
    if (hl < kIpv4MinHeaderSize || hl > ip_bytes.size()) {
        throw Error(ErrorCode::TruncatedHeader, "IPv4 ihl " + std::to_string(ip.ihl) + " invalid");
    }
    if (ip.total_length < hl || ip.total_length > ip_bytes.size()) {
        throw Error(ErrorCode::TruncatedHeader,
                    "IPv4 total_length " + std::to_string(ip.total_length) + " but " +
                        std::to_string(ip_bytes.size()) + " bytes captured");
    }
    if ((ip.flags & Ipv4Header::kMoreFragments) != 0 || ip.fragment_offset != 0) {
        throw Error(ErrorCode::FragmentedPacket,
                    "IPv4 fragment (offset " + std::to_string(ip.fragment_offset) + ")");
    }
    ip.options.assign(ip_bytes.begin() + kIpv4MinHeaderSize,
                      ip_bytes.begin() + static_cast<long>(hl));

    const auto segment = ip_bytes.subspan(hl, ip.total_length - hl);
    switch (ip.protocol) {
    case static_cast<std::uint8_t>(IpProtocol::Tcp):
        p.transport = decode_tcp(segment, p.payload);
        break;
    case static_cast<std::uint8_t>(IpProtocol::Udp):
        p.transport = decode_udp(segment, p.payload);
        break;
    case static_cast<std::uint8_t>(IpProtocol::Icmp):
        p.transport = decode_icmp(segment, p.payload);
        break;
    default:
        p.transport = OpaqueProtocol{ip.protocol, Bytes(segment.begin(), segment.end())};
        break;
    }
    auto rest = ip_bytes.subspan(ip.total_length);
    p.trailer.assign(rest.begin(), rest.end());
    return p;
}

ParsedPacket decode_packet(const PacketRecord& record, LinkType link_type)
{
    return decode_frame(record.data, link_type);
}

void recompute_checksums(ParsedPacket& p)
{
    {
        Bytes header;
        put_ip_header(p.ip, 0, header);
        p.ip.header_checksum = ones_complement_checksum(header).value;
    }
    if (auto* tcp = p.tcp()) {
        tcp->checksum = 0;
        tcp->checksum = static_cast<std::uint16_t>(~transport_folded_sum(p, segment_length(p)));
    } else if (auto* udp = p.udp()) {
        udp->checksum = 0;
        auto sum = static_cast<std::uint16_t>(~transport_folded_sum(p, udp_pseudo_length(p)));
        // A computed zero is sent as all ones; zero means "no checksum".
        p.udp()->checksum = (sum == 0) ? 0xffff : sum;
    } else if (auto* icmp = std::get_if<IcmpMessage>(&p.transport)) {
        icmp->checksum = 0;
        icmp->checksum = static_cast<std::uint16_t>(~transport_folded_sum(p, 0));
    }
}

void finalize_lengths(ParsedPacket& p)
{
    if (auto* tcp = p.tcp()) {
        tcp->data_offset = static_cast<std::uint8_t>((kTcpMinHeaderSize + tcp->options.size()) / 4);
    }
    const std::size_t segment = transport_header_size(p.transport) + p.payload.size();
    if (auto* udp = p.udp()) {
        udp->length = static_cast<std::uint16_t>(segment);
    }
    const std::size_t ip_hl = kIpv4MinHeaderSize + p.ip.options.size();
    const std::size_t total = ip_hl + segment;
    if (total > kMaxIpLength) {
        throw Error(ErrorCode::LengthOverflow,
                    "IPv4 datagram of " + std::to_string(total) + " bytes exceeds 65535");
    }
    p.ip.ihl = static_cast<std::uint8_t>(ip_hl / 4);
    p.ip.total_length = static_cast<std::uint16_t>(total);
    p.ip.protocol = transport_protocol(p.transport);
}

Bytes encode_ip_datagram(const ParsedPacket& packet, Checksums mode)
{
    check_encodable(packet);
    const ParsedPacket* p = &packet;
    ParsedPacket recomputed;
    if (mode == Checksums::Recompute) {
        recomputed = packet;
        recompute_checksums(recomputed);
        p = &recomputed;
    }
    Bytes out;
    out.reserve(p->ip.total_length);
    put_ip_header(p->ip, p->ip.header_checksum, out);
    put_transport_header(p->transport, out);
    wire::append(out, p->payload);
    return out;
}

Bytes encode_packet(const ParsedPacket& packet, Checksums mode)
{
    Bytes out;
    if (packet.link) {
        out.insert(out.end(), packet.link->dst.bytes().begin(), packet.link->dst.bytes().end());
        out.insert(out.end(), packet.link->src.bytes().begin(), packet.link->src.bytes().end());
        wire::put16(out, packet.link->ethertype);
    }
    wire::append(out, encode_ip_datagram(packet, mode));
    wire::append(out, packet.trailer);
    return out;
}

ChecksumReport verify_checksums(const ParsedPacket& p)
{
    ChecksumReport report;
    {
        Bytes header;
        put_ip_header(p.ip, p.ip.header_checksum, header);
        report.ip = checksum_verifies(header) ? ChecksumStatus::Valid : ChecksumStatus::Invalid;
    }
    auto status = [](std::uint16_t folded) {
        return folded == 0xffff ? ChecksumStatus::Valid : ChecksumStatus::Invalid;
    };
    if (p.tcp()) {
        report.transport = status(transport_folded_sum(p, segment_length(p)));
    } else if (const auto* udp = p.udp()) {
        report.transport = udp->checksum == 0 ? ChecksumStatus::NotPresent
                                              : status(transport_folded_sum(p, udp->length));
    } else if (p.icmp()) {
        report.icmp = status(transport_folded_sum(p, 0));
    }
    return report;
}

} // namespace primer
