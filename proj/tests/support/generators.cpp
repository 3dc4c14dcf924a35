#include "generators.hpp"

#include <algorithm>
#include <set>

namespace primer::gen {

Bytes Rng::bytes(std::size_t n)
{
    Bytes b(n);
    for (auto& x : b) {
        x = byte();
    }
    return b;
}

Ipv4Address random_address(Rng& rng)
{
    return Ipv4Address(static_cast<std::uint32_t>(rng.next()));
}

MacAddress random_mac(Rng& rng)
{
    std::array<std::uint8_t, 6> b{};
    for (auto& x : b) {
        x = rng.byte();
    }
    return MacAddress(b);
}

namespace {

Bytes random_options(Rng& rng, std::size_t max_words)
{
    const auto words = rng.below(max_words + 1);
    Bytes o(words * 4, 0x01);
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (rng.chance(0.5)) {
            o[i] = rng.byte();
        }
    }
    return o;
}

Ipv4Address draw_address(Rng& rng, const PacketShape& shape)
{
    return shape.addresses.empty() ? random_address(rng) : rng.pick(shape.addresses);
}

std::uint16_t draw_port(Rng& rng, const PacketShape& shape)
{
    return shape.ports.empty() ? static_cast<std::uint16_t>(rng.next()) : rng.pick(shape.ports);
}

} // namespace

ParsedPacket random_packet(Rng& rng, const PacketShape& shape)
{
    ParsedPacket p;
    if (shape.link == LinkType::Ethernet) {
        p.link = EthernetHeader{random_mac(rng), random_mac(rng), kEtherTypeIpv4};
    }
    p.ip.tos = rng.byte();
    p.ip.identification = static_cast<std::uint16_t>(rng.next());
    p.ip.flags = static_cast<std::uint8_t>(rng.chance(0.5) ? Ipv4Header::kDontFragment : 0);
    p.ip.ttl = rng.byte();
    p.ip.src_addr = draw_address(rng, shape);
    p.ip.dst_addr = draw_address(rng, shape);
    p.ip.options = random_options(rng, 10);

    switch (rng.below(4)) {
    case 0: {
        TcpHeader h;
        h.src_port = draw_port(rng, shape);
        h.dst_port = draw_port(rng, shape);
        h.seq = static_cast<std::uint32_t>(rng.next());
        h.ack = static_cast<std::uint32_t>(rng.next());
        h.flags = static_cast<std::uint16_t>(rng.next() & 0x0fff);
        h.window = static_cast<std::uint16_t>(rng.next());
        h.urgent = static_cast<std::uint16_t>(rng.next());
        h.options = random_options(rng, 10);
        p.ip.protocol = 6;
        p.transport = h;
        break;
    }
    case 1: {
        UdpHeader h;
        h.src_port = draw_port(rng, shape);
        h.dst_port = draw_port(rng, shape);
        p.ip.protocol = 17;
        p.transport = h;
        break;
    }
    case 2: {
        IcmpMessage m;
        m.type = rng.chance(0.5) ? IcmpMessage::kEchoRequest : rng.byte();
        m.code = rng.byte();
        m.rest = static_cast<std::uint32_t>(rng.next());
        p.ip.protocol = 1;
        p.transport = m;
        break;
    }
    default: {
        OpaqueProtocol o;
        o.protocol = rng.chance(0.5) ? 47 : 50;
        o.bytes = rng.bytes(rng.below(64));
        p.ip.protocol = o.protocol;
        p.transport = o;
        break;
    }
    }
    if (!std::holds_alternative<OpaqueProtocol>(p.transport)) {
        p.payload = rng.bytes(rng.below(shape.max_payload + 1));
    }
    finalize_lengths(p);
    recompute_checksums(p);
    if (p.link) {
        const std::size_t frame = kEthernetHeaderSize + p.ip.total_length;
        if (frame < 60) {
            p.trailer.assign(60 - frame, 0);
        } else if (rng.chance(0.1)) {
            p.trailer = rng.bytes(rng.between(1, 8));
        }
    }
    return p;
}

CaptureFile random_capture(Rng& rng, std::size_t max_records, const PacketShape& shape, bool allow_garbage)
{
    CaptureFile c;
    c.link_type = shape.link;
    const auto n = rng.below(max_records + 1);
    std::int64_t t = 1'600'000'000'000'000 + static_cast<std::int64_t>(rng.below(1'000'000'000));
    for (std::size_t i = 0; i < n; ++i) {
        t += static_cast<std::int64_t>(rng.below(3'000'000));
        Bytes frame;
        if (allow_garbage && rng.chance(0.05)) {
            frame = rng.bytes(rng.between(0, 12));
            if (shape.link == LinkType::Ethernet) {
                Bytes eth(12, 0);
                eth.push_back(0x08);
                eth.push_back(0x00);
                frame.insert(frame.begin(), eth.begin(), eth.end());
            }
            if (rng.chance(0.5)) {
                const std::size_t at = shape.link == LinkType::Ethernet ? 14 : 0;
                frame.resize(at + 40, 0);
                frame[at] = 0x60;
            }
        } else {
            frame = encode_packet(random_packet(rng, shape), Checksums::Preserve);
        }
        auto rec = PacketRecord::from_frame(Timestamp::from_micros(t), std::move(frame));
        if (rng.chance(0.1)) {
            rec.original_len += static_cast<std::uint32_t>(rng.below(100));
        }
        c.records.push_back(std::move(rec));
    }
    return c;
}

RewriteSpec random_rewrite(Rng& rng, const ParsedPacket& packet)
{
    RewriteSpec spec;
    std::set<Ipv4Address> ip_targets;
    auto map_ip = [&](Ipv4Address from) {
        if (spec.ip_map().count(from)) {
            return;
        }
        Ipv4Address to;
        do {
            to = random_address(rng);
        } while (ip_targets.count(to));
        ip_targets.insert(to);
        spec.map_ip(from, to);
    };
    if (rng.chance(0.8)) {
        map_ip(packet.ip.src_addr);
    }
    if (rng.chance(0.8)) {
        map_ip(packet.ip.dst_addr);
    }
    for (auto k = rng.below(3); k > 0; --k) {
        map_ip(random_address(rng));
    }

    for (auto proto : {IpProtocol::Tcp, IpProtocol::Udp}) {
        std::set<std::uint16_t> used;
        std::set<std::uint16_t> keys;
        std::vector<std::uint16_t> candidates;
        candidates.push_back(packet.src_port());
        candidates.push_back(packet.dst_port());
        candidates.push_back(static_cast<std::uint16_t>(rng.next()));
        for (auto from : candidates) {
            if (!rng.chance(0.6) || keys.count(from)) {
                continue;
            }
            std::uint16_t to;
            do {
                to = static_cast<std::uint16_t>(rng.next());
            } while (used.count(to));
            used.insert(to);
            keys.insert(from);
            spec.map_port(proto, from, to);
        }
    }

    if (packet.link && rng.chance(0.7)) {
        std::set<MacAddress> targets;
        for (auto from : {packet.link->src, packet.link->dst}) {
            if (spec.mac_map().count(from) || !rng.chance(0.7)) {
                continue;
            }
            MacAddress to;
            do {
                to = random_mac(rng);
            } while (targets.count(to));
            targets.insert(to);
            spec.map_mac(from, to);
        }
    }
    return spec;
}

} // namespace primer::gen
