#include "oracles.hpp"

#include <algorithm>

namespace primer::oracle {

std::uint16_t internet_checksum(const std::vector<std::uint8_t>& data)
{
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i < data.size(); i += 2) {
        std::uint32_t word = static_cast<std::uint32_t>(data[i]) << 8;
        if (i + 1 < data.size()) {
            word |= data[i + 1];
        }
        sum += word;
        if (sum > 0xffff) {
            sum = (sum & 0xffff) + 1;
        }
    }
    return static_cast<std::uint16_t>(~sum & 0xffff);
}

std::uint16_t udp_checksum_raw(std::uint32_t src, std::uint32_t dst, const std::vector<std::uint8_t>& udp)
{
    std::vector<std::uint8_t> buf;
    for (int s = 24; s >= 0; s -= 8) {
        buf.push_back(static_cast<std::uint8_t>(src >> s));
    }
    for (int s = 24; s >= 0; s -= 8) {
        buf.push_back(static_cast<std::uint8_t>(dst >> s));
    }
    buf.push_back(0);
    buf.push_back(17);
    buf.push_back(static_cast<std::uint8_t>(udp.size() >> 8));
    buf.push_back(static_cast<std::uint8_t>(udp.size()));
    buf.insert(buf.end(), udp.begin(), udp.end());
    buf[12 + 6] = 0;
    buf[12 + 7] = 0;
    return internet_checksum(buf);
}

namespace {

std::uint32_t load32(const std::vector<std::uint8_t>& b, std::size_t at)
{
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
           (std::uint32_t{b[at + 2]} << 8) | b[at + 3];
}

std::uint16_t load16(const std::vector<std::uint8_t>& b, std::size_t at)
{
    return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

} // namespace

NaiveTable naive_conversations(const CaptureFile& capture, bool by_address, bool bidirectional)
{
    NaiveTable t;
    const std::size_t base = capture.link_type == LinkType::Ethernet ? 14 : 0;
    for (const auto& rec : capture.records) {
        const auto& d = rec.data;
        if (d.size() < base + 20 || (d[base] >> 4) != 4) {
            ++t.undecodable;
            continue;
        }
        const std::size_t ihl = (d[base] & 0x0f) * 4u;
        const std::uint8_t proto = d[base + 9];
        Ipv4Address src(load32(d, base + 12));
        Ipv4Address dst(load32(d, base + 16));
        std::uint16_t sport = 0;
        std::uint16_t dport = 0;
        if (proto == 6 || proto == 17) {
            sport = load16(d, base + ihl);
            dport = load16(d, base + ihl + 2);
        }
        bool found = false;
        for (auto& row : t.rows) {
            const bool fwd = row.addr_a == src && row.port_a == sport && row.addr_b == dst &&
                             row.port_b == dport;
            const bool rev = bidirectional && row.addr_a == dst && row.port_a == dport &&
                             row.addr_b == src && row.port_b == sport;
            if (fwd || rev) {
                row.packets += 1;
                row.bytes += rec.original_len;
                found = true;
                break;
            }
        }
        if (!found) {
            t.rows.push_back(ConversationStats{src, sport, dst, dport, 1, rec.original_len});
        }
    }
    if (by_address) {
        std::stable_sort(t.rows.begin(), t.rows.end(), [](const auto& x, const auto& y) {
            if (x.addr_a != y.addr_a) {
                return x.addr_a < y.addr_a;
            }
            return x.addr_b < y.addr_b;
        });
    }
    return t;
}

std::set<std::size_t> rewrite_positions(const ParsedPacket& p)
{
    std::set<std::size_t> pos;
    std::size_t base = 0;
    if (p.link) {
        for (std::size_t i = 0; i < 12; ++i) {
            pos.insert(i);
        }
        base = kEthernetHeaderSize;
    }
    for (std::size_t i : {10, 11}) {
        pos.insert(base + i);
    }
    for (std::size_t i = 12; i < 20; ++i) {
        pos.insert(base + i);
    }
    const std::size_t t = base + p.ip.header_length();
    if (p.tcp()) {
        for (std::size_t i : {0, 1, 2, 3, 16, 17}) {
            pos.insert(t + i);
        }
    } else if (p.udp()) {
        for (std::size_t i : {0, 1, 2, 3, 6, 7}) {
            pos.insert(t + i);
        }
    } else if (p.icmp()) {
        for (std::size_t i : {2, 3}) {
            pos.insert(t + i);
        }
    }
    return pos;
}

} // namespace primer::oracle
