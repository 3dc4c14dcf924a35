#include "primer/fixtures.hpp"

#include "primer/error.hpp"
#include "primer/mock_honeypot.hpp"
#include "primer/packet_codec.hpp"
#include "primer/report.hpp"

#include <fstream>
#include <map>
#include <numeric>
#include <random>

namespace primer::fixtures {

namespace {

// Raw mt19937 output is portable; the std distributions are not.
class Rng {
public:
    explicit Rng(std::uint32_t seed) : engine_(seed) {}

    std::uint32_t next() { return engine_(); }
    std::uint32_t between(std::uint32_t lo, std::uint32_t hi) { return lo + next() % (hi - lo + 1); }
    Bytes bytes(std::size_t n)
    {
        Bytes b(n);
        for (auto& x : b) {
            x = static_cast<std::uint8_t>(next() >> 24);
        }
        return b;
    }

private:
    std::mt19937 engine_;
};

MacAddress mac_for(Ipv4Address addr)
{
    auto o = addr.octets();
    return MacAddress({0x02, 0x00, o[0], o[1], o[2], o[3]});
}

struct FrameBuilder {
    Rng& rng;
    std::map<Ipv4Address, MacAddress> macs;

    MacAddress mac(Ipv4Address addr) const
    {
        auto it = macs.find(addr);
        return it == macs.end() ? mac_for(addr) : it->second;
    }

    PacketRecord tcp(Timestamp at, Endpoint src, Endpoint dst, std::uint16_t flags, std::uint32_t seq,
                     std::uint32_t ack, Bytes options, Bytes payload, std::size_t frame_size,
                     std::uint8_t ttl = 64)
    {
        ParsedPacket p;
        p.ip.protocol = static_cast<std::uint8_t>(IpProtocol::Tcp);
        TcpHeader h;
        h.src_port = src.port;
        h.dst_port = dst.port;
        h.seq = seq;
        h.ack = ack;
        h.flags = flags;
        h.window = (flags & TcpHeader::kSyn) ? 64240 : 502;
        h.options = std::move(options);
        p.transport = h;
        p.payload = std::move(payload);
        return finish(at, src.addr, dst.addr, ttl, std::move(p), frame_size);
    }

    PacketRecord icmp(Timestamp at, Ipv4Address src, Ipv4Address dst, std::uint8_t type,
                      std::uint32_t rest, Bytes payload)
    {
        ParsedPacket p;
        p.ip.protocol = static_cast<std::uint8_t>(IpProtocol::Icmp);
        IcmpMessage m;
        m.type = type;
        m.rest = rest;
        p.transport = m;
        p.payload = std::move(payload);
        return finish(at, src, dst, 64, std::move(p), 0);
    }

    PacketRecord finish(Timestamp at, Ipv4Address src, Ipv4Address dst, std::uint8_t ttl,
                        ParsedPacket p, std::size_t frame_size)
    {
        p.link = EthernetHeader{mac(dst), mac(src), kEtherTypeIpv4};
        p.ip.src_addr = src;
        p.ip.dst_addr = dst;
        p.ip.ttl = ttl;
        p.ip.identification = static_cast<std::uint16_t>(rng.next());
        if (p.tcp()) {
            p.ip.flags = Ipv4Header::kDontFragment;
        }
        finalize_lengths(p);
        recompute_checksums(p);
        auto frame = encode_packet(p, Checksums::Preserve);
        if (frame_size != 0) {
            if (frame.size() > frame_size) {
                throw Error(ErrorCode::InvariantViolation, "fixture frame exceeds its declared size");
            }
            frame.resize(frame_size, 0);
        }
        return PacketRecord::from_frame(at, std::move(frame));
    }
};

// MSS, NOP, window scale, NOP, NOP, SACK permitted.
Bytes syn_options_12()
{
    return {0x02, 0x04, 0x05, 0xb4, 0x01, 0x03, 0x03, 0x08, 0x01, 0x01, 0x04, 0x02};
}

// MSS, NOP, NOP, SACK permitted.
Bytes syn_options_8()
{
    return {0x02, 0x04, 0x05, 0xb4, 0x01, 0x01, 0x04, 0x02};
}

// MSS, SACK permitted, timestamps, NOP, window scale.
Bytes syn_options_20(std::uint32_t tsval)
{
    Bytes o{0x02, 0x04, 0x05, 0xb4, 0x04, 0x02, 0x08, 0x0a};
    for (int shift = 24; shift >= 0; shift -= 8) {
        o.push_back(static_cast<std::uint8_t>(tsval >> shift));
    }
    o.insert(o.end(), {0, 0, 0, 0, 0x01, 0x03, 0x03, 0x07});
    return o;
}

Timestamp advance(Timestamp t, std::int64_t micros)
{
    return Timestamp::from_micros(t.micros() + micros);
}

struct InternetRow {
    const char* source;
    std::uint16_t sport;
    std::uint16_t dport;
};

constexpr InternetRow kInternetRows[] = {
    {"14.192.212.211", 51018, 445}, {"31.124.112.163", 49990, 23},
    {"31.168.191.243", 58564, 81},  {"45.67.14.21", 35966, 22},
    {"45.129.33.60", 42272, 30690}, {"45.129.33.60", 42272, 16390},
    {"45.129.33.122", 41118, 5957}, {"45.145.66.90", 49652, 2223},
    {"45.146.164.169", 59843, 3393}, {"45.146.164.169", 59843, 75},
    {"45.146.165.250", 59757, 5097}, {"46.161.27.48", 43277, 23389},
    {"51.161.12.231", 32767, 8545}, {"59.126.89.160", 30579, 8080},
};

// Row index of each packet in arrival order.
constexpr int kInternetOrder[] = {13, 0, 7, 3, 1, 8, 0, 11, 4, 2, 9, 3, 5, 12, 0, 10, 6};

// Lab hosts keep their MACs whatever addresses they are given.
std::map<Ipv4Address, MacAddress> role_macs(Ipv4Address attacker, Ipv4Address target)
{
    return {{attacker, MacAddress({0x02, 0x00, 0x00, 0x00, 0x00, 0x05})},
            {target, MacAddress({0x02, 0x00, 0x00, 0x00, 0x00, 0x07})}};
}

CaptureFile ethernet_capture()
{
    CaptureFile c;
    c.link_type = LinkType::Ethernet;
    return c;
}

} // namespace

std::vector<ConversationStats> internet_trial_rows()
{
    std::vector<ConversationStats> rows;
    for (const auto& r : kInternetRows) {
        ConversationStats s;
        s.addr_a = Ipv4Address::from_string(r.source);
        s.port_a = r.sport;
        s.addr_b = kInternetTarget;
        s.port_b = r.dport;
        s.packets = 1;
        s.bytes = 60;
        rows.push_back(s);
    }
    rows[0].packets = 3;
    rows[0].bytes = 66 + 66 + 62;
    rows[3].packets = 2;
    rows[3].bytes = 60 + 54;
    return rows;
}

CaptureFile internet_trial()
{
    Rng rng(0x1f01);
    FrameBuilder fb{rng, {}};
    auto c = ethernet_capture();
    Timestamp at{1591012800, 0};
    int seen[std::size(kInternetRows)] = {};
    for (std::size_t i = 0; i < std::size(kInternetOrder); ++i) {
        if (i != 0) {
            at = advance(at, std::int64_t{rng.between(30'000'000, 50'000'000)});
        }
        const int row = kInternetOrder[i];
        const auto& r = kInternetRows[row];
        const int nth = seen[row]++;
        Endpoint src{Ipv4Address::from_string(r.source), r.sport};
        Endpoint dst{kInternetTarget, r.dport};
        const auto ttl = static_cast<std::uint8_t>(rng.between(40, 240));
        const auto seq = rng.next();
        if (row == 0) {
            auto options = nth < 2 ? syn_options_12() : syn_options_8();
            c.records.push_back(fb.tcp(at, src, dst, TcpHeader::kSyn, seq, 0, options, {}, 0, ttl));
        } else if (row == 3 && nth == 1) {
            c.records.push_back(fb.tcp(at, src, dst, TcpHeader::kRst, seq, 0, {}, {}, 0, ttl));
        } else {
            c.records.push_back(fb.tcp(at, src, dst, TcpHeader::kSyn, seq, 0, {}, {}, 60, ttl));
        }
    }
    return c;
}

CaptureFile telnet_keyid(Ipv4Address attacker, Ipv4Address target)
{
    Rng rng(0x1f02);
    FrameBuilder fb{rng, role_macs(attacker, target)};
    auto c = ethernet_capture();
    Timestamp at{1591020000, 125000};
    auto step = [&] { at = advance(at, std::int64_t{rng.between(5'000, 60'000)}); };

    Endpoint ssh_client{attacker, 52234};
    Endpoint ssh_server{target, 22};
    std::uint32_t cs = rng.next();
    std::uint32_t ss = rng.next();
    c.records.push_back(fb.tcp(at, ssh_client, ssh_server, TcpHeader::kSyn, cs, 0, {}, {}, 0));
    step();
    c.records.push_back(fb.tcp(at, ssh_server, ssh_client, TcpHeader::kSyn | TcpHeader::kAck, ss,
                               cs + 1, {}, {}, 60));
    step();
    c.records.push_back(fb.tcp(at, ssh_client, ssh_server, TcpHeader::kFin | TcpHeader::kAck, cs + 1,
                               ss + 1, {}, {}, 0));
    step();
    c.records.push_back(fb.tcp(at, ssh_server, ssh_client, TcpHeader::kFin | TcpHeader::kAck, ss + 1,
                               cs + 2, {}, {}, 60));

    // IAC option negotiation, three commands per segment.
    const Bytes client_msgs[] = {
        {0xff, 0xfd, 0x03, 0xff, 0xfb, 0x18}, {0xff, 0xfb, 0x1f, 0xff, 0xfb, 0x20},
        {0xff, 0xfb, 0x21, 0xff, 0xfb, 0x22}, {0xff, 0xfb, 0x27, 0xff, 0xfd, 0x05},
        {0xff, 0xfb, 0x26, 0xff, 0xfd, 0x26}, {0xff, 0xfc, 0x23, 0xff, 0xfd, 0x01},
    };
    const Bytes server_msgs[] = {
        {0xff, 0xfb, 0x03, 0xff, 0xfd, 0x18}, {0xff, 0xfe, 0x1f, 0xff, 0xfe, 0x20},
        {0xff, 0xfe, 0x21, 0xff, 0xfe, 0x22}, {0xff, 0xfc, 0x27, 0xff, 0xfb, 0x01},
        to_bytes("login: "),
    };
    Endpoint tn_client{attacker, 41085};
    Endpoint tn_server{target, 23};
    cs = rng.next();
    ss = rng.next();
    for (int i = 0; i < 6; ++i) {
        step();
        const auto& out = client_msgs[i];
        c.records.push_back(fb.tcp(at, tn_client, tn_server, TcpHeader::kPsh | TcpHeader::kAck, cs, ss,
                                   {}, out, 0));
        cs += static_cast<std::uint32_t>(out.size());
        if (i < 5) {
            step();
            const auto& in = server_msgs[i];
            c.records.push_back(fb.tcp(at, tn_server, tn_client, TcpHeader::kPsh | TcpHeader::kAck, ss,
                                       cs, {}, in, 0));
            ss += static_cast<std::uint32_t>(in.size());
        }
    }

    Endpoint stray{attacker, 43691};
    Endpoint closed{target, 12235};
    const auto seq = rng.next();
    auto tsval = rng.next();
    for (int i = 0; i < 3; ++i) {
        step();
        c.records.push_back(fb.tcp(at, stray, closed, TcpHeader::kSyn, seq, 0, syn_options_20(tsval), {}, 0));
        tsval += 1000u << i;
    }
    return c;
}

CaptureFile ssh_session(Ipv4Address attacker, Ipv4Address target)
{
    Rng rng(0x1f03);
    FrameBuilder fb{rng, role_macs(attacker, target)};
    auto c = ethernet_capture();

    constexpr std::size_t kClientPayload = 2939 - 13 * 54;
    constexpr std::size_t kServerPayload = 2347 - 13 * 54;
    std::vector<Bytes> client{to_bytes("SSH-2.0-OpenSSH_8.2p1 Ubuntu-4ubuntu0.1\r\n")};
    std::vector<Bytes> server{to_bytes("SSH-2.0-OpenSSH_6.0p1 Debian-4+deb7u2\r\n")};
    const std::size_t client_sizes[] = {1080, 48, 16, 44, 68, 52, 100, 84, 116, 68, 52};
    const std::size_t server_sizes[] = {680, 300, 16, 44, 52, 84, 52, 100, 68, 52, 36};

    // Binary packets: length, padding length, message code, opaque body.
    auto packet = [&](std::size_t size, std::uint8_t code) {
        Bytes b = rng.bytes(size);
        const auto len = static_cast<std::uint32_t>(size - 4);
        b[0] = static_cast<std::uint8_t>(len >> 24);
        b[1] = static_cast<std::uint8_t>(len >> 16);
        b[2] = static_cast<std::uint8_t>(len >> 8);
        b[3] = static_cast<std::uint8_t>(len);
        b[4] = 4 + static_cast<std::uint8_t>(rng.next() % 8);
        b[5] = code;
        return b;
    };
    auto fill = [&](std::vector<Bytes>& side, const std::size_t (&sizes)[11], std::size_t total) {
        for (std::size_t i = 0; i < std::size(sizes); ++i) {
            side.push_back(packet(sizes[i], i == 0 ? 20 : 94));
        }
        std::size_t used = 0;
        for (const auto& b : side) {
            used += b.size();
        }
        if (used >= total) {
            throw Error(ErrorCode::InvariantViolation, "ssh fixture sizes exceed the byte budget");
        }
        side.push_back(packet(total - used, 94));
    };
    fill(client, client_sizes, kClientPayload);
    fill(server, server_sizes, kServerPayload);

    Endpoint cli{attacker, 36269};
    Endpoint srv{target, 22};
    std::uint32_t cs = rng.next();
    std::uint32_t ss = rng.next();
    Timestamp at{1591020600, 402000};
    for (std::size_t i = 0; i < 13; ++i) {
        if (i != 0) {
            at = advance(at, std::int64_t{rng.between(650, 800)});
        }
        c.records.push_back(fb.tcp(at, srv, cli, TcpHeader::kPsh | TcpHeader::kAck, ss, cs, {}, server[i], 0));
        ss += static_cast<std::uint32_t>(server[i].size());
        at = advance(at, std::int64_t{rng.between(650, 800)});
        c.records.push_back(fb.tcp(at, cli, srv, TcpHeader::kPsh | TcpHeader::kAck, cs, ss, {}, client[i], 0));
        cs += static_cast<std::uint32_t>(client[i].size());
    }
    return c;
}

CaptureFile icmp_echo(Ipv4Address attacker, Ipv4Address target)
{
    Rng rng(0x1f04);
    FrameBuilder fb{rng, role_macs(attacker, target)};
    auto c = ethernet_capture();
    Timestamp at{1591021200, 0};
    Bytes payload(56);
    std::iota(payload.begin(), payload.end(), std::uint8_t{0x10});
    const std::uint32_t ident = 0x4d2;
    for (std::uint32_t seq = 1; seq <= 3; ++seq) {
        c.records.push_back(fb.icmp(at, attacker, target, IcmpMessage::kEchoRequest, (ident << 16) | seq, payload));
        at = advance(at, std::int64_t{rng.between(300, 900)});
        c.records.push_back(fb.icmp(at, target, attacker, IcmpMessage::kEchoReply, (ident << 16) | seq, payload));
        at = advance(at, 1'000'000);
    }
    return c;
}

void write_fixture_set(const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    save_capture(internet_trial(), dir / "internet_trial.pcap");
    save_capture(telnet_keyid(), dir / "telnet_keyid.pcap");
    save_capture(ssh_session(), dir / "ssh_session.pcap");
    save_capture(ssh_session(kRecordedAttacker, kRecordedTarget), dir / "ssh_recorded.pcap");
    save_capture(icmp_echo(), dir / "icmp_echo.pcap");
    auto write_text = [&](const char* name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::binary);
        out << text;
        if (!out) {
            throw Error(ErrorCode::Io, "cannot write " + (dir / name).string());
        }
    };
    write_text("internet_trial.tsv", conversation_tsv(internet_trial_rows()));
    write_text("default_profile.json", profile_to_json(ServiceProfile::default_profile()));
}

} // namespace primer::fixtures
