#include "primer/error.hpp"
#include "primer/fixtures.hpp"
#include "primer/rewrite.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>


namespace primer {
namespace {

ParsedPacket tcp_packet(Ipv4Address src, Ipv4Address dst)
{
    ParsedPacket p;
    p.link = EthernetHeader{MacAddress::from_string("02:00:00:00:00:05"),
                            MacAddress::from_string("02:00:00:00:00:07"), kEtherTypeIpv4};
    p.ip.src_addr = src;
    p.ip.dst_addr = dst;
    TcpHeader h;
    h.src_port = 41085;
    h.dst_port = 23;
    h.flags = TcpHeader::kPsh | TcpHeader::kAck;
    h.seq = 77;
    p.transport = h;
    p.payload = to_bytes("admin\r\n");
    finalize_lengths(p);
    recompute_checksums(p);
    return p;
}

TEST(RewriteProperty, ChecksumsPayloadAndFocality)
{
    gen::Rng rng(41);
    for (int i = 0; i < 1500; ++i) {
        gen::PacketShape shape;
        shape.link = rng.chance(0.6) ? LinkType::Ethernet : LinkType::RawIp;
        auto original = gen::random_packet(rng, shape);
        auto spec = gen::random_rewrite(rng, original);
        auto rewritten = apply_rewrite(original, spec);

        ASSERT_TRUE(verify_checksums(rewritten).all_valid()) << "iteration " << i;
        ASSERT_EQ(rewritten.payload, original.payload) << "iteration " << i;

        auto a = encode_packet(original, Checksums::Preserve);
        auto b = encode_packet(rewritten, Checksums::Preserve);
        ASSERT_EQ(a.size(), b.size());
        const auto allowed = oracle::rewrite_positions(original);
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (a[k] != b[k]) {
                ASSERT_TRUE(allowed.count(k)) << "iteration " << i << " byte " << k;
            }
        }
    }
}

TEST(RewriteProperty, IdentityMapsAreByteIdentity)
{
    gen::Rng rng(42);
    for (int i = 0; i < 500; ++i) {
        gen::PacketShape shape;
        auto p = gen::random_packet(rng, shape);
        RewriteSpec spec;
        spec.map_ip(p.ip.src_addr, p.ip.src_addr);
        if (p.ip.dst_addr != p.ip.src_addr) {
            spec.map_ip(p.ip.dst_addr, p.ip.dst_addr);
        }
        ASSERT_EQ(encode_packet(apply_rewrite(p, spec), Checksums::Preserve),
                  encode_packet(p, Checksums::Preserve));
    }
}

TEST(Rewrite, EmptySpecIsIdentity)
{
    auto p = tcp_packet(fixtures::kRecordedAttacker, fixtures::kRecordedTarget);
    EXPECT_EQ(apply_rewrite(p, RewriteSpec{}), p);
}

TEST(Rewrite, RecordedPairToLabPair)
{
    auto p = tcp_packet(fixtures::kRecordedAttacker, fixtures::kRecordedTarget);
    RewriteSpec spec;
    spec.map_ip(fixtures::kRecordedAttacker, fixtures::kLabAttacker);
    spec.map_ip(fixtures::kRecordedTarget, fixtures::kLabTarget);
    RewriteStats stats;
    auto out = apply_rewrite(p, spec, &stats);
    EXPECT_EQ(out.ip.src_addr, Ipv4Address(192, 168, 1, 5));
    EXPECT_EQ(out.ip.dst_addr, Ipv4Address(192, 168, 1, 7));
    EXPECT_TRUE(verify_checksums(out).all_valid());
    EXPECT_NE(out.ip.header_checksum, p.ip.header_checksum);
    EXPECT_EQ(stats.ip_hits[fixtures::kRecordedAttacker], 1u);
    EXPECT_EQ(stats.ip_hits[fixtures::kRecordedTarget], 1u);
}

TEST(Rewrite, DirectionAgnostic)
{
    RewriteSpec spec;
    spec.map_ip(fixtures::kRecordedAttacker, fixtures::kLabAttacker);
    spec.map_ip(fixtures::kRecordedTarget, fixtures::kLabTarget);
    auto reply = apply_rewrite(tcp_packet(fixtures::kRecordedTarget, fixtures::kRecordedAttacker), spec);
    EXPECT_EQ(reply.ip.src_addr, fixtures::kLabTarget);
    EXPECT_EQ(reply.ip.dst_addr, fixtures::kLabAttacker);
}

TEST(Rewrite, IcmpChecksumUnaffectedByAddresses)
{
    ParsedPacket p;
    p.ip.src_addr = fixtures::kRecordedAttacker;
    p.ip.dst_addr = fixtures::kRecordedTarget;
    IcmpMessage m;
    m.type = IcmpMessage::kEchoRequest;
    m.rest = 0x00010001;
    p.transport = m;
    p.payload = Bytes(32, 0x61);
    finalize_lengths(p);
    recompute_checksums(p);
    RewriteSpec spec;
    spec.map_ip(fixtures::kRecordedAttacker, fixtures::kLabAttacker);
    auto out = apply_rewrite(p, spec);
    EXPECT_EQ(out.icmp()->checksum, p.icmp()->checksum);
    EXPECT_NE(out.ip.header_checksum, p.ip.header_checksum);

    auto bytes = encode_ip_datagram(out, Checksums::Preserve);
    EXPECT_EQ(oracle::internet_checksum(Bytes(bytes.begin() + 20, bytes.end())), 0);
}

TEST(Rewrite, PortsAndMacs)
{
    auto p = tcp_packet(fixtures::kLabAttacker, fixtures::kLabTarget);
    RewriteSpec spec;
    spec.add_port_mapping("tcp/23=2323");
    spec.add_port_mapping("udp/41085=1");
    spec.add_mac_mapping("02:00:00:00:00:07=aa:bb:cc:dd:ee:ff");
    auto out = apply_rewrite(p, spec);
    EXPECT_EQ(out.tcp()->dst_port, 2323);
    EXPECT_EQ(out.tcp()->src_port, 41085);
    EXPECT_EQ(out.link->src, MacAddress::from_string("aa:bb:cc:dd:ee:ff"));
    EXPECT_EQ(out.link->dst, p.link->dst);
    EXPECT_TRUE(verify_checksums(out).all_valid());
}

TEST(RewriteSpec, RejectsNonInjectiveMaps)
{
    RewriteSpec spec;
    spec.add_ip_mapping("10.0.0.9=192.168.1.5");
    EXPECT_NO_THROW(spec.add_ip_mapping("10.0.0.9=192.168.1.5"));
    EXPECT_THROW(spec.add_ip_mapping("10.0.0.8=192.168.1.5"), Error);
    EXPECT_THROW(spec.add_ip_mapping("10.0.0.9=192.168.1.6"), Error);

    spec.add_port_mapping("tcp/2222=22");
    EXPECT_THROW(spec.add_port_mapping("tcp/2223=22"), Error);
    EXPECT_NO_THROW(spec.add_port_mapping("udp/2223=22"));
    EXPECT_THROW(spec.map_port(IpProtocol::Icmp, 1, 2), Error);

    EXPECT_THROW(spec.add_ip_mapping("10.0.0.1"), Error);
    EXPECT_THROW(spec.add_ip_mapping("=1.2.3.4"), Error);
    EXPECT_THROW(spec.add_ip_mapping("1.2.3=1.2.3.4"), Error);
    EXPECT_THROW(spec.add_port_mapping("tcp/70000=1"), Error);
    EXPECT_THROW(spec.add_mac_mapping("zz:00:00:00:00:00=00:00:00:00:00:01"), Error);
}

TEST(RewriteCapture, PreservesCountOrderAndTimestamps)
{
    auto c = fixtures::telnet_keyid(fixtures::kRecordedAttacker, fixtures::kRecordedTarget);
    RewriteSpec spec;
    spec.map_ip(fixtures::kRecordedAttacker, fixtures::kLabAttacker);
    spec.map_ip(fixtures::kRecordedTarget, fixtures::kLabTarget);
    auto result = rewrite_capture(c, spec);
    ASSERT_EQ(result.capture.records.size(), 18u);
    for (std::size_t i = 0; i < c.records.size(); ++i) {
        EXPECT_EQ(result.capture.records[i].timestamp(), c.records[i].timestamp());
        EXPECT_EQ(result.capture.records[i].original_len, c.records[i].original_len);
        EXPECT_EQ(result.capture.records[i].captured_len, c.records[i].captured_len);
    }
    EXPECT_EQ(result.capture, fixtures::telnet_keyid());
    EXPECT_TRUE(result.warnings.empty());
}

TEST(RewriteCapture, EmptyCapture)
{
    EXPECT_TRUE(rewrite_capture(CaptureFile{}, RewriteSpec{}).capture.records.empty());
}

TEST(RewriteCapture, TruncatedRecordAbortsOrSkips)
{
    auto c = fixtures::telnet_keyid();
    c.records[5].data.resize(20);
    c.records[5].captured_len = 20;
    try {
        rewrite_capture(c, RewriteSpec{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DecodeFailure);
        ASSERT_TRUE(e.index());
        EXPECT_EQ(*e.index(), 5u);
    }
    auto result = rewrite_capture(c, RewriteSpec{}, DecodeFailurePolicy::SkipAndWarn);
    EXPECT_EQ(result.capture.records.size(), 17u);
    ASSERT_EQ(result.warnings.size(), 1u);
    EXPECT_EQ(result.warnings[0].record_index, 5u);
}

} // namespace
} // namespace primer
