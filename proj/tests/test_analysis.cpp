#include "primer/analysis.hpp"
#include "primer/error.hpp"
#include "primer/fixtures.hpp"
#include "primer/packet_codec.hpp"
#include "primer/report.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

namespace primer {
namespace {

using namespace std::chrono_literals;

const std::set<ServicePort> kSshTelnet{{IpProtocol::Tcp, 22}, {IpProtocol::Tcp, 23}};

ConversationStats row(const char* a, std::uint16_t pa, const char* b, std::uint16_t pb,
                      std::uint64_t packets, std::uint64_t bytes)
{
    return {Ipv4Address::from_string(a), pa, Ipv4Address::from_string(b), pb, packets, bytes};
}

TEST(ConversationTable, InternetTrialRows)
{
    const std::vector<ConversationStats> expected{
        row("14.192.212.211", 51018, "206.195.147.100", 445, 3, 194),
        row("31.124.112.163", 49990, "206.195.147.100", 23, 1, 60),
        row("31.168.191.243", 58564, "206.195.147.100", 81, 1, 60),
        row("45.67.14.21", 35966, "206.195.147.100", 22, 2, 114),
        row("45.129.33.60", 42272, "206.195.147.100", 30690, 1, 60),
        row("45.129.33.60", 42272, "206.195.147.100", 16390, 1, 60),
        row("45.129.33.122", 41118, "206.195.147.100", 5957, 1, 60),
        row("45.145.66.90", 49652, "206.195.147.100", 2223, 1, 60),
        row("45.146.164.169", 59843, "206.195.147.100", 3393, 1, 60),
        row("45.146.164.169", 59843, "206.195.147.100", 75, 1, 60),
        row("45.146.165.250", 59757, "206.195.147.100", 5097, 1, 60),
        row("46.161.27.48", 43277, "206.195.147.100", 23389, 1, 60),
        row("51.161.12.231", 32767, "206.195.147.100", 8545, 1, 60),
        row("59.126.89.160", 30579, "206.195.147.100", 8080, 1, 60),
    };
    EXPECT_EQ(fixtures::internet_trial_rows(), expected);
    auto table = conversation_table(fixtures::internet_trial(), {ConversationOrder::Address, false});
    EXPECT_EQ(table.rows, expected);
    EXPECT_EQ(table.undecodable, 0u);
}

TEST(ConversationTable, FirstSeenOrderFollowsArrival)
{
    auto table = conversation_table(fixtures::internet_trial());
    ASSERT_EQ(table.rows.size(), 14u);
    EXPECT_EQ(table.rows[0].port_b, 8080);
    EXPECT_EQ(table.rows[1].port_b, 445);
}

TEST(ConversationTable, SshSessionTwoRows)
{
    auto table = conversation_table(fixtures::ssh_session());
    ASSERT_EQ(table.rows.size(), 2u);
    EXPECT_EQ(table.rows[0], row("192.168.1.7", 22, "192.168.1.5", 36269, 13, 2347));
    EXPECT_EQ(table.rows[1], row("192.168.1.5", 36269, "192.168.1.7", 22, 13, 2939));
}

TEST(ConversationTable, TelnetKeyIdRows)
{
    auto table = conversation_table(fixtures::telnet_keyid(), {ConversationOrder::Address, false});
    ASSERT_EQ(table.rows.size(), 5u);
    EXPECT_EQ(table.rows[0], row("192.168.1.5", 52234, "192.168.1.7", 22, 2, 108));
    EXPECT_EQ(table.rows[1], row("192.168.1.5", 41085, "192.168.1.7", 23, 6, 360));
    EXPECT_EQ(table.rows[2], row("192.168.1.5", 43691, "192.168.1.7", 12235, 3, 222));
    EXPECT_EQ(table.rows[3], row("192.168.1.7", 22, "192.168.1.5", 52234, 2, 120));
    EXPECT_EQ(table.rows[4], row("192.168.1.7", 23, "192.168.1.5", 41085, 5, 301));
}

TEST(ConversationTable, SinglePacket)
{
    auto c = fixtures::icmp_echo();
    c.records.resize(1);
    auto table = conversation_table(c);
    ASSERT_EQ(table.rows.size(), 1u);
    EXPECT_EQ(table.rows[0].packets, 1u);
    EXPECT_EQ(table.rows[0].port_a, 0);
    EXPECT_EQ(table.rows[0].port_b, 0);
}

TEST(ConversationTable, BidirectionalMerge)
{
    auto table = conversation_table(fixtures::ssh_session(), {ConversationOrder::FirstSeen, true});
    ASSERT_EQ(table.rows.size(), 1u);
    EXPECT_EQ(table.rows[0].packets, 26u);
    EXPECT_EQ(table.rows[0].bytes, 2939u + 2347u);
}

TEST(ConversationTable, MatchesNaiveTallyOnRandomCaptures)
{
    gen::Rng rng(51);
    for (int i = 0; i < 200; ++i) {
        gen::PacketShape shape;
        shape.link = rng.chance(0.5) ? LinkType::Ethernet : LinkType::RawIp;
        for (int k = 0; k < 4; ++k) {
            shape.addresses.push_back(gen::random_address(rng));
        }
        shape.ports = {22, 23, 80, static_cast<std::uint16_t>(rng.next())};
        shape.max_payload = 40;
        auto c = gen::random_capture(rng, 100, shape, true);
        for (bool by_address : {false, true}) {
            for (bool bidir : {false, true}) {
                auto expected = oracle::naive_conversations(c, by_address, bidir);
                auto table = conversation_table(
                    c, {by_address ? ConversationOrder::Address : ConversationOrder::FirstSeen, bidir});
                ASSERT_EQ(table.rows, expected.rows) << "capture " << i;
                ASSERT_EQ(table.undecodable, expected.undecodable);
            }
        }
    }
}

TEST(ConversationTable, Conservation)
{
    gen::Rng rng(52);
    for (int i = 0; i < 100; ++i) {
        gen::PacketShape shape;
        auto c = gen::random_capture(rng, 60, shape, true);
        auto table = conversation_table(c);
        std::uint64_t packets = 0;
        std::uint64_t bytes = 0;
        for (const auto& r : table.rows) {
            packets += r.packets;
            bytes += r.bytes;
        }
        std::uint64_t decodable = 0;
        std::uint64_t decodable_bytes = 0;
        for (const auto& rec : c.records) {
            try {
                decode_packet(rec, c.link_type);
                ++decodable;
                decodable_bytes += rec.original_len;
            } catch (const Error&) {
            }
        }
        ASSERT_EQ(packets, decodable);
        ASSERT_EQ(bytes, decodable_bytes);
    }
}

TEST(ConversationTable, ReversingAddressesTransposesRows)
{
    gen::Rng rng(53);
    for (int i = 0; i < 50; ++i) {
        gen::PacketShape shape;
        shape.link = LinkType::RawIp;
        shape.addresses = {gen::random_address(rng), gen::random_address(rng), gen::random_address(rng)};
        shape.ports = {1, 2, 3};
        auto c = gen::random_capture(rng, 50, shape);
        auto reversed = c;
        for (auto& rec : reversed.records) {
            auto p = decode_packet(rec, c.link_type);
            std::swap(p.ip.src_addr, p.ip.dst_addr);
            if (auto* t = p.tcp()) {
                std::swap(t->src_port, t->dst_port);
            } else if (auto* u = p.udp()) {
                std::swap(u->src_port, u->dst_port);
            }
            rec.data = encode_packet(p, Checksums::Recompute);
        }
        auto a = conversation_table(c).rows;
        auto b = conversation_table(reversed).rows;
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            EXPECT_EQ(a[k].addr_a, b[k].addr_b);
            EXPECT_EQ(a[k].port_a, b[k].port_b);
            EXPECT_EQ(a[k].addr_b, b[k].addr_a);
            EXPECT_EQ(a[k].port_b, b[k].port_a);
            EXPECT_EQ(a[k].packets, b[k].packets);
        }
    }
}

TEST(ConversationTable, EmptyCapture)
{
    auto table = conversation_table(CaptureFile{});
    EXPECT_TRUE(table.rows.empty());
    EXPECT_EQ(conversation_tsv(table.rows), std::string(kConversationTsvHeader) + "\n");
}

TEST(AccuracyReport, InternetTrial)
{
    auto r = accuracy_report(fixtures::internet_trial(), fixtures::kInternetTarget, kSshTelnet);
    EXPECT_EQ(r.total_toward_target, 17u);
    EXPECT_EQ(r.on_service, 3u);
    EXPECT_EQ(r.off_service, 14u);
    EXPECT_EQ(r.distinct_sources, 12u);
    EXPECT_EQ(r.distinct_dst_ports, 14u);
    EXPECT_DOUBLE_EQ(r.accuracy, 3.0 / 17.0);
    EXPECT_EQ(format_ratio(r.accuracy), "0.1765");
    EXPECT_EQ(r.packets_from_target, 0u);
}

TEST(AccuracyReport, TelnetKeyIdReplyFraction)
{
    auto r = accuracy_report(fixtures::telnet_keyid(), fixtures::kLabTarget, kSshTelnet);
    EXPECT_EQ(r.total_packets, 18u);
    EXPECT_EQ(r.packets_from_target, 7u);
    EXPECT_DOUBLE_EQ(r.reply_fraction, 7.0 / 18.0);
    EXPECT_EQ(r.reply_percent(), 38u);
    EXPECT_EQ(r.total_toward_target, 11u);
    EXPECT_EQ(r.on_service, 8u);
    ASSERT_EQ(r.extraneous_ports.size(), 1u);
    EXPECT_EQ(r.extraneous_ports[0], (ExtraneousPort{6, 12235, 3}));
    EXPECT_NE(accuracy_text(r).find("reply_fraction: 38%"), std::string::npos);
}

TEST(AccuracyReport, AllOnServiceIsPerfect)
{
    auto r = accuracy_report(fixtures::ssh_session(), fixtures::kLabTarget, kSshTelnet);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.on_service + r.off_service, r.total_toward_target);
}

TEST(AccuracyReport, IcmpCountsTowardTargetButNeverOnService)
{
    auto r = accuracy_report(fixtures::icmp_echo(), fixtures::kLabTarget, kSshTelnet);
    EXPECT_EQ(r.total_toward_target, 3u);
    EXPECT_EQ(r.on_service, 0u);
    ASSERT_EQ(r.extraneous_ports.size(), 1u);
    EXPECT_EQ(r.extraneous_ports[0], (ExtraneousPort{1, 0, 3}));
}

TEST(AccuracyReport, NothingTowardTarget)
{
    auto r = accuracy_report(fixtures::ssh_session(), Ipv4Address(1, 2, 3, 4), kSshTelnet);
    EXPECT_EQ(r.total_toward_target, 0u);
    EXPECT_EQ(r.accuracy, 0.0);
}

TEST(AccuracyReport, InvariantsOnRandomCaptures)
{
    gen::Rng rng(54);
    for (int i = 0; i < 100; ++i) {
        gen::PacketShape shape;
        shape.addresses = {gen::random_address(rng), gen::random_address(rng)};
        shape.ports = {22, 23, 80};
        auto c = gen::random_capture(rng, 80, shape, true);
        auto r = accuracy_report(c, shape.addresses[0], kSshTelnet);
        ASSERT_EQ(r.on_service + r.off_service, r.total_toward_target);
        ASSERT_GE(r.accuracy, 0.0);
        ASSERT_LE(r.accuracy, 1.0);
        ASSERT_GE(r.reply_fraction, 0.0);
        ASSERT_LE(r.reply_fraction, 1.0);
        std::uint64_t extraneous = 0;
        for (const auto& e : r.extraneous_ports) {
            extraneous += e.packets;
        }
        ASSERT_EQ(extraneous, r.off_service);
        if (r.total_toward_target) {
            ASSERT_EQ(r.accuracy, static_cast<double>(r.on_service) / static_cast<double>(r.total_toward_target));
        }
    }
}

TEST(VolumeSeries, InternetTrialGaps)
{
    auto v = volume_series(fixtures::internet_trial(), 1s);
    ASSERT_TRUE(v.gaps);
    EXPECT_EQ(v.gaps->count, 16u);
    EXPECT_GE(v.gaps->min, 30s);
    EXPECT_LE(v.gaps->max, 50s);
    std::uint64_t total = 0;
    for (const auto& b : v.bins) {
        total += b.packets;
    }
    EXPECT_EQ(total, 17u);
}

TEST(VolumeSeries, SshClientBurst)
{
    auto v = volume_series(fixtures::ssh_session(), 10ms);
    const auto* burst = v.burst_for(fixtures::kLabAttacker);
    ASSERT_NE(burst, nullptr);
    EXPECT_EQ(burst->packets, 13u);
    EXPECT_LE(burst->window(), 20ms);
    EXPECT_EQ(v.bins.front().start, fixtures::ssh_session().records.front().timestamp());
}

TEST(VolumeSeries, SinglePacket)
{
    auto c = fixtures::icmp_echo();
    c.records.resize(1);
    auto v = volume_series(c, 10ms);
    ASSERT_EQ(v.bins.size(), 1u);
    EXPECT_EQ(v.bins[0].packets, 1u);
    EXPECT_FALSE(v.gaps);
}

TEST(VolumeSeries, BinsAreContiguousAndConserve)
{
    gen::Rng rng(55);
    for (int i = 0; i < 50; ++i) {
        gen::PacketShape shape;
        auto c = gen::random_capture(rng, 50, shape, true);
        if (c.records.empty()) {
            continue;
        }
        auto v = volume_series(c, 250ms);
        std::uint64_t total = 0;
        for (std::size_t k = 0; k < v.bins.size(); ++k) {
            total += v.bins[k].packets;
            if (k) {
                ASSERT_EQ(v.bins[k].start - v.bins[k - 1].start, 250ms);
            }
        }
        ASSERT_EQ(total, c.records.size());
        if (c.records.size() > 1) {
            ASSERT_EQ(v.gaps->count, c.records.size() - 1);
        }
    }
}

TEST(VolumeSeries, Errors)
{
    EXPECT_THROW(volume_series(CaptureFile{}, 1s), Error);
    try {
        volume_series(fixtures::icmp_echo(), 0us);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
}

TEST(Report, TsvHeaderIsExact)
{
    EXPECT_EQ(kConversationTsvHeader, "Address A\tPort A\tAddress B\tPort B\tPackets\tBytes");
    auto tsv = conversation_tsv({row("45.67.14.21", 35966, "206.195.147.100", 22, 2, 114)});
    EXPECT_EQ(tsv, std::string(kConversationTsvHeader) + "\n45.67.14.21\t35966\t206.195.147.100\t22\t2\t114\n");
}

TEST(Report, JsonFieldNames)
{
    nlohmann::json j = accuracy_report(fixtures::telnet_keyid(), fixtures::kLabTarget, kSshTelnet);
    for (const char* key : {"target", "open_ports", "total_toward_target", "on_service", "off_service",
                            "accuracy", "reply_fraction", "distinct_sources", "distinct_dst_ports",
                            "extraneous_ports"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(j["reply_percent"], "38%");
    nlohmann::json v = volume_series(fixtures::ssh_session(), 10ms);
    for (const char* key : {"bin_width", "bins", "gaps", "burst_window"}) {
        EXPECT_TRUE(v.contains(key)) << key;
    }
}

TEST(Report, VolumeCsv)
{
    auto csv = volume_csv(volume_series(fixtures::icmp_echo(), 1s));
    EXPECT_EQ(csv.rfind("bin_start,packets,bytes\n", 0), 0u);
}

} // namespace
} // namespace primer
