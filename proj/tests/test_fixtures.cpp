#include "primer/analysis.hpp"
#include "primer/capture_io.hpp"
#include "primer/fixtures.hpp"
#include "primer/mock_honeypot.hpp"
#include "primer/packet_codec.hpp"
#include "primer/report.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace primer {
namespace {

const std::filesystem::path kDir = PRIMER_FIXTURE_DIR;

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

TEST(Fixtures, Reproducible)
{
    EXPECT_EQ(write_capture(fixtures::internet_trial(), ByteOrder::Native),
              write_capture(fixtures::internet_trial(), ByteOrder::Native));
    EXPECT_EQ(write_capture(fixtures::telnet_keyid(), ByteOrder::Native),
              write_capture(fixtures::telnet_keyid(), ByteOrder::Native));
    EXPECT_EQ(write_capture(fixtures::ssh_session(), ByteOrder::Native),
              write_capture(fixtures::ssh_session(), ByteOrder::Native));
}

TEST(Fixtures, CommittedFilesMatchGenerator)
{
    auto tmp = std::filesystem::temp_directory_path() / "primer_fixture_check";
    std::filesystem::remove_all(tmp);
    fixtures::write_fixture_set(tmp);
    for (const char* name : {"internet_trial.pcap", "telnet_keyid.pcap", "ssh_session.pcap", "ssh_recorded.pcap",
                             "icmp_echo.pcap", "internet_trial.tsv", "default_profile.json"}) {
        ASSERT_TRUE(std::filesystem::exists(kDir / name)) << name;
        EXPECT_EQ(slurp(tmp / name), slurp(kDir / name)) << name;
    }
    std::filesystem::remove_all(tmp);
}

TEST(Fixtures, InternetTrialShape)
{
    auto c = fixtures::internet_trial();
    EXPECT_EQ(c.records.size(), 17u);
    EXPECT_EQ(c.link_type, LinkType::Ethernet);
    std::uint64_t bytes = 0;
    for (const auto& r : c.records) {
        bytes += r.original_len;
        auto p = decode_packet(r, c.link_type);
        EXPECT_EQ(p.ip.dst_addr, fixtures::kInternetTarget);
        EXPECT_TRUE(verify_checksums(p).all_valid());
    }
    std::uint64_t expected = 0;
    for (const auto& row : fixtures::internet_trial_rows()) {
        expected += row.bytes;
    }
    EXPECT_EQ(bytes, expected);
    EXPECT_EQ(slurp(kDir / "internet_trial.tsv"), conversation_tsv(fixtures::internet_trial_rows()));
}

TEST(Fixtures, SshSessionShape)
{
    auto c = fixtures::ssh_session();
    ASSERT_EQ(c.records.size(), 26u);
    std::size_t client = 0;
    std::size_t server = 0;
    for (const auto& r : c.records) {
        auto p = decode_packet(r, c.link_type);
        ASSERT_TRUE(p.tcp());
        EXPECT_FALSE(p.payload.empty());
        EXPECT_TRUE(verify_checksums(p).all_valid());
        (p.ip.src_addr == fixtures::kLabAttacker ? client : server) += p.payload.size();
    }
    EXPECT_EQ(client, 2237u);
    EXPECT_EQ(server, 1645u);
    auto first = decode_packet(c.records[0], c.link_type);
    EXPECT_EQ(first.ip.src_addr, fixtures::kLabTarget);
    EXPECT_EQ(std::string(first.payload.begin(), first.payload.begin() + 8), "SSH-2.0-");
}

TEST(Fixtures, TelnetKeyIdShape)
{
    auto c = fixtures::telnet_keyid();
    ASSERT_EQ(c.records.size(), 18u);
    EXPECT_LT(c.records.back().timestamp() - c.records.front().timestamp(), std::chrono::seconds(1));
    bool login = false;
    for (const auto& r : c.records) {
        auto p = decode_packet(r, c.link_type);
        if (std::string(p.payload.begin(), p.payload.end()) == "login: ") {
            login = true;
        }
    }
    EXPECT_TRUE(login);
}

TEST(Fixtures, DefaultProfileFile)
{
    EXPECT_EQ(load_profile(kDir / "default_profile.json"), ServiceProfile::default_profile());
}

TEST(Fixtures, AddressesSubstitute)
{
    auto c = fixtures::ssh_session(fixtures::kRecordedAttacker, fixtures::kRecordedTarget);
    auto table = conversation_table(c);
    ASSERT_EQ(table.rows.size(), 2u);
    EXPECT_EQ(table.rows[0].addr_a, fixtures::kRecordedTarget);
    EXPECT_EQ(table.rows[1].addr_a, fixtures::kRecordedAttacker);
}

} // namespace
} // namespace primer
