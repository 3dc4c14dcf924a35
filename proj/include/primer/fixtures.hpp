#pragma once

#include "primer/analysis.hpp"
#include "primer/capture_io.hpp"

#include <filesystem>
#include <vector>

// Synthetic sample captures. Contents are generated from a fixed seed and
// carry no real exploit payloads.
namespace primer::fixtures {

inline constexpr Ipv4Address kLabAttacker{192, 168, 1, 5};
inline constexpr Ipv4Address kLabTarget{192, 168, 1, 7};
inline constexpr Ipv4Address kRecordedAttacker{10, 0, 0, 9};
inline constexpr Ipv4Address kRecordedTarget{10, 0, 0, 7};
inline constexpr Ipv4Address kInternetTarget{206, 195, 147, 100};

// Thirty minutes of unsolicited probes against a perimeter host with tcp/22
// and tcp/23 open: 14 directional rows, 17 packets, gaps of 30 to 50 s.
CaptureFile internet_trial();
// The row definition the capture is built from, ordered by address.
std::vector<ConversationStats> internet_trial_rows();

// Telnet negotiation burst with a stray SSH handshake and three unanswered
// SYNs to tcp/12235; 18 packets in under a second.
CaptureFile telnet_keyid(Ipv4Address attacker = kLabAttacker, Ipv4Address target = kLabTarget);

// 26-packet SSH exchange on port 22, 13 packets each way, every one carrying
// payload; the client side spans under 20 ms.
CaptureFile ssh_session(Ipv4Address attacker = kLabAttacker, Ipv4Address target = kLabTarget);

// Three echo requests, each answered.
CaptureFile icmp_echo(Ipv4Address attacker = kLabAttacker, Ipv4Address target = kLabTarget);

// Writes every fixture pcap, the internet trial table and the default mock
// profile into dir.
void write_fixture_set(const std::filesystem::path& dir);

} // namespace primer::fixtures
