#pragma once

#include "primer/capture_io.hpp"
#include "primer/packet_codec.hpp"
#include "primer/rewrite.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace primer::gen {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
    bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_) < p; }
    std::uint8_t byte() { return static_cast<std::uint8_t>(next()); }
    Bytes bytes(std::size_t n);

    template <typename T>
    const T& pick(const std::vector<T>& items)
    {
        return items[below(items.size())];
    }

private:
    std::mt19937_64 engine_;
};

struct PacketShape {
    LinkType link = LinkType::Ethernet;
    // Address pool the packet endpoints are drawn from; random when empty.
    std::vector<Ipv4Address> addresses;
    std::vector<std::uint16_t> ports;
    std::size_t max_payload = 200;
};

Ipv4Address random_address(Rng& rng);
MacAddress random_mac(Rng& rng);

// A valid IPv4 packet with TCP, UDP, ICMP or an opaque protocol, random IP and
// TCP options, correct lengths and checksums, and Ethernet padding when short.
ParsedPacket random_packet(Rng& rng, const PacketShape& shape);

// Up to max_records packets with non-decreasing timestamps; a few records are
// made undecodable when allow_garbage is set.
CaptureFile random_capture(Rng& rng, std::size_t max_records, const PacketShape& shape,
                           bool allow_garbage = false);

// Injective maps over the addresses, ports and MACs present in the packet,
// plus unrelated keys.
RewriteSpec random_rewrite(Rng& rng, const ParsedPacket& packet);

} // namespace primer::gen
