#pragma once

#include "primer/capture_io.hpp"
#include "primer/packet_codec.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace primer {

// Address/port remapping applied identically to both directions of traffic.
// Every map is injective; add_* rejects entries that would merge two keys.
class RewriteSpec {
public:
    void map_ip(Ipv4Address from, Ipv4Address to);
    void map_port(IpProtocol protocol, std::uint16_t from, std::uint16_t to);
    void map_mac(MacAddress from, MacAddress to);

    // "old=new" forms used on the command line: "10.0.0.9=192.168.1.5",
    // "tcp/2222=22", "aa:bb:cc:dd:ee:ff=00:11:22:33:44:55".
    void add_ip_mapping(std::string_view text);
    void add_port_mapping(std::string_view text);
    void add_mac_mapping(std::string_view text);

    const std::map<Ipv4Address, Ipv4Address>& ip_map() const { return ip_map_; }
    const std::map<ServicePort, std::uint16_t>& port_map() const { return port_map_; }
    const std::map<MacAddress, MacAddress>& mac_map() const { return mac_map_; }

    bool empty() const { return ip_map_.empty() && port_map_.empty() && mac_map_.empty(); }

private:
    std::map<Ipv4Address, Ipv4Address> ip_map_;
    std::map<ServicePort, std::uint16_t> port_map_;
    std::map<MacAddress, MacAddress> mac_map_;
};

// Per-entry counts of how many header fields were substituted.
struct RewriteStats {
    std::map<Ipv4Address, std::size_t> ip_hits;
    std::map<ServicePort, std::size_t> port_hits;
    std::map<MacAddress, std::size_t> mac_hits;

    void merge(const RewriteStats& other);
};

ParsedPacket apply_rewrite(const ParsedPacket& packet, const RewriteSpec& spec,
                           RewriteStats* stats = nullptr);

enum class DecodeFailurePolicy {
    Abort,
    SkipAndWarn,
};

struct RewriteWarning {
    std::size_t record_index = 0;
    std::string message;
};

struct RewriteResult {
    CaptureFile capture;
    std::vector<RewriteWarning> warnings;
    RewriteStats stats;
};

// Records that fail to decode abort with Error(DecodeFailure, index) by
// default; SkipAndWarn drops them from the output and reports a warning.
RewriteResult rewrite_capture(const CaptureFile& capture, const RewriteSpec& spec,
                              DecodeFailurePolicy policy = DecodeFailurePolicy::Abort);

} // namespace primer
