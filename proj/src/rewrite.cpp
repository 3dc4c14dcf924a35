#include "primer/rewrite.hpp"

#include "primer/error.hpp"

#include <charconv>

namespace primer {

namespace {

template <typename Map>
void insert_injective(Map& map, const typename Map::key_type& from,
                      const typename Map::mapped_type& to, const std::string& what)
{
    if (auto it = map.find(from); it != map.end()) {
        if (it->second == to) {
            return;
        }
        throw Error(ErrorCode::InvalidArgument, what + " key mapped twice to different values");
    }
    for (const auto& [key, value] : map) {
        if (value == to) {
            throw Error(ErrorCode::InvalidArgument,
                        what + " map is not injective: two keys map to the same value");
        }
    }
    map.emplace(from, to);
}

std::pair<std::string_view, std::string_view> split_mapping(std::string_view text)
{
    auto eq = text.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == text.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "mapping '" + std::string(text) + "' must have the form old=new");
    }
    return {text.substr(0, eq), text.substr(eq + 1)};
}

template <typename Map, typename Key>
auto lookup(const Map& map, const Key& key) -> std::optional<typename Map::mapped_type>
{
    if (auto it = map.find(key); it != map.end()) {
        return it->second;
    }
    return std::nullopt;
}

} // namespace

void RewriteSpec::map_ip(Ipv4Address from, Ipv4Address to)
{
    insert_injective(ip_map_, from, to, "ip");
}

void RewriteSpec::map_port(IpProtocol protocol, std::uint16_t from, std::uint16_t to)
{
    if (protocol != IpProtocol::Tcp && protocol != IpProtocol::Udp) {
        throw Error(ErrorCode::InvalidArgument, "port maps apply to tcp or udp only");
    }
    ServicePort key{protocol, from};
    if (auto it = port_map_.find(key); it != port_map_.end()) {
        if (it->second == to) {
            return;
        }
        throw Error(ErrorCode::InvalidArgument, "port key mapped twice to different values");
    }
    for (const auto& [k, v] : port_map_) {
        if (k.protocol == protocol && v == to) {
            throw Error(ErrorCode::InvalidArgument,
                        "port map is not injective: two ports map to the same value");
        }
    }
    port_map_.emplace(key, to);
}

void RewriteSpec::map_mac(MacAddress from, MacAddress to)
{
    insert_injective(mac_map_, from, to, "mac");
}

void RewriteSpec::add_ip_mapping(std::string_view text)
{
    auto [from, to] = split_mapping(text);
    map_ip(Ipv4Address::from_string(from), Ipv4Address::from_string(to));
}

void RewriteSpec::add_port_mapping(std::string_view text)
{
    auto [from, to] = split_mapping(text);
    auto key = ServicePort::from_string(from);
    std::uint16_t port = 0;
    auto [ptr, ec] = std::from_chars(to.data(), to.data() + to.size(), port);
    if (ec != std::errc{} || ptr != to.data() + to.size()) {
        throw Error(ErrorCode::InvalidArgument, "bad port '" + std::string(to) + "'");
    }
    map_port(key.protocol, key.port, port);
}

void RewriteSpec::add_mac_mapping(std::string_view text)
{
    auto [from, to] = split_mapping(text);
    map_mac(MacAddress::from_string(from), MacAddress::from_string(to));
}

void RewriteStats::merge(const RewriteStats& other)
{
    for (const auto& [k, n] : other.ip_hits) {
        ip_hits[k] += n;
    }
    for (const auto& [k, n] : other.port_hits) {
        port_hits[k] += n;
    }
    for (const auto& [k, n] : other.mac_hits) {
        mac_hits[k] += n;
    }
}

ParsedPacket apply_rewrite(const ParsedPacket& packet, const RewriteSpec& spec, RewriteStats* stats)
{
    ParsedPacket out = packet;

    auto map_addr = [&](Ipv4Address& addr) {
        if (auto to = lookup(spec.ip_map(), addr)) {
            if (stats) {
                ++stats->ip_hits[addr];
            }
            addr = *to;
        }
    };
    map_addr(out.ip.src_addr);
    map_addr(out.ip.dst_addr);

    if (!spec.port_map().empty()) {
        auto map_port = [&](IpProtocol proto, std::uint16_t& port) {
            ServicePort key{proto, port};
            if (auto to = lookup(spec.port_map(), key)) {
                if (stats) {
                    ++stats->port_hits[key];
                }
                port = *to;
            }
        };
        if (auto* tcp = out.tcp()) {
            map_port(IpProtocol::Tcp, tcp->src_port);
            map_port(IpProtocol::Tcp, tcp->dst_port);
        } else if (auto* udp = out.udp()) {
            map_port(IpProtocol::Udp, udp->src_port);
            map_port(IpProtocol::Udp, udp->dst_port);
        }
    }

    if (out.link && !spec.mac_map().empty()) {
        auto map_mac = [&](MacAddress& mac) {
            if (auto to = lookup(spec.mac_map(), mac)) {
                if (stats) {
                    ++stats->mac_hits[mac];
                }
                mac = *to;
            }
        };
        map_mac(out.link->src);
        map_mac(out.link->dst);
    }

    recompute_checksums(out);
    return out;
}

RewriteResult rewrite_capture(const CaptureFile& capture, const RewriteSpec& spec,
                              DecodeFailurePolicy policy)
{
    RewriteResult result;
    result.capture.link_type = capture.link_type;
    result.capture.snap_len = capture.snap_len;
    result.capture.byte_order = capture.byte_order;
    result.capture.records.reserve(capture.records.size());

    for (std::size_t i = 0; i < capture.records.size(); ++i) {
        const auto& record = capture.records[i];
        ParsedPacket parsed;
        try {
            parsed = decode_packet(record, capture.link_type);
        } catch (const Error& e) {
            if (policy == DecodeFailurePolicy::Abort) {
                throw Error(ErrorCode::DecodeFailure,
                            "record " + std::to_string(i) + ": " + e.what(), i);
            }
            result.warnings.push_back({i, e.what()});
            continue;
        }
        auto rewritten = apply_rewrite(parsed, spec, &result.stats);
        PacketRecord out = record;
        out.data = encode_packet(rewritten, Checksums::Preserve);
        // Field substitutions never change the encoded length.
        out.captured_len = static_cast<std::uint32_t>(out.data.size());
        result.capture.records.push_back(std::move(out));
    }
    return result;
}

} // namespace primer
