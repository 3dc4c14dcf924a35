#include "primer/net_types.hpp"

#include "primer/error.hpp"

#include <charconv>
#include <cstdio>

namespace primer {

namespace {

template <typename T>
std::optional<T> parse_number(std::string_view text, int base = 10)
{
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value, base);
    if (ec != std::errc{} || ptr != last || text.empty()) {
        return std::nullopt;
    }
    return value;
}

} // namespace

Bytes to_bytes(std::string_view text)
{
    return Bytes(text.begin(), text.end());
}

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text)
{
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) {
        auto dot = text.find('.');
        std::string_view part = (i == 3) ? text : text.substr(0, dot);
        if (i < 3 && dot == std::string_view::npos) {
            return std::nullopt;
        }
        if (part.size() > 3) {
            return std::nullopt;
        }
        auto octet = parse_number<unsigned>(part);
        if (!octet || *octet > 255) {
            return std::nullopt;
        }
        value = (value << 8) | *octet;
        if (i < 3) {
            text.remove_prefix(dot + 1);
        }
    }
    return Ipv4Address(value);
}

Ipv4Address Ipv4Address::from_string(std::string_view text)
{
    auto addr = parse(text);
    if (!addr) {
        throw Error(ErrorCode::InvalidArgument, "bad IPv4 address '" + std::string(text) + "'");
    }
    return *addr;
}

std::array<std::uint8_t, 4> Ipv4Address::octets() const noexcept
{
    return {static_cast<std::uint8_t>(value_ >> 24), static_cast<std::uint8_t>(value_ >> 16),
            static_cast<std::uint8_t>(value_ >> 8), static_cast<std::uint8_t>(value_)};
}

std::string Ipv4Address::to_string() const
{
    auto o = octets();
    return std::to_string(o[0]) + "." + std::to_string(o[1]) + "." + std::to_string(o[2]) + "." +
           std::to_string(o[3]);
}

std::optional<MacAddress> MacAddress::parse(std::string_view text)
{
    std::array<std::uint8_t, 6> bytes{};
    if (text.size() != 17) {
        return std::nullopt;
    }
    for (std::size_t i = 0; i < 6; ++i) {
        if (i > 0 && text[i * 3 - 1] != ':') {
            return std::nullopt;
        }
        auto byte = parse_number<unsigned>(text.substr(i * 3, 2), 16);
        if (!byte) {
            return std::nullopt;
        }
        bytes[i] = static_cast<std::uint8_t>(*byte);
    }
    return MacAddress(bytes);
}

MacAddress MacAddress::from_string(std::string_view text)
{
    auto mac = parse(text);
    if (!mac) {
        throw Error(ErrorCode::InvalidArgument, "bad MAC address '" + std::string(text) + "'");
    }
    return *mac;
}

std::string MacAddress::to_string() const
{
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", bytes_[0], bytes_[1],
                  bytes_[2], bytes_[3], bytes_[4], bytes_[5]);
    return buf;
}

std::string protocol_name(std::uint8_t protocol)
{
    switch (protocol) {
    case 1: return "icmp";
    case 6: return "tcp";
    case 17: return "udp";
    default: return "proto" + std::to_string(protocol);
    }
}

std::optional<ServicePort> ServicePort::parse(std::string_view text)
{
    auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        return std::nullopt;
    }
    auto proto = text.substr(0, slash);
    auto port = parse_number<std::uint16_t>(text.substr(slash + 1));
    if (!port) {
        return std::nullopt;
    }
    if (proto == "tcp") {
        return ServicePort{IpProtocol::Tcp, *port};
    }
    if (proto == "udp") {
        return ServicePort{IpProtocol::Udp, *port};
    }
    return std::nullopt;
}

ServicePort ServicePort::from_string(std::string_view text)
{
    auto sp = parse(text);
    if (!sp) {
        throw Error(ErrorCode::InvalidArgument,
                    "bad service port '" + std::string(text) + "' (expected tcp/N or udp/N)");
    }
    return *sp;
}

std::string ServicePort::to_string() const
{
    return protocol_name(static_cast<std::uint8_t>(protocol)) + "/" + std::to_string(port);
}

std::string Endpoint::to_string() const
{
    return addr.to_string() + ":" + std::to_string(port);
}

Timestamp Timestamp::from_micros(std::int64_t micros)
{
    auto sec = micros / 1'000'000;
    auto usec = micros % 1'000'000;
    if (usec < 0) {
        usec += 1'000'000;
        sec -= 1;
    }
    return Timestamp{sec, static_cast<std::uint32_t>(usec)};
}

Timestamp Timestamp::now()
{
    auto since_epoch = std::chrono::system_clock::now().time_since_epoch();
    return from_micros(std::chrono::duration_cast<std::chrono::microseconds>(since_epoch).count());
}

} // namespace primer
