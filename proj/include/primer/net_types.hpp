#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace primer {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

Bytes to_bytes(std::string_view text);

class Ipv4Address {
public:
    constexpr Ipv4Address() = default;
    constexpr explicit Ipv4Address(std::uint32_t host_order) : value_(host_order) {}
    constexpr Ipv4Address(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) |
                 (std::uint32_t{c} << 8) | std::uint32_t{d})
    {
    }

    static std::optional<Ipv4Address> parse(std::string_view text);
    // Throws Error(InvalidArgument) on malformed input.
    static Ipv4Address from_string(std::string_view text);

    constexpr std::uint32_t value() const noexcept { return value_; }
    std::array<std::uint8_t, 4> octets() const noexcept;
    std::string to_string() const;

    constexpr auto operator<=>(const Ipv4Address&) const = default;

private:
    std::uint32_t value_ = 0;
};

class MacAddress {
public:
    constexpr MacAddress() = default;
    constexpr explicit MacAddress(std::array<std::uint8_t, 6> bytes) : bytes_(bytes) {}

    static std::optional<MacAddress> parse(std::string_view text);
    static MacAddress from_string(std::string_view text);

    const std::array<std::uint8_t, 6>& bytes() const noexcept { return bytes_; }
    std::string to_string() const;

    constexpr auto operator<=>(const MacAddress&) const = default;

private:
    std::array<std::uint8_t, 6> bytes_{};
};

enum class IpProtocol : std::uint8_t {
    Icmp = 1,
    Tcp = 6,
    Udp = 17,
};

std::string protocol_name(std::uint8_t protocol);

// (protocol, port) pair naming a service, e.g. "tcp/22".
struct ServicePort {
    IpProtocol protocol = IpProtocol::Tcp;
    std::uint16_t port = 0;

    static std::optional<ServicePort> parse(std::string_view text);
    static ServicePort from_string(std::string_view text);
    std::string to_string() const;

    constexpr auto operator<=>(const ServicePort&) const = default;
};

struct Endpoint {
    Ipv4Address addr;
    std::uint16_t port = 0;

    std::string to_string() const;
    constexpr auto operator<=>(const Endpoint&) const = default;
};

// Capture-file timestamp: whole seconds plus microseconds, never floating point.
struct Timestamp {
    std::int64_t sec = 0;
    std::uint32_t usec = 0;

    static Timestamp from_micros(std::int64_t micros);
    static Timestamp now();

    std::int64_t micros() const noexcept { return sec * 1'000'000 + usec; }
    double seconds() const noexcept { return static_cast<double>(micros()) / 1e6; }

    constexpr auto operator<=>(const Timestamp&) const = default;
};

inline std::chrono::microseconds operator-(const Timestamp& a, const Timestamp& b)
{
    return std::chrono::microseconds(a.micros() - b.micros());
}

} // namespace primer
