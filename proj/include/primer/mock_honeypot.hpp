#pragma once

#include "primer/loopback.hpp"
#include "primer/net_types.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace primer {

enum class ServiceMode {
    Echo,
    Sink,
    Scripted,
};

struct ScriptRule {
    Bytes trigger;
    Bytes response;

    bool operator==(const ScriptRule&) const = default;
};

struct ServiceScript {
    Bytes banner; // sent once per connection before anything else
    ServiceMode mode = ServiceMode::Echo;
    std::vector<ScriptRule> script; // Scripted mode only

    bool operator==(const ServiceScript&) const = default;
};

enum class ClosedPolicy {
    Drop,   // never answer, never reset
    Reject, // TCP reset / ICMP port unreachable
};

struct ServiceProfile {
    std::map<ServicePort, ServiceScript> services;
    ClosedPolicy closed_policy = ClosedPolicy::Drop;
    Ipv4Address identity{192, 168, 1, 7};
    bool answer_ping = true;

    // SSH on tcp/22 and Telnet on tcp/23, both echoing; everything else dropped.
    static ServiceProfile default_profile();

    std::set<ServicePort> open_ports() const;
    bool operator==(const ServiceProfile&) const = default;
};

// Profile file: {"identity", "closed_policy": "drop"|"reject", "answer_ping",
// "services": [{"proto", "port", "banner", "mode", "script": [{"trigger", "response"}]}]}
ServiceProfile profile_from_json(std::string_view text);
std::string profile_to_json(const ServiceProfile& profile);
ServiceProfile load_profile(const std::filesystem::path& path);

// Per-connection service behaviour, independent of any transport.
class ServiceSession {
public:
    explicit ServiceSession(ServiceScript script);

    // Banner on first call, empty afterwards.
    Bytes take_banner();
    Bytes on_data(ByteView inbound);

private:
    Bytes scripted(ByteView inbound);

    ServiceScript script_;
    bool banner_sent_ = false;
    Bytes pending_;
};

struct TranscriptEvent {
    enum class Direction {
        Inbound,
        Outbound,
    };
    Timestamp at;
    Direction direction = Direction::Inbound;
    Bytes data;
};

struct Transcript {
    std::uint64_t id = 0;
    Endpoint peer;
    ServicePort service;
    Timestamp start;
    Timestamp end;
    Bytes inbound;
    Bytes outbound;
    std::vector<TranscriptEvent> events;
};

struct SocketListen {
    Ipv4Address bind_addr{127, 0, 0, 1};
    // Added to every service port, so tcp/22 can be served unprivileged.
    int port_offset = 0;
};

class HoneypotHandle {
public:
    struct Impl;

    explicit HoneypotHandle(std::unique_ptr<Impl> impl);
    ~HoneypotHandle();

    HoneypotHandle(const HoneypotHandle&) = delete;
    HoneypotHandle& operator=(const HoneypotHandle&) = delete;

    // Stops accepting, closes live connections, joins workers. Idempotent.
    void shutdown();
    bool running() const;
    // Bound service endpoints (socket listeners only).
    std::vector<Endpoint> listening() const;

    Impl& impl() { return *impl_; }

private:
    std::unique_ptr<Impl> impl_;
};

// Attach the profile at profile.identity on the loopback network. Connections
// get the service scripts; raw datagrams get a minimal per-segment responder.
std::unique_ptr<HoneypotHandle> serve(const ServiceProfile& profile, LoopbackNetwork& network);
// Bind OS sockets for every service. Throws Error(BindFailure).
std::unique_ptr<HoneypotHandle> serve(const ServiceProfile& profile, const SocketListen& listen);

// Transcripts ordered by connection start.
std::vector<Transcript> harvest_log(HoneypotHandle& handle);

} // namespace primer
