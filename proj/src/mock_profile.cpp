#include "primer/error.hpp"
#include "primer/mock_honeypot.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace primer {

namespace {

using nlohmann::json;

std::string as_string(const Bytes& b)
{
    return std::string(b.begin(), b.end());
}

ServiceMode parse_mode(const std::string& text)
{
    if (text == "echo") {
        return ServiceMode::Echo;
    }
    if (text == "sink") {
        return ServiceMode::Sink;
    }
    if (text == "scripted") {
        return ServiceMode::Scripted;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown service mode '" + text + "'");
}

std::string mode_name(ServiceMode mode)
{
    switch (mode) {
    case ServiceMode::Echo: return "echo";
    case ServiceMode::Sink: return "sink";
    case ServiceMode::Scripted: return "scripted";
    }
    return "echo";
}

bool starts_with(const Bytes& haystack, const Bytes& prefix)
{
    return prefix.size() <= haystack.size() &&
           std::equal(prefix.begin(), prefix.end(), haystack.begin());
}

} // namespace

ServiceProfile ServiceProfile::default_profile()
{
    ServiceProfile p;
    p.services[ServicePort{IpProtocol::Tcp, 22}] =
        ServiceScript{to_bytes("SSH-2.0-OpenSSH_7.9\r\n"), ServiceMode::Echo, {}};
    p.services[ServicePort{IpProtocol::Tcp, 23}] =
        ServiceScript{to_bytes("login: "), ServiceMode::Echo, {}};
    p.closed_policy = ClosedPolicy::Drop;
    return p;
}

std::set<ServicePort> ServiceProfile::open_ports() const
{
    std::set<ServicePort> ports;
    for (const auto& [port, script] : services) {
        ports.insert(port);
    }
    return ports;
}

ServiceProfile profile_from_json(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("profile is not valid JSON: ") + e.what());
    }
    try {
        ServiceProfile profile;
        if (doc.contains("identity")) {
            profile.identity = Ipv4Address::from_string(doc.at("identity").get<std::string>());
        }
        if (doc.contains("answer_ping")) {
            profile.answer_ping = doc.at("answer_ping").get<bool>();
        }
        const auto policy = doc.value("closed_policy", std::string("drop"));
        if (policy == "drop") {
            profile.closed_policy = ClosedPolicy::Drop;
        } else if (policy == "reject") {
            profile.closed_policy = ClosedPolicy::Reject;
        } else {
            throw Error(ErrorCode::InvalidArgument, "closed_policy must be drop or reject");
        }
        for (const auto& svc : doc.at("services")) {
            auto port = ServicePort::from_string(svc.at("proto").get<std::string>() + "/" +
                                                 std::to_string(svc.at("port").get<int>()));
            ServiceScript script;
            script.banner = to_bytes(svc.value("banner", std::string()));
            script.mode = parse_mode(svc.value("mode", std::string("echo")));
            if (svc.contains("script")) {
                for (const auto& rule : svc.at("script")) {
                    script.script.push_back(ScriptRule{to_bytes(rule.at("trigger").get<std::string>()),
                                                       to_bytes(rule.at("response").get<std::string>())});
                }
            }
            if (!profile.services.emplace(port, std::move(script)).second) {
                throw Error(ErrorCode::InvalidArgument, "duplicate service " + port.to_string());
            }
        }
        return profile;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad profile: ") + e.what());
    }
}

std::string profile_to_json(const ServiceProfile& profile)
{
    json services = json::array();
    for (const auto& [port, script] : profile.services) {
        json svc = {{"proto", protocol_name(static_cast<std::uint8_t>(port.protocol))},
                    {"port", port.port},
                    {"banner", as_string(script.banner)},
                    {"mode", mode_name(script.mode)}};
        if (!script.script.empty()) {
            json rules = json::array();
            for (const auto& r : script.script) {
                rules.push_back({{"trigger", as_string(r.trigger)}, {"response", as_string(r.response)}});
            }
            svc["script"] = rules;
        }
        services.push_back(svc);
    }
    json doc = {{"identity", profile.identity.to_string()},
                {"closed_policy", profile.closed_policy == ClosedPolicy::Drop ? "drop" : "reject"},
                {"answer_ping", profile.answer_ping},
                {"services", services}};
    return doc.dump(2) + "\n";
}

ServiceProfile load_profile(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open profile '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return profile_from_json(buf.str());
}

ServiceSession::ServiceSession(ServiceScript script) : script_(std::move(script)) {}

Bytes ServiceSession::take_banner()
{
    if (banner_sent_) {
        return {};
    }
    banner_sent_ = true;
    return script_.banner;
}

Bytes ServiceSession::on_data(ByteView inbound)
{
    switch (script_.mode) {
    case ServiceMode::Echo:
        return Bytes(inbound.begin(), inbound.end());
    case ServiceMode::Sink:
        return {};
    case ServiceMode::Scripted:
        return scripted(inbound);
    }
    return {};
}

// Longest trigger that prefixes the accumulated input wins and is consumed.
// Input that can no longer start any trigger is discarded a byte at a time.
Bytes ServiceSession::scripted(ByteView inbound)
{
    pending_.insert(pending_.end(), inbound.begin(), inbound.end());
    Bytes out;
    while (!pending_.empty()) {
        const ScriptRule* best = nullptr;
        bool partial = false;
        for (const auto& rule : script_.script) {
            if (rule.trigger.empty()) {
                continue;
            }
            if (starts_with(pending_, rule.trigger)) {
                if (!best || rule.trigger.size() > best->trigger.size()) {
                    best = &rule;
                }
            } else if (starts_with(rule.trigger, pending_)) {
                partial = true;
            }
        }
        if (best) {
            out.insert(out.end(), best->response.begin(), best->response.end());
            pending_.erase(pending_.begin(), pending_.begin() + static_cast<long>(best->trigger.size()));
            continue;
        }
        if (partial) {
            break;
        }
        pending_.erase(pending_.begin());
    }
    return out;
}

} // namespace primer
