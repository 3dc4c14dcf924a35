#include "primer/cli.hpp"

#include "primer/analysis.hpp"
#include "primer/capture_io.hpp"
#include "primer/loopback.hpp"
#include "primer/mock_honeypot.hpp"
#include "primer/replay.hpp"
#include "primer/report.hpp"
#include "primer/rewrite.hpp"
#include "primer/socket_transport.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

namespace primer::cli {

namespace {

using nlohmann::json;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int)
{
    g_interrupted.store(true);
}

void configure_logging()
{
    static const bool once = [] {
        auto logger = spdlog::stderr_color_mt("primer");
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)once;
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("PRIMER_LOG")) {
        level = spdlog::level::from_str(env);
    }
    spdlog::set_level(level);
}

CaptureFile read_input(const std::string& path)
{
    return load_capture(path);
}

void write_output(const CaptureFile& capture, const std::string& path, std::ostream& out)
{
    if (path == "-") {
        write_capture(capture, ByteOrder::Native, out);
        out.flush();
        return;
    }
    save_capture(capture, path);
}

std::set<ServicePort> parse_ports(const std::vector<std::string>& items)
{
    std::set<ServicePort> ports;
    for (const auto& item : items) {
        ports.insert(ServicePort::from_string(item));
    }
    return ports;
}

struct MapFlags {
    std::vector<std::string> ip;
    std::vector<std::string> port;
    std::vector<std::string> mac;

    void attach(CLI::App& cmd)
    {
        cmd.add_option("--map", ip, "Address substitution OLD=NEW");
        cmd.add_option("--port-map", port, "Port substitution PROTO/OLD=NEW");
        cmd.add_option("--mac-map", mac, "MAC substitution OLD=NEW");
    }

    RewriteSpec spec() const
    {
        RewriteSpec s;
        for (const auto& m : ip) {
            s.add_ip_mapping(m);
        }
        for (const auto& m : port) {
            s.add_port_mapping(m);
        }
        for (const auto& m : mac) {
            s.add_mac_mapping(m);
        }
        return s;
    }
};

struct ReplayFlags {
    std::string mode = "auto";
    std::string timing = "as-recorded";
    double rate = 0.0;
    double scale = 1.0;
    double reply_window = 2.0;
    double connect_timeout = 1.0;
    std::vector<std::string> only_ports;
    bool fail_fast = false;
    std::string profile;
    std::string out;

    void attach(CLI::App& cmd)
    {
        cmd.add_option("--mode", mode, "auto, raw or session")->check(CLI::IsMember({"auto", "raw", "session"}));
        cmd.add_option("--timing", timing, "as-recorded, compressed or fixed-rate")
            ->check(CLI::IsMember({"as-recorded", "compressed", "fixed-rate"}));
        cmd.add_option("--rate", rate, "Packets per second for fixed-rate timing");
        cmd.add_option("--scale", scale, "Multiplier on recorded gaps");
        cmd.add_option("--reply-window", reply_window, "Seconds to keep listening after the last send");
        cmd.add_option("--connect-timeout", connect_timeout, "Seconds per connection attempt");
        cmd.add_option("--only-ports", only_ports, "Replay only these PROTO/PORT services")->delimiter(',');
        cmd.add_flag("--fail-fast", fail_fast, "Abort on the first send failure");
        cmd.add_option("--profile", profile, "Mock honeypot profile (JSON)");
        cmd.add_option("--out", out, "Write the session capture here");
    }

    TimingPolicy policy() const
    {
        TimingPolicy p;
        if (timing == "compressed") {
            p = TimingPolicy::compressed();
        } else if (timing == "fixed-rate") {
            p = TimingPolicy::fixed_rate(rate);
        } else {
            p = TimingPolicy::as_recorded(scale);
        }
        p.validate();
        return p;
    }

    ReplayMode resolve_mode(const CaptureFile& capture, Ipv4Address attacker) const
    {
        if (auto m = parse_replay_mode(mode)) {
            return *m;
        }
        return default_mode_for(capture, attacker);
    }

    PlanOptions plan_options() const
    {
        PlanOptions o;
        if (!only_ports.empty()) {
            o.only_ports = parse_ports(only_ports);
        }
        return o;
    }

    ReplayOptions replay_options() const
    {
        if (!(reply_window >= 0.0) || !(connect_timeout > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "windows and timeouts must be positive");
        }
        ReplayOptions o;
        o.reply_window = std::chrono::milliseconds(std::llround(reply_window * 1000.0));
        o.connect_timeout = std::chrono::milliseconds(std::llround(connect_timeout * 1000.0));
        o.fail_fast = fail_fast;
        return o;
    }

    ServiceProfile load() const
    {
        return profile.empty() ? ServiceProfile::default_profile() : load_profile(profile);
    }
};

struct Context {
    std::ostream& out;
    std::ostream& err;
};

int cmd_rewrite(Context& ctx, const std::string& in, const std::string& out, const MapFlags& maps,
                bool skip_bad)
{
    auto spec = maps.spec();
    auto capture = read_input(in);
    auto result = rewrite_capture(capture, spec,
                                  skip_bad ? DecodeFailurePolicy::SkipAndWarn : DecodeFailurePolicy::Abort);
    for (const auto& w : result.warnings) {
        ctx.err << "warning: record " << w.record_index << ": " << w.message << "\n";
    }
    write_output(result.capture, out, ctx.out);
    std::ostream& report = out == "-" ? ctx.err : ctx.out;
    for (const auto& [from, to] : spec.ip_map()) {
        auto it = result.stats.ip_hits.find(from);
        report << "ip " << from.to_string() << "=" << to.to_string() << ": "
               << (it == result.stats.ip_hits.end() ? 0 : it->second) << "\n";
    }
    for (const auto& [from, to] : spec.port_map()) {
        auto it = result.stats.port_hits.find(from);
        report << "port " << from.to_string() << "=" << to << ": "
               << (it == result.stats.port_hits.end() ? 0 : it->second) << "\n";
    }
    for (const auto& [from, to] : spec.mac_map()) {
        auto it = result.stats.mac_hits.find(from);
        report << "mac " << from.to_string() << "=" << to.to_string() << ": "
               << (it == result.stats.mac_hits.end() ? 0 : it->second) << "\n";
    }
    report << "records: " << result.capture.records.size() << "\n";
    return kExitOk;
}

struct ReplayOutcome {
    ReplayPlan plan;
    ReplaySession session;
    CaptureFile capture;
    ServiceProfile profile;
};

ReplayOutcome replay_loopback(const CaptureFile& capture, Ipv4Address attacker, Ipv4Address target,
                              const ReplayFlags& flags, ServiceProfile profile)
{
    auto mode = flags.resolve_mode(capture, attacker);
    auto plan = build_replay_plan(capture, attacker, target, mode, flags.policy(), flags.plan_options());
    profile.identity = target;
    LoopbackNetwork network;
    auto honeypot = serve(profile, network);
    ReplaySession session;
    {
        LoopbackTransport transport(network, attacker);
        session = execute_replay(plan, transport, flags.replay_options());
    }
    honeypot->shutdown();
    auto merged = session_to_capture(session);
    return {std::move(plan), std::move(session), std::move(merged), std::move(profile)};
}

void print_session_summary(std::ostream& os, const ReplayOutcome& r)
{
    os << "mode: " << to_string(r.plan.mode) << "\n";
    os << "sent: " << r.session.sent.size() << "\n";
    os << "received: " << r.session.received.size() << "\n";
    os << "failures: " << r.session.failures.size() << "\n";
    for (const auto& f : r.session.failures) {
        os << "  entry " << f.entry_index << ": " << f.message << "\n";
    }
}

int cmd_replay(Context& ctx, const std::string& in, const std::string& attacker_text,
               const std::string& target_text, const std::string& transport_name, bool unsafe_raw,
               int port_offset, const MapFlags& maps, const ReplayFlags& flags)
{
    const auto attacker = Ipv4Address::from_string(attacker_text);
    const auto target = Ipv4Address::from_string(target_text);
    auto spec = maps.spec();
    auto capture = read_input(in);
    if (!spec.empty()) {
        capture = rewrite_capture(capture, spec).capture;
    }
    ReplayOutcome r;
    if (transport_name == "loopback") {
        r = replay_loopback(capture, attacker, target, flags, flags.load());
    } else {
        auto mode = flags.resolve_mode(capture, attacker);
        r.plan = build_replay_plan(capture, attacker, target, mode, flags.policy(), flags.plan_options());
        SocketTransportOptions topts;
        topts.allow_raw = unsafe_raw;
        SocketTransport transport(topts);
        auto ropts = flags.replay_options();
        ropts.service_port_offset = port_offset;
        r.session = execute_replay(r.plan, transport, ropts);
        r.capture = session_to_capture(r.session);
    }
    if (!flags.out.empty()) {
        write_output(r.capture, flags.out, ctx.out);
    }
    print_session_summary(flags.out == "-" ? ctx.err : ctx.out, r);
    return kExitOk;
}

int cmd_analyze(Context& ctx, const std::string& in, const std::string& target_text,
                const std::vector<std::string>& open_ports, const std::string& format,
                const std::string& sort, bool bidirectional)
{
    std::optional<Ipv4Address> target;
    if (!target_text.empty()) {
        target = Ipv4Address::from_string(target_text);
    }
    const auto ports = parse_ports(open_ports);
    auto capture = read_input(in);
    ConversationOptions options;
    options.order = sort == "addr" ? ConversationOrder::Address : ConversationOrder::FirstSeen;
    options.bidirectional = bidirectional;
    auto table = conversation_table(capture, options);
    if (format == "json") {
        json doc = {{"conversations", table.rows}, {"undecodable", table.undecodable}};
        if (target) {
            doc["accuracy"] = accuracy_report(capture, *target, ports);
        }
        ctx.out << doc.dump(2) << "\n";
        return kExitOk;
    }
    ctx.out << conversation_tsv(table.rows);
    if (table.undecodable != 0) {
        ctx.err << "undecodable records: " << table.undecodable << "\n";
    }
    if (target) {
        ctx.out << "\n" << accuracy_text(accuracy_report(capture, *target, ports));
    }
    return kExitOk;
}

int cmd_volume(Context& ctx, const std::string& in, double bin_width, const std::string& format)
{
    if (!(bin_width > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "bin width must be positive");
    }
    auto capture = read_input(in);
    auto series = volume_series(capture, std::chrono::microseconds(std::llround(bin_width * 1e6)));
    if (format == "json") {
        ctx.out << json(series).dump(2) << "\n";
    } else {
        ctx.out << volume_csv(series);
    }
    return kExitOk;
}

json transcript_json(const Transcript& t)
{
    return {{"id", t.id},
            {"peer", t.peer.to_string()},
            {"service", t.service.to_string()},
            {"start", t.start.seconds()},
            {"end", t.end.seconds()},
            {"inbound_bytes", t.inbound.size()},
            {"outbound_bytes", t.outbound.size()}};
}

int cmd_serve_mock(Context& ctx, const std::string& profile_path, const std::string& bind,
                   int port_offset, double duration)
{
    auto profile = profile_path.empty() ? ServiceProfile::default_profile() : load_profile(profile_path);
    SocketListen listen;
    listen.bind_addr = Ipv4Address::from_string(bind);
    listen.port_offset = port_offset;
    auto handle = serve(profile, listen);
    for (const auto& ep : handle->listening()) {
        ctx.out << "listening " << ep.to_string() << "\n";
    }
    ctx.out.flush();
    g_interrupted.store(false);
    auto previous_int = std::signal(SIGINT, on_signal);
    auto previous_term = std::signal(SIGTERM, on_signal);
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(std::llround(duration * 1000.0));
    while (!g_interrupted.load() && (duration <= 0.0 || std::chrono::steady_clock::now() < deadline)) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    std::signal(SIGINT, previous_int);
    std::signal(SIGTERM, previous_term);
    handle->shutdown();
    json log = json::array();
    for (const auto& t : harvest_log(*handle)) {
        log.push_back(transcript_json(t));
    }
    ctx.out << log.dump(2) << "\n";
    return kExitOk;
}

int cmd_calibrate(Context& ctx, const std::string& in, const std::string& attacker_text,
                  const std::string& target_text, const std::string& source_text, double min_accuracy,
                  double min_reply_fraction, const std::string& format, const ReplayFlags& flags)
{
    const auto attacker = Ipv4Address::from_string(attacker_text);
    const auto target = Ipv4Address::from_string(target_text);
    const auto source = Ipv4Address::from_string(source_text);
    auto profile = flags.load();
    auto capture = read_input(in);
    RewriteSpec spec;
    if (attacker != source) {
        spec.map_ip(attacker, source);
    }
    if (target != profile.identity) {
        spec.map_ip(target, profile.identity);
    }
    if (!spec.empty()) {
        capture = rewrite_capture(capture, spec).capture;
    }
    auto r = replay_loopback(capture, source, profile.identity, flags, profile);
    if (!flags.out.empty()) {
        write_output(r.capture, flags.out, ctx.out);
    }
    auto report = accuracy_report(r.capture, profile.identity, profile.open_ports());
    double burst = 0.0;
    if (!r.capture.records.empty()) {
        auto series = volume_series(r.capture, std::chrono::milliseconds(10));
        if (const auto* b = series.burst_for(source)) {
            burst = static_cast<double>(b->window().count()) / 1e6;
        }
    }
    const bool accuracy_ok = report.accuracy >= min_accuracy;
    const bool reply_ok = report.reply_fraction >= min_reply_fraction;
    const bool pass = accuracy_ok && reply_ok;
    std::ostream& os = flags.out == "-" ? ctx.err : ctx.out;
    if (format == "json") {
        json doc = {{"mode", to_string(r.plan.mode)},
                    {"sent", r.session.sent.size()},
                    {"received", r.session.received.size()},
                    {"failures", r.session.failures.size()},
                    {"accuracy", report.accuracy},
                    {"on_service", report.on_service},
                    {"total_toward_target", report.total_toward_target},
                    {"reply_fraction", report.reply_fraction},
                    {"reply_percent", std::to_string(report.reply_percent()) + "%"},
                    {"burst_window", burst},
                    {"thresholds", {{"min_accuracy", min_accuracy}, {"min_reply_fraction", min_reply_fraction}}},
                    {"accuracy_pass", accuracy_ok},
                    {"reply_fraction_pass", reply_ok},
                    {"pass", pass}};
        os << doc.dump(2) << "\n";
    } else {
        print_session_summary(os, r);
        os << accuracy_text(report);
        os << "burst_window: " << format_ratio(burst) << " s\n";
        os << "accuracy >= " << format_ratio(min_accuracy) << ": " << (accuracy_ok ? "pass" : "fail") << "\n";
        os << "reply_fraction >= " << format_ratio(min_reply_fraction) << ": "
           << (reply_ok ? "pass" : "fail") << "\n";
        os << "result: " << (pass ? "pass" : "fail") << "\n";
    }
    return pass ? kExitOk : kExitThreshold;
}

} // namespace

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::BadMagic:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::Truncated:
    case ErrorCode::UnsupportedLinkType:
    case ErrorCode::InvariantViolation:
    case ErrorCode::TruncatedHeader:
    case ErrorCode::FragmentedPacket:
    case ErrorCode::NotIPv4:
    case ErrorCode::LengthOverflow:
    case ErrorCode::DecodeFailure:
        return kExitDecode;
    case ErrorCode::TransportUnavailable:
    case ErrorCode::SendFailure:
    case ErrorCode::BindFailure:
        return kExitTransport;
    case ErrorCode::AttackerNotFound:
    case ErrorCode::NoSelectableTraffic:
    case ErrorCode::EmptyCapture:
        return kExitEmptySelection;
    case ErrorCode::InvalidArgument:
    case ErrorCode::Io:
        return kExitIo;
    }
    return kExitIo;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    configure_logging();
    Context ctx{out, err};

    CLI::App app{"Replay, rewrite and analyze honeypot calibration traffic", "primer"};
    app.require_subcommand(1);

    std::string pcap;
    std::string out_path;
    std::string attacker;
    std::string target;
    std::string transport = "loopback";
    std::string format;
    std::string sort = "first-seen";
    std::string bind = "127.0.0.1";
    std::string source = "192.168.1.5";
    std::vector<std::string> open_ports;
    bool skip_bad = false;
    bool unsafe_raw = false;
    bool bidirectional = false;
    int port_offset = 0;
    double duration = 0.0;
    double bin_width = 0.01;
    double min_accuracy = 0.7;
    double min_reply_fraction = 0.38;
    MapFlags maps;
    ReplayFlags replay_flags;

    auto* rewrite = app.add_subcommand("rewrite", "Substitute addresses, ports and MACs; reset checksums");
    rewrite->add_option("--pcap", pcap, "Input capture ('-' for stdin)")->required();
    rewrite->add_option("--out", out_path, "Output capture ('-' for stdout)")->required();
    rewrite->add_flag("--skip-bad", skip_bad, "Drop undecodable records instead of failing");
    maps.attach(*rewrite);

    auto* replay = app.add_subcommand("replay", "Send the attacker side of a capture to a target");
    replay->add_option("--pcap", pcap, "Input capture")->required();
    replay->add_option("--attacker", attacker, "Source address whose packets are replayed")->required();
    replay->add_option("--target", target, "Destination endpoint address")->required();
    replay->add_option("--transport", transport, "loopback (in-process mock) or os")
        ->check(CLI::IsMember({"loopback", "os"}));
    replay->add_flag("--unsafe-raw", unsafe_raw, "Allow raw IPv4 injection over OS sockets");
    replay->add_option("--port-offset", port_offset, "Added to service ports when connecting");
    maps.attach(*replay);
    replay_flags.attach(*replay);

    auto* analyze = app.add_subcommand("analyze", "Conversation table and accuracy report");
    analyze->add_option("--pcap", pcap, "Input capture")->required();
    analyze->add_option("--target", target, "Honeypot address for the accuracy report");
    analyze->add_option("--open-ports", open_ports, "Open services, e.g. tcp/22,tcp/23")->delimiter(',');
    analyze->add_option("--format", format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));
    analyze->add_option("--sort", sort, "first-seen or addr")->check(CLI::IsMember({"first-seen", "addr"}));
    analyze->add_flag("--bidirectional", bidirectional, "Merge both directions into one row");

    auto* serve_mock = app.add_subcommand("serve-mock", "Run the mock honeypot on OS sockets");
    serve_mock->add_option("--profile", replay_flags.profile, "Profile (JSON)");
    serve_mock->add_option("--bind", bind, "Listen address");
    serve_mock->add_option("--port-offset", port_offset, "Added to every service port");
    serve_mock->add_option("--duration", duration, "Seconds to run; 0 runs until interrupted");

    auto* calibrate = app.add_subcommand("calibrate", "Replay against the in-process mock and score it");
    calibrate->add_option("--pcap", pcap, "Attack capture")->required();
    calibrate->add_option("--attacker", attacker, "Recorded attacker address")->required();
    calibrate->add_option("--target", target, "Recorded target address")->required();
    calibrate->add_option("--source", source, "Replayer address on the loopback network");
    calibrate->add_option("--min-accuracy", min_accuracy, "Accuracy threshold");
    calibrate->add_option("--min-reply-fraction", min_reply_fraction, "Reply fraction threshold");
    calibrate->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
    replay_flags.attach(*calibrate);

    auto* volume = app.add_subcommand("volume", "Packet volume bins and gap statistics");
    volume->add_option("--pcap", pcap, "Input capture")->required();
    volume->add_option("--bin-width", bin_width, "Bin width in seconds");
    volume->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitIo;
    }

    try {
        if (rewrite->parsed()) {
            return cmd_rewrite(ctx, pcap, out_path, maps, skip_bad);
        }
        if (replay->parsed()) {
            return cmd_replay(ctx, pcap, attacker, target, transport, unsafe_raw, port_offset, maps,
                              replay_flags);
        }
        if (analyze->parsed()) {
            return cmd_analyze(ctx, pcap, target, open_ports, format.empty() ? "tsv" : format, sort,
                               bidirectional);
        }
        if (serve_mock->parsed()) {
            return cmd_serve_mock(ctx, replay_flags.profile, bind, port_offset, duration);
        }
        if (calibrate->parsed()) {
            return cmd_calibrate(ctx, pcap, attacker, target, source, min_accuracy, min_reply_fraction,
                                 format.empty() ? "text" : format, replay_flags);
        }
        if (volume->parsed()) {
            return cmd_volume(ctx, pcap, bin_width, format.empty() ? "csv" : format);
        }
    } catch (const Error& e) {
        err << "primer: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "primer: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitIo;
}

} // namespace primer::cli
