#include "primer/report.hpp"

#include <cstdio>
#include <sstream>

namespace primer {

namespace {

double seconds(std::chrono::microseconds d)
{
    return static_cast<double>(d.count()) / 1e6;
}

} // namespace

std::string conversation_tsv(const std::vector<ConversationStats>& rows)
{
    std::ostringstream out;
    out << kConversationTsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.addr_a.to_string() << '\t' << r.port_a << '\t' << r.addr_b.to_string() << '\t'
            << r.port_b << '\t' << r.packets << '\t' << r.bytes << '\n';
    }
    return out.str();
}

void to_json(nlohmann::json& j, const ConversationStats& row)
{
    j = nlohmann::json{{"addr_a", row.addr_a.to_string()}, {"port_a", row.port_a},
                       {"addr_b", row.addr_b.to_string()}, {"port_b", row.port_b},
                       {"packets", row.packets},           {"bytes", row.bytes}};
}

void to_json(nlohmann::json& j, const AccuracyReport& report)
{
    auto open = nlohmann::json::array();
    for (const auto& sp : report.open_ports) {
        open.push_back(sp.to_string());
    }
    auto extraneous = nlohmann::json::array();
    for (const auto& e : report.extraneous_ports) {
        extraneous.push_back(
            {{"proto", protocol_name(e.protocol)}, {"port", e.port}, {"packets", e.packets}});
    }
    j = nlohmann::json{
        {"target", report.target.to_string()},
        {"open_ports", open},
        {"total_toward_target", report.total_toward_target},
        {"on_service", report.on_service},
        {"off_service", report.off_service},
        {"accuracy", report.accuracy},
        {"reply_fraction", report.reply_fraction},
        {"reply_percent", std::to_string(report.reply_percent()) + "%"},
        {"packets_from_target", report.packets_from_target},
        {"total_packets", report.total_packets},
        {"distinct_sources", report.distinct_sources},
        {"distinct_dst_ports", report.distinct_dst_ports},
        {"extraneous_ports", extraneous},
        {"undecodable", report.undecodable},
    };
}

void to_json(nlohmann::json& j, const VolumeSeries& series)
{
    auto bins = nlohmann::json::array();
    for (const auto& b : series.bins) {
        bins.push_back({{"start", b.start.seconds()}, {"packets", b.packets}, {"bytes", b.bytes}});
    }
    nlohmann::json gaps = nullptr;
    if (series.gaps) {
        gaps = {{"count", series.gaps->count},
                {"min", seconds(series.gaps->min)},
                {"max", seconds(series.gaps->max)},
                {"mean", series.gaps->mean_us / 1e6},
                {"median", series.gaps->median_us / 1e6}};
    }
    auto bursts = nlohmann::json::array();
    for (const auto& b : series.bursts) {
        bursts.push_back({{"source", b.source.to_string()},
                          {"packets", b.packets},
                          {"first", b.first.seconds()},
                          {"last", b.last.seconds()},
                          {"window", seconds(b.window())}});
    }
    j = nlohmann::json{{"bin_width", seconds(series.bin_width)},
                       {"packets", series.packets},
                       {"bins", bins},
                       {"gaps", gaps},
                       {"burst_window", bursts}};
}

std::string format_ratio(double value)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", value);
    return buf;
}

std::string accuracy_text(const AccuracyReport& r)
{
    std::ostringstream out;
    out << "target: " << r.target.to_string() << '\n';
    out << "open_ports:";
    for (const auto& sp : r.open_ports) {
        out << ' ' << sp.to_string();
    }
    out << '\n';
    out << "total_toward_target: " << r.total_toward_target << '\n';
    out << "on_service: " << r.on_service << '\n';
    out << "off_service: " << r.off_service << '\n';
    out << "accuracy: " << format_ratio(r.accuracy) << " (" << r.on_service << '/'
        << r.total_toward_target << ")\n";
    out << "reply_fraction: " << r.reply_percent() << "% (" << r.packets_from_target << '/'
        << r.total_packets << ")\n";
    out << "distinct_sources: " << r.distinct_sources << '\n';
    out << "distinct_dst_ports: " << r.distinct_dst_ports << '\n';
    out << "extraneous_ports:";
    for (const auto& e : r.extraneous_ports) {
        out << ' ' << protocol_name(e.protocol) << '/' << e.port << 'x' << e.packets;
    }
    out << '\n';
    return out.str();
}

std::string volume_csv(const VolumeSeries& series)
{
    std::ostringstream out;
    out << "bin_start,packets,bytes\n";
    if (series.bins.empty()) {
        return out.str();
    }
    const auto origin = series.bins.front().start;
    for (const auto& b : series.bins) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", seconds(b.start - origin));
        out << buf << ',' << b.packets << ',' << b.bytes << '\n';
    }
    return out.str();
}

} // namespace primer
