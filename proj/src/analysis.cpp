#include "primer/analysis.hpp"

#include "primer/error.hpp"
#include "primer/packet_codec.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace primer {

namespace {

using FlowKey = std::tuple<Ipv4Address, std::uint16_t, Ipv4Address, std::uint16_t>;

std::optional<ParsedPacket> try_decode(const PacketRecord& record, LinkType link_type)
{
    try {
        return decode_packet(record, link_type);
    } catch (const Error&) {
        return std::nullopt;
    }
}

} // namespace

ConversationTable conversation_table(const CaptureFile& capture, ConversationOptions options)
{
    ConversationTable table;
    std::map<FlowKey, std::size_t> index;

    for (const auto& record : capture.records) {
        auto p = try_decode(record, capture.link_type);
        if (!p) {
            ++table.undecodable;
            continue;
        }
        FlowKey key{p->ip.src_addr, p->src_port(), p->ip.dst_addr, p->dst_port()};
        auto it = index.find(key);
        if (it == index.end() && options.bidirectional) {
            it = index.find(FlowKey{p->ip.dst_addr, p->dst_port(), p->ip.src_addr, p->src_port()});
        }
        if (it == index.end()) {
            it = index.emplace(key, table.rows.size()).first;
            table.rows.push_back(ConversationStats{p->ip.src_addr, p->src_port(), p->ip.dst_addr,
                                                   p->dst_port(), 0, 0});
        }
        auto& row = table.rows[it->second];
        row.packets += 1;
        row.bytes += record.original_len;
    }

    if (options.order == ConversationOrder::Address) {
        std::stable_sort(table.rows.begin(), table.rows.end(),
                         [](const ConversationStats& a, const ConversationStats& b) {
                             return std::tie(a.addr_a, a.addr_b) < std::tie(b.addr_a, b.addr_b);
                         });
    }
    return table;
}

std::uint64_t AccuracyReport::reply_percent() const
{
    if (total_packets == 0) {
        return 0;
    }
    return (packets_from_target * 100) / total_packets;
}

AccuracyReport accuracy_report(const CaptureFile& capture, Ipv4Address target,
                               const std::set<ServicePort>& open_ports)
{
    AccuracyReport report;
    report.target = target;
    report.open_ports = open_ports;

    std::set<Ipv4Address> sources;
    std::set<std::uint16_t> dst_ports;
    std::map<std::pair<std::uint8_t, std::uint16_t>, std::uint64_t> extraneous;

    for (const auto& record : capture.records) {
        auto p = try_decode(record, capture.link_type);
        if (!p) {
            ++report.undecodable;
            continue;
        }
        ++report.total_packets;
        if (p->ip.src_addr == target) {
            ++report.packets_from_target;
        }
        if (p->ip.dst_addr != target) {
            continue;
        }
        ++report.total_toward_target;
        sources.insert(p->ip.src_addr);

        const bool has_port = p->tcp() || p->udp();
        if (has_port) {
            dst_ports.insert(p->dst_port());
            ServicePort service{static_cast<IpProtocol>(p->ip.protocol), p->dst_port()};
            if (open_ports.contains(service)) {
                ++report.on_service;
                continue;
            }
        }
        ++report.off_service;
        ++extraneous[{p->ip.protocol, p->dst_port()}];
    }

    report.distinct_sources = sources.size();
    report.distinct_dst_ports = dst_ports.size();
    for (const auto& [key, count] : extraneous) {
        report.extraneous_ports.push_back(ExtraneousPort{key.first, key.second, count});
    }
    if (report.total_toward_target > 0) {
        report.accuracy = static_cast<double>(report.on_service) /
                          static_cast<double>(report.total_toward_target);
    }
    if (report.total_packets > 0) {
        report.reply_fraction = static_cast<double>(report.packets_from_target) /
                                static_cast<double>(report.total_packets);
    }
    return report;
}

const SourceBurst* VolumeSeries::burst_for(Ipv4Address source) const
{
    auto it = std::find_if(bursts.begin(), bursts.end(),
                           [&](const SourceBurst& b) { return b.source == source; });
    return it == bursts.end() ? nullptr : &*it;
}

VolumeSeries volume_series(const CaptureFile& capture, std::chrono::microseconds bin_width)
{
    if (bin_width.count() <= 0) {
        throw Error(ErrorCode::InvalidArgument, "bin width must be positive");
    }
    if (capture.records.empty()) {
        throw Error(ErrorCode::EmptyCapture, "volume series needs at least one packet");
    }

    VolumeSeries series;
    series.bin_width = bin_width;
    series.packets = capture.records.size();

    std::vector<std::int64_t> times;
    times.reserve(capture.records.size());
    for (const auto& r : capture.records) {
        times.push_back(r.timestamp().micros());
    }
    const auto [min_it, max_it] = std::minmax_element(times.begin(), times.end());
    const std::int64_t origin = *min_it;
    const auto width = bin_width.count();
    const auto bin_count = static_cast<std::size_t>((*max_it - origin) / width) + 1;
    series.bins.resize(bin_count);
    for (std::size_t i = 0; i < bin_count; ++i) {
        series.bins[i].start = Timestamp::from_micros(origin + static_cast<std::int64_t>(i) * width);
    }

    std::map<Ipv4Address, std::size_t> burst_index;
    for (std::size_t i = 0; i < capture.records.size(); ++i) {
        const auto& record = capture.records[i];
        auto& bin = series.bins[static_cast<std::size_t>((times[i] - origin) / width)];
        bin.packets += 1;
        bin.bytes += record.original_len;

        auto p = try_decode(record, capture.link_type);
        if (!p) {
            continue;
        }
        auto ts = record.timestamp();
        auto [it, inserted] = burst_index.emplace(p->ip.src_addr, series.bursts.size());
        if (inserted) {
            series.bursts.push_back(SourceBurst{p->ip.src_addr, ts, ts, 0});
        }
        auto& burst = series.bursts[it->second];
        burst.first = std::min(burst.first, ts);
        burst.last = std::max(burst.last, ts);
        burst.packets += 1;
    }

    if (times.size() > 1) {
        std::vector<std::int64_t> sorted = times;
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::int64_t> gaps;
        gaps.reserve(sorted.size() - 1);
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            gaps.push_back(sorted[i] - sorted[i - 1]);
        }
        GapStats stats;
        stats.count = gaps.size();
        long double total = 0;
        for (auto g : gaps) {
            total += static_cast<long double>(g);
        }
        stats.mean_us = static_cast<double>(total / static_cast<long double>(gaps.size()));
        std::sort(gaps.begin(), gaps.end());
        stats.min = std::chrono::microseconds(gaps.front());
        stats.max = std::chrono::microseconds(gaps.back());
        const auto mid = gaps.size() / 2;
        stats.median_us = (gaps.size() % 2 == 1)
                              ? static_cast<double>(gaps[mid])
                              : (static_cast<double>(gaps[mid - 1]) + static_cast<double>(gaps[mid])) / 2.0;
        series.gaps = stats;
    }
    return series;
}

} // namespace primer
