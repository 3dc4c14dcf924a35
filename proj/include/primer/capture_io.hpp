#pragma once

#include "primer/net_types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace primer {

enum class LinkType : std::uint32_t {
    Ethernet = 1,
    RawIp = 101,
};

// Relative to the host: Native files carry magic 0xa1b2c3d4 in host order.
enum class ByteOrder {
    Native,
    Swapped,
};

struct PacketRecord {
    std::uint32_t ts_sec = 0;
    std::uint32_t ts_usec = 0;
    std::uint32_t captured_len = 0;
    std::uint32_t original_len = 0;
    Bytes data;

    static PacketRecord from_frame(Timestamp at, Bytes frame);
    Timestamp timestamp() const { return Timestamp{ts_sec, ts_usec}; }

    bool operator==(const PacketRecord&) const = default;
};

struct CaptureFile {
    LinkType link_type = LinkType::Ethernet;
    std::uint32_t snap_len = 65535;
    // Encoding metadata only; not part of content equality.
    ByteOrder byte_order = ByteOrder::Native;
    std::vector<PacketRecord> records;

    bool operator==(const CaptureFile& other) const
    {
        return link_type == other.link_type && snap_len == other.snap_len &&
               records == other.records;
    }
};

inline constexpr std::size_t kPcapGlobalHeaderSize = 24;
inline constexpr std::size_t kPcapRecordHeaderSize = 16;

CaptureFile read_capture(ByteView source);
CaptureFile read_capture(std::istream& source);

Bytes write_capture(const CaptureFile& capture, ByteOrder order);
void write_capture(const CaptureFile& capture, ByteOrder order, std::ostream& sink);

// Path helpers; "-" selects stdin/stdout. I/O failures raise Error(Io).
CaptureFile load_capture(const std::filesystem::path& path);
void save_capture(const CaptureFile& capture, const std::filesystem::path& path,
                  ByteOrder order = ByteOrder::Native);

} // namespace primer
