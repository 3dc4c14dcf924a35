#include "primer/capture_io.hpp"

#include "primer/error.hpp"

#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>

namespace primer {

namespace {

constexpr std::uint32_t kMagicMicros = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNanos = 0xa1b23c4d;
constexpr std::uint32_t kMagicPcapng = 0x0a0d0d0a;

std::uint32_t load_host_u32(const std::uint8_t* p)
{
    std::uint32_t v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

std::uint32_t swap32(std::uint32_t v)
{
    return ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
}

std::uint16_t swap16(std::uint16_t v)
{
    return static_cast<std::uint16_t>((v << 8) | (v >> 8));
}

class FieldReader {
public:
    FieldReader(ByteView data, bool swapped) : data_(data), swapped_(swapped) {}

    std::uint32_t u32(std::size_t offset) const
    {
        auto v = load_host_u32(data_.data() + offset);
        return swapped_ ? swap32(v) : v;
    }

    std::uint16_t u16(std::size_t offset) const
    {
        std::uint16_t v;
        std::memcpy(&v, data_.data() + offset, sizeof v);
        return swapped_ ? swap16(v) : v;
    }

private:
    ByteView data_;
    bool swapped_;
};

class FieldWriter {
public:
    FieldWriter(Bytes& out, bool swapped) : out_(out), swapped_(swapped) {}

    void u32(std::uint32_t v)
    {
        if (swapped_) {
            v = swap32(v);
        }
        append(&v, sizeof v);
    }

    void u16(std::uint16_t v)
    {
        if (swapped_) {
            v = swap16(v);
        }
        append(&v, sizeof v);
    }

private:
    void append(const void* p, std::size_t n)
    {
        auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }

    Bytes& out_;
    bool swapped_;
};

void check_record(const PacketRecord& r, std::uint32_t snap_len, std::size_t index)
{
    if (r.data.size() != r.captured_len) {
        throw Error(ErrorCode::InvariantViolation,
                    "record captured_len " + std::to_string(r.captured_len) +
                        " does not match data length " + std::to_string(r.data.size()),
                    index);
    }
    if (r.captured_len > r.original_len) {
        throw Error(ErrorCode::InvariantViolation, "record captured_len exceeds original_len",
                    index);
    }
    if (r.captured_len > snap_len) {
        throw Error(ErrorCode::InvariantViolation, "record captured_len exceeds snap_len", index);
    }
    if (r.ts_usec >= 1'000'000) {
        throw Error(ErrorCode::InvariantViolation, "record ts_usec out of range", index);
    }
}

} // namespace

PacketRecord PacketRecord::from_frame(Timestamp at, Bytes frame)
{
    PacketRecord r;
    r.ts_sec = static_cast<std::uint32_t>(at.sec);
    r.ts_usec = at.usec;
    r.captured_len = static_cast<std::uint32_t>(frame.size());
    r.original_len = r.captured_len;
    r.data = std::move(frame);
    return r;
}

CaptureFile read_capture(ByteView source)
{
    if (source.size() < 4) {
        throw Error(ErrorCode::Truncated, "capture shorter than the pcap magic");
    }
    const std::uint32_t magic = load_host_u32(source.data());
    bool swapped = false;
    if (magic == kMagicMicros) {
        swapped = false;
    } else if (magic == swap32(kMagicMicros)) {
        swapped = true;
    } else if (magic == kMagicNanos || magic == swap32(kMagicNanos)) {
        throw Error(ErrorCode::UnsupportedFormat,
                    "nanosecond-resolution pcap is not supported; convert to microsecond pcap");
    } else if (magic == kMagicPcapng) {
        throw Error(ErrorCode::UnsupportedFormat,
                    "pcapng is not supported; convert to classic pcap (e.g. editcap -F pcap)");
    } else {
        throw Error(ErrorCode::BadMagic, "unrecognized capture magic");
    }
    if (source.size() < kPcapGlobalHeaderSize) {
        throw Error(ErrorCode::Truncated, "pcap global header shorter than 24 bytes");
    }

    FieldReader header(source, swapped);
    const auto version_major = header.u16(4);
    if (version_major != 2) {
        throw Error(ErrorCode::UnsupportedFormat,
                    "pcap major version " + std::to_string(version_major) + " is not supported");
    }

    CaptureFile capture;
    capture.byte_order = swapped ? ByteOrder::Swapped : ByteOrder::Native;
    capture.snap_len = header.u32(16);
    const auto network = header.u32(20);
    if (network != static_cast<std::uint32_t>(LinkType::Ethernet) &&
        network != static_cast<std::uint32_t>(LinkType::RawIp)) {
        throw Error(ErrorCode::UnsupportedLinkType,
                    "link type " + std::to_string(network) + " (only Ethernet=1, RawIP=101)");
    }
    capture.link_type = static_cast<LinkType>(network);

    std::size_t offset = kPcapGlobalHeaderSize;
    while (offset < source.size()) {
        const std::size_t index = capture.records.size();
        if (source.size() - offset < kPcapRecordHeaderSize) {
            throw Error(ErrorCode::Truncated, "record header cut short", index);
        }
        FieldReader rec(source.subspan(offset, kPcapRecordHeaderSize), swapped);
        PacketRecord r;
        r.ts_sec = rec.u32(0);
        r.ts_usec = rec.u32(4);
        r.captured_len = rec.u32(8);
        r.original_len = rec.u32(12);
        offset += kPcapRecordHeaderSize;
        if (source.size() - offset < r.captured_len) {
            throw Error(ErrorCode::Truncated,
                        "record declares " + std::to_string(r.captured_len) + " bytes but only " +
                            std::to_string(source.size() - offset) + " remain",
                        index);
        }
        auto body = source.subspan(offset, r.captured_len);
        r.data.assign(body.begin(), body.end());
        offset += r.captured_len;
        check_record(r, capture.snap_len, index);
        capture.records.push_back(std::move(r));
    }
    return capture;
}

CaptureFile read_capture(std::istream& source)
{
    Bytes data((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
    if (source.bad()) {
        throw Error(ErrorCode::Io, "failed reading capture stream");
    }
    return read_capture(ByteView(data));
}

Bytes write_capture(const CaptureFile& capture, ByteOrder order)
{
    for (std::size_t i = 0; i < capture.records.size(); ++i) {
        check_record(capture.records[i], capture.snap_len, i);
    }

    std::size_t total = kPcapGlobalHeaderSize;
    for (const auto& r : capture.records) {
        total += kPcapRecordHeaderSize + r.data.size();
    }
    Bytes out;
    out.reserve(total);

    FieldWriter w(out, order == ByteOrder::Swapped);
    w.u32(kMagicMicros);
    w.u16(2);
    w.u16(4);
    w.u32(0); // thiszone
    w.u32(0); // sigfigs
    w.u32(capture.snap_len);
    w.u32(static_cast<std::uint32_t>(capture.link_type));
    for (const auto& r : capture.records) {
        w.u32(r.ts_sec);
        w.u32(r.ts_usec);
        w.u32(r.captured_len);
        w.u32(r.original_len);
        out.insert(out.end(), r.data.begin(), r.data.end());
    }
    return out;
}

void write_capture(const CaptureFile& capture, ByteOrder order, std::ostream& sink)
{
    auto bytes = write_capture(capture, order);
    sink.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    if (!sink) {
        throw Error(ErrorCode::Io, "failed writing capture stream");
    }
}

CaptureFile load_capture(const std::filesystem::path& path)
{
    if (path == "-") {
        return read_capture(std::cin);
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    }
    return read_capture(in);
}

void save_capture(const CaptureFile& capture, const std::filesystem::path& path, ByteOrder order)
{
    if (path == "-") {
        write_capture(capture, order, std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot create '" + path.string() + "'");
    }
    write_capture(capture, order, out);
}

} // namespace primer
