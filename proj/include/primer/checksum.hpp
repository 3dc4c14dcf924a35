#pragma once

#include "primer/net_types.hpp"

#include <cstdint>

namespace primer {

struct ChecksumWord {
    std::uint16_t value = 0;
    constexpr auto operator<=>(const ChecksumWord&) const = default;
};

// Running RFC 1071 sum. Byte pairing continues across add() calls, so an
// odd-length chunk followed by another chunk sums as one contiguous buffer.
class ChecksumAccumulator {
public:
    void add(ByteView data);
    void add_u16(std::uint16_t word);
    void add_u32(std::uint32_t word);

    // One's-complement sum folded to 16 bits (0xFFFF for a verifying buffer).
    std::uint16_t folded_sum() const;
    ChecksumWord checksum() const { return ChecksumWord{static_cast<std::uint16_t>(~folded_sum())}; }

private:
    std::uint64_t sum_ = 0;
    bool odd_ = false;
};

ChecksumWord ones_complement_checksum(ByteView data);

// True when data (with its checksum field in place) sums to 0xFFFF.
bool checksum_verifies(ByteView data);

} // namespace primer
