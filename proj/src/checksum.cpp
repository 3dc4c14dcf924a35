#include "primer/checksum.hpp"

namespace primer {

void ChecksumAccumulator::add(ByteView data)
{
    for (auto byte : data) {
        sum_ += odd_ ? std::uint64_t{byte} : (std::uint64_t{byte} << 8);
        odd_ = !odd_;
    }
}

void ChecksumAccumulator::add_u16(std::uint16_t word)
{
    const std::uint8_t b[2] = {static_cast<std::uint8_t>(word >> 8),
                               static_cast<std::uint8_t>(word)};
    add(b);
}

void ChecksumAccumulator::add_u32(std::uint32_t word)
{
    add_u16(static_cast<std::uint16_t>(word >> 16));
    add_u16(static_cast<std::uint16_t>(word));
}

std::uint16_t ChecksumAccumulator::folded_sum() const
{
    std::uint64_t s = sum_;
    while (s >> 16) {
        s = (s & 0xffff) + (s >> 16);
    }
    return static_cast<std::uint16_t>(s);
}

ChecksumWord ones_complement_checksum(ByteView data)
{
    ChecksumAccumulator acc;
    acc.add(data);
    return acc.checksum();
}

bool checksum_verifies(ByteView data)
{
    ChecksumAccumulator acc;
    acc.add(data);
    return acc.folded_sum() == 0xffff;
}

} // namespace primer
