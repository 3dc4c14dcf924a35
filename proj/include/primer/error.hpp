#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace primer {

enum class ErrorCode {
    // capture_io
    BadMagic,
    UnsupportedFormat,
    Truncated,
    UnsupportedLinkType,
    InvariantViolation,
    // packet_codec
    TruncatedHeader,
    FragmentedPacket,
    NotIPv4,
    LengthOverflow,
    // rewrite / replay / analysis
    DecodeFailure,
    InvalidArgument,
    AttackerNotFound,
    NoSelectableTraffic,
    TransportUnavailable,
    SendFailure,
    EmptyCapture,
    // mock honeypot / files
    BindFailure,
    Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::size_t> index = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    // Record or entry index the error refers to, when there is one.
    std::optional<std::size_t> index() const noexcept { return index_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> index_;
};

} // namespace primer
