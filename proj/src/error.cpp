#include "primer/error.hpp"

namespace primer {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::UnsupportedLinkType: return "UnsupportedLinkType";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::TruncatedHeader: return "TruncatedHeader";
    case ErrorCode::FragmentedPacket: return "FragmentedPacket";
    case ErrorCode::NotIPv4: return "NotIPv4";
    case ErrorCode::LengthOverflow: return "LengthOverflow";
    case ErrorCode::DecodeFailure: return "DecodeFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AttackerNotFound: return "AttackerNotFound";
    case ErrorCode::NoSelectableTraffic: return "NoSelectableTraffic";
    case ErrorCode::TransportUnavailable: return "TransportUnavailable";
    case ErrorCode::SendFailure: return "SendFailure";
    case ErrorCode::EmptyCapture: return "EmptyCapture";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), index_(index)
{
}

} // namespace primer
