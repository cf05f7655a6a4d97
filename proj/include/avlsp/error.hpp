#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace avlsp {

enum class ErrorCode {
    BadMagic,
    TruncatedFile,
    NonFiniteSample,
    IoFailure,
    InvalidArgument,
    DimensionMismatch,
    EvenKernel,
    EmptyBranch,
    DisconnectedGraph,
    UnassignedVesselPixel,
    DegenerateClass,
    SkeletonOutsideMask,
    EmptyList,
    MissingClassInAnnulus,
    MissingClass,
    SpecInfeasible,
    ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EvenKernel: return "EvenKernel";
    case ErrorCode::EmptyBranch: return "EmptyBranch";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::UnassignedVesselPixel: return "UnassignedVesselPixel";
    case ErrorCode::DegenerateClass: return "DegenerateClass";
    case ErrorCode::SkeletonOutsideMask: return "SkeletonOutsideMask";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::MissingClassInAnnulus: return "MissingClassInAnnulus";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::SpecInfeasible: return "SpecInfeasible";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Exception carrying a machine-checkable error code next to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

protected:
    struct Verbatim {};
    Error(ErrorCode code, const std::string& what, Verbatim) : std::runtime_error(what), code_(code) {}

private:
    ErrorCode code_;
};

} // namespace avlsp
