#pragma once

#include <stdexcept>
#include <string>

namespace kesten {

enum class ErrorCode {
    NotAllowable,
    NotPositivelyRegular,
    DegenerateQ,
    NonContractive,
    BadModelFile,
    NoConvergence,
    NoRoot,
    InterpolationOutOfRange,
    TruncationDominates,
    RegularityNotReached,
    UnreachableSet,
    InsufficientTailSamples,
    RejectionTooCostly,
    ConfigParse,
    UnknownCommand,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::NotAllowable: return "NotAllowable";
        case ErrorCode::NotPositivelyRegular: return "NotPositivelyRegular";
        case ErrorCode::DegenerateQ: return "DegenerateQ";
        case ErrorCode::NonContractive: return "NonContractive";
        case ErrorCode::BadModelFile: return "BadModelFile";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::NoRoot: return "NoRoot";
        case ErrorCode::InterpolationOutOfRange: return "InterpolationOutOfRange";
        case ErrorCode::TruncationDominates: return "TruncationDominates";
        case ErrorCode::RegularityNotReached: return "RegularityNotReached";
        case ErrorCode::UnreachableSet: return "UnreachableSet";
        case ErrorCode::InsufficientTailSamples: return "InsufficientTailSamples";
        case ErrorCode::RejectionTooCostly: return "RejectionTooCostly";
        case ErrorCode::ConfigParse: return "ConfigParse";
        case ErrorCode::UnknownCommand: return "UnknownCommand";
    }
    return "Unknown";
}

/// Toolkit-wide exception carrying a stable error code for CLI exit mapping.
class KestenError : public std::runtime_error {
public:
    KestenError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// Validation errors map to CLI exit 1, estimator errors to exit 2.
    bool is_validation() const noexcept {
        switch (code_) {
            case ErrorCode::NotAllowable:
            case ErrorCode::NotPositivelyRegular:
            case ErrorCode::DegenerateQ:
            case ErrorCode::NonContractive:
            case ErrorCode::BadModelFile:
            case ErrorCode::ConfigParse:
            case ErrorCode::UnknownCommand:
                return true;
            default:
                return false;
        }
    }

private:
    ErrorCode code_;
};

}  // namespace kesten
