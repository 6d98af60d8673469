#pragma once

#include <stdexcept>
#include <string>

namespace elreg {

// Failure categories raised by the library. Each maps onto one named error
// condition of the public contracts.
enum class ErrorKind {
    DimensionTooSmall,
    DimensionMismatch,
    ScaleMismatch,
    SingularTransform,
    ConstantImage,
    DegenerateHistogram,
    DegenerateRange,
    EmptyTrainingSet,
    UntrainedConfig,
    InvalidLandmarks,
    TooManyLevels,
    DomainTooSmall,
    IllConditioned,
    InvalidParams,
    IoError,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ScaleMismatch: return "ScaleMismatch";
    case ErrorKind::SingularTransform: return "SingularTransform";
    case ErrorKind::ConstantImage: return "ConstantImage";
    case ErrorKind::DegenerateHistogram: return "DegenerateHistogram";
    case ErrorKind::DegenerateRange: return "DegenerateRange";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::UntrainedConfig: return "UntrainedConfig";
    case ErrorKind::InvalidLandmarks: return "InvalidLandmarks";
    case ErrorKind::TooManyLevels: return "TooManyLevels";
    case ErrorKind::DomainTooSmall: return "DomainTooSmall";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

} // namespace elreg
