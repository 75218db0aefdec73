#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tacseg {

enum class ErrorCode {
    EmptyStream,
    CorruptStream,
    NoOverlap,
    FormatError,
    MissingFile,
    InvalidTransform,
    DimMismatch,
    TooShort,
    InvalidIntervals,
    VocabularyMismatch,
    EmptyDataset,
    InvalidPose,
    LabelsRequired,
    ConfigError,
    LabelError,
    CacheError,
    NoTrainingWindows,
    CoverageGap,
    IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace tacseg
