#include "tacseg/errors.hpp"

namespace tacseg {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyStream: return "EmptyStream";
        case ErrorCode::CorruptStream: return "CorruptStream";
        case ErrorCode::NoOverlap: return "NoOverlap";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::InvalidTransform: return "InvalidTransform";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::InvalidIntervals: return "InvalidIntervals";
        case ErrorCode::VocabularyMismatch: return "VocabularyMismatch";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::InvalidPose: return "InvalidPose";
        case ErrorCode::LabelsRequired: return "LabelsRequired";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::LabelError: return "LabelError";
        case ErrorCode::CacheError: return "CacheError";
        case ErrorCode::NoTrainingWindows: return "NoTrainingWindows";
        case ErrorCode::CoverageGap: return "CoverageGap";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace tacseg
