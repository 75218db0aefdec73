#pragma once

#include "tacseg/fusion.hpp"
#include "tacseg/rate.hpp"
#include "tacseg/recording.hpp"
#include "tacseg/wrench.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tacseg {

struct StreamNames {
    std::string tactile = "tactile";
    std::string camera = "camera";
    std::string ft = "ft";
    std::string pose_left = "pose_left";
    std::string pose_right = "pose_right";
};

struct PrepOptions {
    Rate rate = kTactileRate;
    StreamNames names;
    /// Modalities whose streams must be present; absent optional ones become zeros.
    ModalitySet required = ModalitySet::all();
    std::optional<FrameTransform> ft_transform;
    FrameTransform tcp_left;
    FrameTransform tcp_right;
};

/// Synchronized per-modality blocks of one recording, before normalization.
struct RawSequence {
    std::string name;
    Mat tactile;  // T × 256
    Mat visual;  // T × 256
    Mat ft;  // T × 6
    Mat pose_left;  // T × 7, TCP frame
    Mat pose_right;  // T × 7, TCP frame
    std::vector<int> labels;

    int frames() const { return static_cast<int>(ft.rows()); }
    /// T × 20 (ft ‖ pose_left ‖ pose_right).
    Mat raw_channels() const;
};

RawSequence prepare_sequence(const Recording& rec, const PrepOptions& opts = {});

/// Z-scores and fuses, then zero-masks excluded modalities.
FusedSequence to_fused(const RawSequence& raw, const NormStats& stats, const ModalitySet& modalities);

/// Normalized T×6 F/T features fed to the trigger model.
Mat trigger_features(const Mat& ft, const NormStats& stats);

/// Replaces the F/T rows inside `intervals` with baseline-matched noise.
void filter_ft(RawSequence& raw, const IntervalSet& intervals, std::uint64_t seed);

}  // namespace tacseg
