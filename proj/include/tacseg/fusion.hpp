#pragma once

#include "tacseg/matrix.hpp"
#include "tacseg/wrench.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace tacseg {

inline constexpr int kEmbedDim = 256;
inline constexpr int kFtDim = 6;
inline constexpr int kPoseDim = 7;
inline constexpr int kRawChannels = kFtDim + 2 * kPoseDim;  // 20
inline constexpr int kFusedDim = 2 * kEmbedDim + kRawChannels;  // 532

// Column layout of a fused row.
inline constexpr int kTactileCol = 0;
inline constexpr int kVisualCol = kEmbedDim;
inline constexpr int kFtCol = 2 * kEmbedDim;
inline constexpr int kPoseCol = kFtCol + kFtDim;

struct FusedSequence {
    Mat features;  // T × 532
    std::vector<int> labels;  // empty or length T
    std::string source;

    int frames() const { return static_cast<int>(features.rows()); }
    bool has_labels() const { return !labels.empty(); }
};

/// Per-channel z-score statistics for the 6 F/T + 14 pose channels.
struct NormStats {
    std::array<double, kRawChannels> mean{};
    std::array<double, kRawChannels> std{};

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

nlohmann::json to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);

/// Fits on raw T×20 (ft ‖ poseL ‖ poseR) sequences; population std, floored.
NormStats fit_norm(const std::vector<Mat>& train);

/// Applies the z-score to a T×20 (or, for the first `cols` channels, T×cols) block.
Mat apply_norm(const Mat& raw, const NormStats& stats);

FusedSequence fuse(const Mat& tactile, const Mat& visual, const Mat& ft, const Mat& pose_left,
                   const Mat& pose_right, const NormStats& stats);

/// Pose rows are (px, py, pz, qw, qx, qy, qz). The offset expresses the TCP in
/// the tracker frame.
Mat pose_to_tcp(const Mat& tracker_pose, const FrameTransform& tcp_offset);

enum class Modality { Camera, Tactile, Ft, Pose };

struct ModalitySet {
    bool camera = true;
    bool tactile = true;
    bool ft = true;
    bool pose = true;

    static ModalitySet all() { return {}; }
    /// Parses "camera,tactile,ft,pose"; throws ConfigError on unknown names.
    static ModalitySet parse(const std::string& csv);
    std::string str() const;
    bool contains(Modality m) const;

    friend bool operator==(const ModalitySet&, const ModalitySet&) = default;
};

/// Zeroes the column blocks of excluded modalities in place; width stays 532.
void apply_modality_mask(Mat& features, const ModalitySet& modalities);

}  // namespace tacseg
