#pragma once

#include "tacseg/matrix.hpp"
#include "tacseg/recording.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tacseg {

/// Force (N) and torque (N·m) in one frame. Channel order on streams is
/// (Fx, Fy, Fz, Tx, Ty, Tz).
struct Wrench {
    Eigen::Vector3d force = Eigen::Vector3d::Zero();
    Eigen::Vector3d torque = Eigen::Vector3d::Zero();
};

/// Rotation taking vectors from the gripper sensor frame to the robot sensor
/// frame, plus the displacement between the two measurement centres.
struct FrameTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d displacement = Eigen::Vector3d::Zero();

    /// Throws InvalidTransform unless RᵀR = I and det R = +1 within 1e-9.
    void validate() const;

    static FrameTransform identity() { return {}; }
    FrameTransform inverse() const;
    /// Mapping by `first` then `*this`.
    FrameTransform compose(const FrameTransform& first) const;
};

FrameTransform load_frame_transform(const std::filesystem::path& path);
void save_frame_transform(const FrameTransform& tf, const std::filesystem::path& path);

Wrench map_wrench(const Wrench& w, const FrameTransform& tf);
SensorStream map_wrench_stream(const SensorStream& stream, const FrameTransform& tf);

inline constexpr double kStdFloor = 1e-6;
inline constexpr int kBaselineFrames = 20;

struct ChannelStats {
    std::array<double, 6> mean{};
    std::array<double, 6> std{};
};

/// Population mean/std over the first `n` frames, std floored at kStdFloor.
ChannelStats baseline_stats(const Mat& ft, int n = kBaselineFrames);

enum class TriggerClass : int { None = 0, Pull = 1, Lock = 2, Release = 3 };

const std::vector<std::string>& trigger_vocabulary();

struct Interval {
    int start = 0;
    int end = 0;  // exclusive
    TriggerClass cls = TriggerClass::None;

    int length() const { return end - start; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

using IntervalSet = std::vector<Interval>;

/// Throws InvalidIntervals unless sorted, non-overlapping and inside [0, frames).
void validate_intervals(const IntervalSet& set, int frames);

/// Widens each interval by `pad` frames per side (clamped to [0, frames)) and
/// merges any that then touch; merged runs keep the class of the longer part.
IntervalSet pad_intervals(const IntervalSet& set, int pad, int frames);

double interval_iou(const Interval& a, const Interval& b);

/// For each reference interval, the best IoU against a detected interval of
/// the same class (0 when none overlaps), averaged. 1 for an empty reference.
double mean_interval_iou(const IntervalSet& reference, const IntervalSet& detected);

/// Replaces rows inside the intervals with per-channel Gaussian draws from
/// `stats`; rows outside are copied bit-exactly.
Mat filter_trigger_artifacts(const Mat& ft, const IntervalSet& intervals, const ChannelStats& stats,
                             std::uint64_t seed);

/// Maximal runs of one non-"none" label, one interval per run.
IntervalSet intervals_from_labels(const std::vector<int>& labels);
std::vector<int> labels_from_intervals(const IntervalSet& set, int frames);

void save_intervals_csv(const IntervalSet& set, const std::filesystem::path& path);
IntervalSet load_intervals_csv(const std::filesystem::path& path);

}  // namespace tacseg
