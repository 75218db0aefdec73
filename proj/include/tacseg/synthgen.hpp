#pragma once

#include "tacseg/rate.hpp"
#include "tacseg/recording.hpp"
#include "tacseg/wrench.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tacseg {

enum class Phase : int { Idle = 0, Grasped = 1, UnderLinearForce = 2, UnderTorque = 3, Released = 4 };
inline constexpr int kNumPhases = 5;

const std::vector<std::string>& skill_vocabulary();

struct FrameRange {
    int min = 1;
    int max = 1;
};

struct SynthConfig {
    std::uint64_t seed = 0;
    /// Fixes the per-phase signature directions; shared by every demo of a dataset.
    std::uint64_t signature_seed = 1;
    int clips_per_demo = 3;

    Rate label_rate = kTactileRate;
    Rate tactile_rate = kTactileRate;
    Rate camera_rate{60, 1};
    Rate ft_rate{1000, 1};
    Rate pose_rate{60, 1};

    FrameRange idle{20, 60};
    FrameRange grasped{15, 40};
    FrameRange linear_force{20, 50};
    FrameRange torque{15, 40};
    FrameRange released{2, 5};

    // Signal-to-noise: phase means sit `*_separation` noise sigmas from each other.
    double tactile_noise = 1.0;
    double tactile_separation = 2.0;
    double visual_noise = 1.0;
    double visual_separation = 0.5;
    double visual_drift = 1.0;  // stationary std of the slow random walk
    double visual_drift_rho = 0.98;  // per camera sample
    double ft_noise = 1.0;
    double ft_separation = 2.0;
    double pose_noise_m = 0.002;
    double clip_spacing_m = 0.15;

    bool tactile_informative = true;
    bool visual_informative = true;
    bool ft_informative = true;
    bool pose_informative = true;

    bool inject_artifacts = true;
    FrameRange pull_frames{4, 6};
    FrameRange lock_frames{3, 4};
    FrameRange release_frames{4, 6};
    double artifact_amplitude_min = 6.0;  // in ft_noise units
    double artifact_amplitude_max = 10.0;

    /// Throws ConfigError on empty/invalid ranges.
    void validate() const;
    /// Every duration range collapsed to its minimum.
    SynthConfig at_minimum_durations() const;
};

struct GroundTruth {
    std::vector<int> skill;
    std::vector<int> trigger;
    IntervalSet artifacts;
};

struct Demo {
    Recording recording;
    GroundTruth truth;
};

/// Streams: "tactile" (256), "camera" (256), "ft" (6, raw incl. trigger
/// artifacts), "pose_left"/"pose_right" (7). Skill labels attached at label_rate.
Demo generate_demo(const SynthConfig& cfg);

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;

    void validate() const;
};

struct DatasetSplits {
    std::vector<Demo> train;
    std::vector<Demo> val;
    std::vector<Demo> test;
};

/// Demo i uses seed derive_seed(cfg.seed, "demo", i); the split is by demo in
/// index order: round(n·train) train, round(n·val) val, rest test.
DatasetSplits generate_dataset(const SynthConfig& cfg, int n_demos, const SplitFractions& split = {});

/// Demo `index` of a dataset, named demo_NNN. generate_dataset is built from this.
Demo generate_indexed_demo(const SynthConfig& cfg, int index);

/// Demos per split for n demos: {train, val, test}.
std::array<int, 3> split_counts(int n_demos, const SplitFractions& split);

/// Number of demos whose expected length sums to about `frames`.
int demos_for_frames(const SynthConfig& cfg, int frames);

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace tacseg
