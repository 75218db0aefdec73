#pragma once

#include "tacseg/fusion.hpp"

#include <vector>

namespace tacseg {

inline constexpr int kDefaultWindow = 50;
inline constexpr int kDefaultStride = 10;
inline constexpr double kDefaultMaxIdleRatio = 0.8;

struct WindowPlan {
    int frames = 0;  // T
    int window = kDefaultWindow;  // W
    int stride = kDefaultStride;  // S
    std::vector<int> starts;

    /// Actual window length; shorter than W only when T < W.
    int length() const { return frames < window ? frames : window; }
    std::size_t size() const { return starts.size(); }
};

WindowPlan plan_windows(int frames, int window = kDefaultWindow, int stride = kDefaultStride,
                        bool tail_anchor = true);

/// Read-only view of [start, start + length) of a sequence. The sequence must
/// outlive the window.
struct Window {
    const FusedSequence* seq = nullptr;
    int start = 0;
    int length = 0;

    auto features() const { return seq->features.middleRows(start, length); }
    int label(int i) const { return seq->labels[static_cast<std::size_t>(start + i)]; }
};

/// Training windows of the plan whose idle fraction is at most max_idle_ratio.
std::vector<Window> make_training_windows(const FusedSequence& seq, const WindowPlan& plan, int idle_class = 0,
                                          double max_idle_ratio = kDefaultMaxIdleRatio);

/// For each frame, indices (into plan.starts) of the windows covering it.
std::vector<std::vector<int>> frame_coverage(const WindowPlan& plan);

}  // namespace tacseg
