#include "tacseg/windows.hpp"

#include "tacseg/errors.hpp"

#include <algorithm>

namespace tacseg {

WindowPlan plan_windows(int frames, int window, int stride, bool tail_anchor) {
    if (frames < 1 || window < 1 || stride < 1)
        fail(ErrorCode::ConfigError, "window planning needs T, W, S >= 1");
    WindowPlan plan{frames, window, stride, {}};
    if (frames < window) {
        plan.starts.push_back(0);
        return plan;
    }
    for (int s = 0; s + window <= frames; s += stride) plan.starts.push_back(s);
    if (tail_anchor && plan.starts.back() != frames - window) plan.starts.push_back(frames - window);
    return plan;
}

std::vector<Window> make_training_windows(const FusedSequence& seq, const WindowPlan& plan, int idle_class,
                                          double max_idle_ratio) {
    if (!seq.has_labels()) fail(ErrorCode::LabelsRequired, "training windows need a labeled sequence");
    if (static_cast<int>(seq.labels.size()) != seq.frames())
        fail(ErrorCode::DimMismatch, "label count differs from frame count");
    if (plan.frames != seq.frames()) fail(ErrorCode::DimMismatch, "window plan built for a different length");

    std::vector<Window> out;
    const int len = plan.length();
    for (int start : plan.starts) {
        Window w{&seq, start, len};
        int idle = 0;
        for (int i = 0; i < len; ++i) idle += w.label(i) == idle_class ? 1 : 0;
        // strict: a window exactly at the threshold is kept
        if (static_cast<double>(idle) / len > max_idle_ratio) continue;
        out.push_back(w);
    }
    return out;
}

std::vector<std::vector<int>> frame_coverage(const WindowPlan& plan) {
    std::vector<std::vector<int>> cover(static_cast<std::size_t>(plan.frames));
    const int len = plan.length();
    for (std::size_t k = 0; k < plan.starts.size(); ++k)
        for (int t = plan.starts[k]; t < plan.starts[k] + len && t < plan.frames; ++t)
            cover[static_cast<std::size_t>(t)].push_back(static_cast<int>(k));
    return cover;
}

}  // namespace tacseg
