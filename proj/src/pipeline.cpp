#include "tacseg/pipeline.hpp"

#include "tacseg/errors.hpp"

namespace tacseg {
namespace {

Mat block_or_zeros(const Recording& synced, const std::string& name, int dim, bool required, Eigen::Index frames,
                   const char* modality) {
    if (synced.has_stream(name)) {
        const auto& s = synced.stream(name);
        if (s.dim != dim)
            fail(ErrorCode::DimMismatch, "stream '" + name + "' has dim " + std::to_string(s.dim) + ", expected " +
                                             std::to_string(dim));
        return s.values;
    }
    if (required)
        fail(ErrorCode::ConfigError, std::string(modality) + " stream '" + name + "' is missing from '" + synced.name + "'");
    return Mat::Zero(frames, dim);
}

// Missing optional poses become identity rotations at the origin.
Mat pose_block(const Recording& synced, const std::string& name, bool required, Eigen::Index frames,
               const FrameTransform& tcp) {
    if (synced.has_stream(name)) return pose_to_tcp(block_or_zeros(synced, name, kPoseDim, true, frames, "pose"), tcp);
    block_or_zeros(synced, name, kPoseDim, required, frames, "pose");
    Mat m = Mat::Zero(frames, kPoseDim);
    m.col(3).setOnes();
    return m;
}

}  // namespace

Mat RawSequence::raw_channels() const {
    Mat raw(ft.rows(), kRawChannels);
    raw << ft, pose_left, pose_right;
    return raw;
}

RawSequence prepare_sequence(const Recording& rec, const PrepOptions& opts) {
    Recording src = rebase(rec);
    if (opts.ft_transform && src.has_stream(opts.names.ft)) {
        auto mapped = map_wrench_stream(src.stream(opts.names.ft), *opts.ft_transform);
        src.streams.erase(opts.names.ft);
        src.add_stream(std::move(mapped));
    }
    const Recording synced = synchronize(src, opts.rate);
    const Eigen::Index frames = static_cast<Eigen::Index>(synced.streams.begin()->second.size());

    RawSequence raw;
    raw.name = rec.name;
    const auto& req = opts.required;
    raw.tactile = block_or_zeros(synced, opts.names.tactile, kEmbedDim, req.tactile, frames, "tactile");
    raw.visual = block_or_zeros(synced, opts.names.camera, kEmbedDim, req.camera, frames, "camera");
    raw.ft = block_or_zeros(synced, opts.names.ft, kFtDim, req.ft, frames, "F/T");
    raw.pose_left = pose_block(synced, opts.names.pose_left, req.pose, frames, opts.tcp_left);
    raw.pose_right = pose_block(synced, opts.names.pose_right, req.pose, frames, opts.tcp_right);
    if (synced.labels) raw.labels = synced.labels->labels;
    return raw;
}

FusedSequence to_fused(const RawSequence& raw, const NormStats& stats, const ModalitySet& modalities) {
    FusedSequence out = fuse(raw.tactile, raw.visual, raw.ft, raw.pose_left, raw.pose_right, stats);
    apply_modality_mask(out.features, modalities);
    out.labels = raw.labels;
    out.source = raw.name;
    return out;
}

Mat trigger_features(const Mat& ft, const NormStats& stats) {
    if (ft.cols() != kFtDim) fail(ErrorCode::DimMismatch, "trigger features need 6 F/T channels");
    return apply_norm(ft, stats);
}

void filter_ft(RawSequence& raw, const IntervalSet& intervals, std::uint64_t seed) {
    validate_intervals(intervals, raw.frames());
    if (intervals.empty()) return;
    const auto stats = baseline_stats(raw.ft, std::min(kBaselineFrames, raw.frames()));
    raw.ft = filter_trigger_artifacts(raw.ft, intervals, stats, seed);
}

}  // namespace tacseg
