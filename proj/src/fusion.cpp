#include "tacseg/fusion.hpp"

#include "tacseg/errors.hpp"

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tacseg {
namespace {

constexpr double kUnitQuatTol = 1e-6;

void require_shape(const Mat& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols)
        fail(ErrorCode::DimMismatch, std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                                         std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                                         std::to_string(cols));
}

}  // namespace

nlohmann::json to_json(const NormStats& stats) {
    return {{"mean", stats.mean}, {"std", stats.std}};
}

NormStats norm_stats_from_json(const nlohmann::json& j) {
    NormStats s;
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto sd = j.at("std").get<std::vector<double>>();
    if (mean.size() != kRawChannels || sd.size() != kRawChannels)
        fail(ErrorCode::FormatError, "normalization stats need 20 channels");
    std::copy(mean.begin(), mean.end(), s.mean.begin());
    std::copy(sd.begin(), sd.end(), s.std.begin());
    return s;
}

NormStats fit_norm(const std::vector<Mat>& train) {
    long frames = 0;
    for (const auto& m : train) {
        if (m.cols() != kRawChannels) fail(ErrorCode::DimMismatch, "normalization input needs 20 channels");
        frames += m.rows();
    }
    if (frames < 2) fail(ErrorCode::EmptyDataset, "need at least 2 frames to fit normalization");

    NormStats s;
    for (int c = 0; c < kRawChannels; ++c) {
        double sum = 0.0;
        for (const auto& m : train) sum += m.col(c).sum();
        const double mean = sum / static_cast<double>(frames);
        double sq = 0.0;
        for (const auto& m : train) sq += (m.col(c).array() - mean).square().sum();
        s.mean[static_cast<std::size_t>(c)] = mean;
        s.std[static_cast<std::size_t>(c)] = std::max(std::sqrt(sq / static_cast<double>(frames)), kStdFloor);
    }
    return s;
}

Mat apply_norm(const Mat& raw, const NormStats& stats) {
    if (raw.cols() > kRawChannels) fail(ErrorCode::DimMismatch, "too many channels to normalize");
    Mat out(raw.rows(), raw.cols());
    for (Eigen::Index c = 0; c < raw.cols(); ++c)
        out.col(c) = (raw.col(c).array() - stats.mean[static_cast<std::size_t>(c)]) / stats.std[static_cast<std::size_t>(c)];
    return out;
}

FusedSequence fuse(const Mat& tactile, const Mat& visual, const Mat& ft, const Mat& pose_left, const Mat& pose_right,
                   const NormStats& stats) {
    const Eigen::Index frames = tactile.rows();
    require_shape(tactile, frames, kEmbedDim, "tactile embedding");
    require_shape(visual, frames, kEmbedDim, "visual embedding");
    require_shape(ft, frames, kFtDim, "F/T block");
    require_shape(pose_left, frames, kPoseDim, "left pose");
    require_shape(pose_right, frames, kPoseDim, "right pose");

    Mat raw(frames, kRawChannels);
    raw << ft, pose_left, pose_right;

    FusedSequence out;
    out.features.resize(frames, kFusedDim);
    out.features << tactile, visual, apply_norm(raw, stats);
    return out;
}

Mat pose_to_tcp(const Mat& tracker_pose, const FrameTransform& tcp_offset) {
    if (tracker_pose.cols() != kPoseDim) fail(ErrorCode::DimMismatch, "pose rows need 7 values");
    tcp_offset.validate();
    const Eigen::Quaterniond q_off(tcp_offset.rotation);
    Mat out(tracker_pose.rows(), kPoseDim);
    for (Eigen::Index i = 0; i < tracker_pose.rows(); ++i) {
        const auto row = tracker_pose.row(i);
        const Eigen::Quaterniond q(row(3), row(4), row(5), row(6));
        if (!std::isfinite(q.norm()) || std::abs(q.norm() - 1.0) > kUnitQuatTol)
            fail(ErrorCode::InvalidPose, "frame " + std::to_string(i) + ": quaternion is not unit length");
        const Eigen::Vector3d p = row.segment<3>(0).transpose() + q * tcp_offset.displacement;
        Eigen::Quaterniond qt = (q * q_off).normalized();
        if (qt.w() < 0.0) qt.coeffs() = -qt.coeffs();
        out.row(i) << p.x(), p.y(), p.z(), qt.w(), qt.x(), qt.y(), qt.z();
    }
    return out;
}

ModalitySet ModalitySet::parse(const std::string& csv) {
    if (csv == "all") return all();
    ModalitySet s{false, false, false, false};
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "camera") s.camera = true;
        else if (item == "tactile") s.tactile = true;
        else if (item == "ft") s.ft = true;
        else if (item == "pose") s.pose = true;
        else fail(ErrorCode::ConfigError, "unknown modality '" + item + "'");
    }
    if (!s.camera && !s.tactile && !s.ft && !s.pose) fail(ErrorCode::ConfigError, "no modality selected");
    return s;
}

std::string ModalitySet::str() const {
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += ',';
        out += name;
    };
    add(camera, "camera");
    add(tactile, "tactile");
    add(ft, "ft");
    add(pose, "pose");
    return out;
}

bool ModalitySet::contains(Modality m) const {
    switch (m) {
        case Modality::Camera: return camera;
        case Modality::Tactile: return tactile;
        case Modality::Ft: return ft;
        case Modality::Pose: return pose;
    }
    return false;
}

void apply_modality_mask(Mat& features, const ModalitySet& modalities) {
    if (features.cols() != kFusedDim) fail(ErrorCode::DimMismatch, "modality masking needs 532-wide features");
    if (!modalities.tactile) features.middleCols(kTactileCol, kEmbedDim).setZero();
    if (!modalities.camera) features.middleCols(kVisualCol, kEmbedDim).setZero();
    if (!modalities.ft) features.middleCols(kFtCol, kFtDim).setZero();
    if (!modalities.pose) features.middleCols(kPoseCol, 2 * kPoseDim).setZero();
}

}  // namespace tacseg
