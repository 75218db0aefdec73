#include "tacseg/wrench.hpp"

#include "tacseg/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace tacseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kSo3Tol = 1e-9;

TriggerClass trigger_class_from_string(const std::string& s) {
    const auto& vocab = trigger_vocabulary();
    for (std::size_t i = 0; i < vocab.size(); ++i)
        if (vocab[i] == s) return static_cast<TriggerClass>(i);
    fail(ErrorCode::FormatError, "unknown trigger class '" + s + "'");
}

}  // namespace

void FrameTransform::validate() const {
    if (!rotation.allFinite() || !displacement.allFinite())
        fail(ErrorCode::InvalidTransform, "non-finite transform entries");
    const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (ortho > kSo3Tol) fail(ErrorCode::InvalidTransform, "rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > kSo3Tol)
        fail(ErrorCode::InvalidTransform, "rotation determinant is not +1");
}

FrameTransform FrameTransform::inverse() const {
    FrameTransform inv;
    inv.rotation = rotation.transpose();
    inv.displacement = -(inv.rotation * displacement);
    return inv;
}

FrameTransform FrameTransform::compose(const FrameTransform& first) const {
    FrameTransform out;
    out.rotation = rotation * first.rotation;
    out.displacement = displacement + rotation * first.displacement;
    return out;
}

FrameTransform load_frame_transform(const fs::path& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::MissingFile, path.string());
    FrameTransform tf;
    try {
        json j;
        is >> j;
        const auto rot = j.at("rotation").get<std::vector<double>>();
        const auto disp = j.at("displacement_m").get<std::vector<double>>();
        if (rot.size() != 9 || disp.size() != 3)
            fail(ErrorCode::FormatError, path.string() + ": expected 9 rotation and 3 displacement values");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) tf.rotation(r, c) = rot[static_cast<std::size_t>(3 * r + c)];
        tf.displacement = Eigen::Vector3d(disp[0], disp[1], disp[2]);
    } catch (const json::exception& e) {
        fail(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
    tf.validate();
    return tf;
}

void save_frame_transform(const FrameTransform& tf, const fs::path& path) {
    std::vector<double> rot;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.push_back(tf.rotation(r, c));
    json j{{"rotation", rot}, {"displacement_m", {tf.displacement.x(), tf.displacement.y(), tf.displacement.z()}}};
    std::ofstream os(path);
    if (!os) fail(ErrorCode::IoError, "cannot write " + path.string());
    os << j.dump(2) << '\n';
}

Wrench map_wrench(const Wrench& w, const FrameTransform& tf) {
    tf.validate();
    Wrench out;
    out.force = tf.rotation * w.force;
    out.torque = tf.rotation * w.torque + tf.displacement.cross(out.force);
    return out;
}

SensorStream map_wrench_stream(const SensorStream& stream, const FrameTransform& tf) {
    if (stream.dim != 6 || stream.values.cols() != 6)
        fail(ErrorCode::DimMismatch, stream.name + ": wrench streams need 6 channels");
    tf.validate();
    SensorStream out = stream;
    for (Eigen::Index i = 0; i < stream.values.rows(); ++i) {
        const Eigen::Vector3d f = tf.rotation * stream.values.row(i).segment<3>(0).transpose();
        const Eigen::Vector3d t =
            tf.rotation * stream.values.row(i).segment<3>(3).transpose() + tf.displacement.cross(f);
        out.values.row(i).segment<3>(0) = f.transpose();
        out.values.row(i).segment<3>(3) = t.transpose();
    }
    return out;
}

ChannelStats baseline_stats(const Mat& ft, int n) {
    if (ft.cols() != 6) fail(ErrorCode::DimMismatch, "baseline statistics need 6 F/T channels");
    if (n < 2) fail(ErrorCode::ConfigError, "baseline needs at least 2 frames");
    if (ft.rows() < n)
        fail(ErrorCode::TooShort, "sequence has " + std::to_string(ft.rows()) + " frames, baseline needs " +
                                      std::to_string(n));
    ChannelStats stats;
    for (int c = 0; c < 6; ++c) {
        double sum = 0.0;
        for (int t = 0; t < n; ++t) sum += ft(t, c);
        const double mean = sum / n;
        double sq = 0.0;
        for (int t = 0; t < n; ++t) sq += (ft(t, c) - mean) * (ft(t, c) - mean);
        stats.mean[static_cast<std::size_t>(c)] = mean;
        stats.std[static_cast<std::size_t>(c)] = std::max(std::sqrt(sq / n), kStdFloor);
    }
    return stats;
}

const std::vector<std::string>& trigger_vocabulary() {
    static const std::vector<std::string> vocab{"none", "pull", "lock", "release"};
    return vocab;
}

void validate_intervals(const IntervalSet& set, int frames) {
    int prev_end = 0;
    for (const auto& iv : set) {
        if (iv.start < 0 || iv.start >= iv.end || iv.end > frames)
            fail(ErrorCode::InvalidIntervals, "interval [" + std::to_string(iv.start) + "," + std::to_string(iv.end) +
                                                  ") invalid for " + std::to_string(frames) + " frames");
        if (iv.start < prev_end) fail(ErrorCode::InvalidIntervals, "intervals overlap or are unsorted");
        prev_end = iv.end;
    }
}

IntervalSet pad_intervals(const IntervalSet& set, int pad, int frames) {
    validate_intervals(set, frames);
    IntervalSet out;
    int kept_len = 0;  // length of the unpadded interval whose class the current run carries
    for (const auto& iv : set) {
        Interval p{std::max(0, iv.start - pad), std::min(frames, iv.end + pad), iv.cls};
        if (!out.empty() && p.start <= out.back().end) {
            out.back().end = std::max(out.back().end, p.end);
            if (iv.length() > kept_len) {
                out.back().cls = iv.cls;
                kept_len = iv.length();
            }
        } else {
            out.push_back(p);
            kept_len = iv.length();
        }
    }
    return out;
}

double interval_iou(const Interval& a, const Interval& b) {
    const int inter = std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
    const int uni = a.length() + b.length() - inter;
    return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

double mean_interval_iou(const IntervalSet& reference, const IntervalSet& detected) {
    if (reference.empty()) return 1.0;
    double sum = 0.0;
    for (const auto& r : reference) {
        double best = 0.0;
        for (const auto& d : detected)
            if (d.cls == r.cls) best = std::max(best, interval_iou(r, d));
        sum += best;
    }
    return sum / static_cast<double>(reference.size());
}

Mat filter_trigger_artifacts(const Mat& ft, const IntervalSet& intervals, const ChannelStats& stats,
                             std::uint64_t seed) {
    if (ft.cols() != 6) fail(ErrorCode::DimMismatch, "trigger filtering needs 6 F/T channels");
    validate_intervals(intervals, static_cast<int>(ft.rows()));
    Mat out = ft;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (const auto& iv : intervals)
        for (int t = iv.start; t < iv.end; ++t)
            for (std::size_t c = 0; c < 6; ++c)
                out(t, static_cast<Eigen::Index>(c)) = stats.mean[c] + stats.std[c] * unit(rng);
    return out;
}

IntervalSet intervals_from_labels(const std::vector<int>& labels) {
    IntervalSet out;
    const int n = static_cast<int>(labels.size());
    int t = 0;
    while (t < n) {
        const int cls = labels[static_cast<std::size_t>(t)];
        int end = t + 1;
        while (end < n && labels[static_cast<std::size_t>(end)] == cls) ++end;
        if (cls != static_cast<int>(TriggerClass::None)) out.push_back({t, end, static_cast<TriggerClass>(cls)});
        t = end;
    }
    return out;
}

std::vector<int> labels_from_intervals(const IntervalSet& set, int frames) {
    validate_intervals(set, frames);
    std::vector<int> labels(static_cast<std::size_t>(frames), 0);
    for (const auto& iv : set)
        for (int t = iv.start; t < iv.end; ++t) labels[static_cast<std::size_t>(t)] = static_cast<int>(iv.cls);
    return labels;
}

void save_intervals_csv(const IntervalSet& set, const fs::path& path) {
    std::ofstream os(path);
    if (!os) fail(ErrorCode::IoError, "cannot write " + path.string());
    os << "start,end,class\n";
    for (const auto& iv : set)
        os << iv.start << ',' << iv.end << ',' << trigger_vocabulary()[static_cast<std::size_t>(iv.cls)] << '\n';
}

IntervalSet load_intervals_csv(const fs::path& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::MissingFile, path.string());
    std::string line;
    if (!std::getline(is, line) || line.rfind("start,end,class", 0) != 0)
        fail(ErrorCode::FormatError, path.string() + ": missing 'start,end,class' header");
    IntervalSet out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
            fail(ErrorCode::FormatError, path.string() + ": malformed row '" + line + "'");
        if (!c.empty() && c.back() == '\r') c.pop_back();
        try {
            out.push_back({std::stoi(a), std::stoi(b), trigger_class_from_string(c)});
        } catch (const std::logic_error&) {
            fail(ErrorCode::FormatError, path.string() + ": malformed row '" + line + "'");
        }
    }
    return out;
}

}  // namespace tacseg
