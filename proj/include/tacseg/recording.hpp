#pragma once

#include "tacseg/matrix.hpp"
#include "tacseg/rate.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tacseg {

enum class StreamKind { TactileEmbed, VisualEmbed, Ft, Pose, Other };

std::string to_string(StreamKind kind);
StreamKind stream_kind_from_string(const std::string& s);

/// One timestamped sensor channel group. Row i of `values` is the sample at
/// `timestamps[i]` (seconds since recording start).
struct SensorStream {
    std::string name;
    StreamKind kind = StreamKind::Other;
    Rate rate;
    int dim = 0;
    std::vector<double> timestamps;
    Mat values;

    std::size_t size() const { return timestamps.size(); }
    bool empty() const { return timestamps.empty(); }

    /// Throws CorruptStream on non-finite or non-increasing timestamps,
    /// non-finite values, or a row/column count that disagrees with `dim`.
    void validate() const;

    friend bool operator==(const SensorStream& a, const SensorStream& b);
};

struct LabelTrack {
    std::vector<std::string> vocabulary;
    std::vector<int> labels;

    void validate() const;
    friend bool operator==(const LabelTrack&, const LabelTrack&) = default;
};

struct Recording {
    std::string name;
    Rate rate = kTactileRate;  // common rate the label track lives on
    std::map<std::string, SensorStream> streams;
    std::optional<LabelTrack> labels;
    std::map<std::string, std::string> meta;

    const SensorStream& stream(const std::string& stream_name) const;
    bool has_stream(const std::string& stream_name) const { return streams.count(stream_name) > 0; }
    void add_stream(SensorStream s);

    friend bool operator==(const Recording&, const Recording&) = default;
};

/// Zero-order-hold resampling onto t0 + k/target for k in [0, K).
SensorStream resample(const SensorStream& stream, Rate target);

/// Resamples every stream onto one grid covering the intersection of the
/// streams' time ranges. Labels (if any) are carried through untouched.
Recording synchronize(const Recording& rec, Rate target = kTactileRate);

/// Shifts every timestamp so the earliest stream starts at 0.
Recording rebase(const Recording& rec);

void save_recording(const Recording& rec, const std::filesystem::path& dir);
Recording load_recording(const std::filesystem::path& dir);

}  // namespace tacseg
