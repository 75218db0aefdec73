#include "tacseg/recording.hpp"

#include "tacseg/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace tacseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Grid points closer than this to a sample count as coincident with it.
constexpr double kGridEps = 1e-9;

std::int64_t grid_count(double span, Rate rate) {
    return static_cast<std::int64_t>(
               std::floor(span * static_cast<double>(rate.num) / static_cast<double>(rate.den) + kGridEps)) +
           1;
}

// Zero-order hold of `s` onto t0 + k/rate, k < count. Requires s.timestamps[0] <= t0 + eps.
SensorStream hold_on_grid(const SensorStream& s, double t0, std::int64_t count, Rate rate) {
    SensorStream out;
    out.name = s.name;
    out.kind = s.kind;
    out.rate = rate;
    out.dim = s.dim;
    out.timestamps.resize(static_cast<std::size_t>(count));
    out.values.resize(count, s.dim);
    std::size_t j = 0;
    for (std::int64_t k = 0; k < count; ++k) {
        const double tk = rate.time_at(t0, k);
        while (j + 1 < s.size() && s.timestamps[j + 1] <= tk + kGridEps) ++j;
        out.timestamps[static_cast<std::size_t>(k)] = tk;
        out.values.row(k) = s.values.row(static_cast<Eigen::Index>(j));
    }
    return out;
}

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

Rate rate_from_json(const json& j) {
    if (j.contains("rate")) {
        const auto text = j.at("rate").get<std::string>();
        const auto slash = text.find('/');
        if (slash == std::string::npos) return {std::stoll(text), 1};
        return {std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1))};
    }
    return Rate::from_hz(j.at("rate_hz").get<double>());
}

}  // namespace

std::string to_string(StreamKind kind) {
    switch (kind) {
        case StreamKind::TactileEmbed: return "tactile_embed";
        case StreamKind::VisualEmbed: return "visual_embed";
        case StreamKind::Ft: return "ft";
        case StreamKind::Pose: return "pose";
        case StreamKind::Other: return "other";
    }
    return "other";
}

StreamKind stream_kind_from_string(const std::string& s) {
    if (s == "tactile_embed") return StreamKind::TactileEmbed;
    if (s == "visual_embed") return StreamKind::VisualEmbed;
    if (s == "ft") return StreamKind::Ft;
    if (s == "pose") return StreamKind::Pose;
    if (s == "other") return StreamKind::Other;
    fail(ErrorCode::FormatError, "unknown stream kind '" + s + "'");
}

void SensorStream::validate() const {
    if (dim <= 0) fail(ErrorCode::CorruptStream, name + ": dim must be positive");
    if (values.rows() != static_cast<Eigen::Index>(timestamps.size()) || values.cols() != dim)
        fail(ErrorCode::CorruptStream, name + ": value matrix shape disagrees with timestamps/dim");
    for (std::size_t i = 0; i < timestamps.size(); ++i) {
        if (!std::isfinite(timestamps[i])) fail(ErrorCode::CorruptStream, name + ": non-finite timestamp");
        if (timestamps[i] < 0.0) fail(ErrorCode::CorruptStream, name + ": negative timestamp");
        if (i > 0 && !(timestamps[i] > timestamps[i - 1]))
            fail(ErrorCode::CorruptStream, name + ": timestamps not strictly increasing");
    }
    if (!values.allFinite()) fail(ErrorCode::CorruptStream, name + ": non-finite value");
}

bool operator==(const SensorStream& a, const SensorStream& b) {
    return a.name == b.name && a.kind == b.kind && a.rate == b.rate && a.dim == b.dim &&
           a.timestamps == b.timestamps && a.values.rows() == b.values.rows() &&
           a.values.cols() == b.values.cols() && a.values == b.values;
}

void LabelTrack::validate() const {
    for (int l : labels)
        if (l < 0 || l >= static_cast<int>(vocabulary.size()))
            fail(ErrorCode::LabelError, "label index " + std::to_string(l) + " outside vocabulary");
}

const SensorStream& Recording::stream(const std::string& stream_name) const {
    auto it = streams.find(stream_name);
    if (it == streams.end()) fail(ErrorCode::MissingFile, "recording '" + name + "' has no stream '" + stream_name + "'");
    return it->second;
}

void Recording::add_stream(SensorStream s) {
    if (streams.count(s.name)) fail(ErrorCode::FormatError, "duplicate stream name '" + s.name + "'");
    auto key = s.name;
    streams.emplace(std::move(key), std::move(s));
}

SensorStream resample(const SensorStream& stream, Rate target) {
    if (target.num <= 0 || target.den <= 0) fail(ErrorCode::ConfigError, "target rate must be positive");
    if (stream.empty()) fail(ErrorCode::EmptyStream, stream.name);
    stream.validate();
    const double t0 = stream.timestamps.front();
    return hold_on_grid(stream, t0, grid_count(stream.timestamps.back() - t0, target), target);
}

Recording synchronize(const Recording& rec, Rate target) {
    if (rec.streams.empty()) fail(ErrorCode::EmptyStream, "recording '" + rec.name + "' has no streams");
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const auto& [name, s] : rec.streams) {
        if (s.empty()) fail(ErrorCode::EmptyStream, name);
        s.validate();
        lo = std::max(lo, s.timestamps.front());
        hi = std::min(hi, s.timestamps.back());
    }
    if (lo > hi + kGridEps) fail(ErrorCode::NoOverlap, "streams of '" + rec.name + "' do not overlap in time");
    const auto count = grid_count(std::max(0.0, hi - lo), target);

    Recording out;
    out.name = rec.name;
    out.rate = target;
    out.meta = rec.meta;
    for (const auto& [name, s] : rec.streams) out.streams.emplace(name, hold_on_grid(s, lo, count, target));

    if (rec.labels) {
        if (rec.rate != target)
            fail(ErrorCode::ConfigError, "label track lives at " + rec.rate.str() + " Hz, cannot synchronize at " +
                                             target.str() + " Hz");
        LabelTrack track{rec.labels->vocabulary, {}};
        track.labels.reserve(static_cast<std::size_t>(count));
        for (std::int64_t k = 0; k < count; ++k) {
            const double tk = target.time_at(lo, k);
            const auto j = std::llround(tk * static_cast<double>(target.num) / static_cast<double>(target.den));
            if (j < 0 || j >= static_cast<std::int64_t>(rec.labels->labels.size()))
                fail(ErrorCode::DimMismatch, "label track of '" + rec.name + "' does not cover the common window");
            track.labels.push_back(rec.labels->labels[static_cast<std::size_t>(j)]);
        }
        out.labels = std::move(track);
    }
    return out;
}

Recording rebase(const Recording& rec) {
    double first = std::numeric_limits<double>::infinity();
    for (const auto& [_, s] : rec.streams)
        if (!s.empty()) first = std::min(first, s.timestamps.front());
    if (!std::isfinite(first) || first == 0.0) return rec;
    Recording out = rec;
    for (auto& [_, s] : out.streams)
        for (double& t : s.timestamps) t -= first;
    return out;
}

void save_recording(const Recording& rec, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "streams", ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

    json manifest;
    manifest["name"] = rec.name;
    manifest["rate_hz"] = rec.rate.hz();
    manifest["rate"] = rec.rate.str();
    manifest["streams"] = json::array();
    for (const auto& [name, s] : rec.streams) {
        if (!valid_identifier(name)) fail(ErrorCode::FormatError, "stream name '" + name + "' is not a valid identifier");
        s.validate();
        const std::string values_rel = "streams/" + name + ".tsm";
        const std::string ts_rel = "streams/" + name + ".ts.tsm";
        save_matrix(dir / values_rel, s.values);
        save_matrix(dir / ts_rel, column_matrix(s.timestamps), DType::F64);
        manifest["streams"].push_back({{"name", name},
                                       {"kind", to_string(s.kind)},
                                       {"rate_hz", s.rate.hz()},
                                       {"rate", s.rate.str()},
                                       {"dim", s.dim},
                                       {"path", values_rel},
                                       {"timestamps_path", ts_rel}});
    }
    if (rec.labels) {
        rec.labels->validate();
        std::vector<double> as_double(rec.labels->labels.begin(), rec.labels->labels.end());
        save_matrix(dir / "labels.tsm", column_matrix(as_double), DType::F32);
        manifest["labels"] = {{"path", "labels.tsm"}, {"vocabulary", rec.labels->vocabulary}};
    }
    manifest["meta"] = rec.meta;

    std::ofstream os(dir / "manifest.json");
    if (!os) fail(ErrorCode::IoError, "cannot write manifest in " + dir.string());
    os << manifest.dump(2) << '\n';
}

Recording load_recording(const fs::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream is(manifest_path);
    if (!is) fail(ErrorCode::MissingFile, manifest_path.string());
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        fail(ErrorCode::FormatError, manifest_path.string() + ": " + e.what());
    }

    auto need_file = [&](const std::string& rel) {
        const auto p = dir / rel;
        if (!fs::exists(p)) fail(ErrorCode::MissingFile, p.string());
        return p;
    };

    Recording rec;
    try {
        rec.name = manifest.at("name").get<std::string>();
        rec.rate = rate_from_json(manifest);
        std::set<std::string> seen;
        for (const auto& js : manifest.at("streams")) {
            SensorStream s;
            s.name = js.at("name").get<std::string>();
            if (!seen.insert(s.name).second) fail(ErrorCode::FormatError, "duplicate stream name '" + s.name + "'");
            s.kind = stream_kind_from_string(js.at("kind").get<std::string>());
            s.rate = rate_from_json(js);
            s.dim = js.at("dim").get<int>();
            s.values = load_matrix(need_file(js.at("path").get<std::string>()));
            if (s.values.cols() != s.dim)
                fail(ErrorCode::FormatError, s.name + ": manifest dim " + std::to_string(s.dim) + " but file has " +
                                                 std::to_string(s.values.cols()) + " columns");
            s.timestamps = column_values(load_matrix(need_file(js.at("timestamps_path").get<std::string>())));
            if (s.timestamps.size() != static_cast<std::size_t>(s.values.rows()))
                fail(ErrorCode::FormatError, s.name + ": timestamp count differs from frame count");
            s.validate();
            rec.streams.emplace(s.name, std::move(s));
        }
        if (manifest.contains("labels") && !manifest.at("labels").is_null()) {
            const auto& jl = manifest.at("labels");
            LabelTrack track;
            track.vocabulary = jl.at("vocabulary").get<std::vector<std::string>>();
            for (double v : column_values(load_matrix(need_file(jl.at("path").get<std::string>())))) {
                if (v != std::floor(v)) fail(ErrorCode::FormatError, "label file holds a non-integral value");
                track.labels.push_back(static_cast<int>(v));
            }
            track.validate();
            rec.labels = std::move(track);
        }
        if (manifest.contains("meta")) rec.meta = manifest.at("meta").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        fail(ErrorCode::FormatError, manifest_path.string() + ": " + e.what());
    }
    return rec;
}

}  // namespace tacseg
