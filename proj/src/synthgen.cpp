#include "tacseg/synthgen.hpp"

#include "tacseg/errors.hpp"
#include "tacseg/fusion.hpp"
#include "tacseg/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace tacseg {
namespace {

struct Segment {
    Phase phase;
    int clip;  // clip the phase belongs to; the trailing idle uses clips_per_demo
    int start;
    int length;
};

int draw(Rng& rng, FrameRange r) { return std::uniform_int_distribution<int>(r.min, r.max)(rng); }

double as_float(double v) { return static_cast<double>(static_cast<float>(v)); }

void round_to_float(Mat& m) { m = m.unaryExpr([](double v) { return as_float(v); }); }

// Sample times of a stream that starts at 0 and stays inside the label grid.
std::vector<double> sample_times(Rate rate, Rate frame_rate, int frames) {
    const double limit = (static_cast<double>(frames) - 0.5) * static_cast<double>(frame_rate.den) /
                         static_cast<double>(frame_rate.num);
    std::vector<double> ts;
    for (std::int64_t i = 0;; ++i) {
        const double t = rate.time_at(0.0, i);
        if (t >= limit) break;
        ts.push_back(t);
    }
    return ts;
}

int frame_of(double t, Rate frame_rate, int frames) {
    const auto k = std::llround(t * static_cast<double>(frame_rate.num) / static_cast<double>(frame_rate.den));
    return static_cast<int>(std::clamp<long long>(k, 0, frames - 1));
}

std::vector<Eigen::VectorXd> phase_directions(std::uint64_t seed, std::string_view tag) {
    Rng rng(derive_seed(seed, tag));
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<Eigen::VectorXd> dirs;
    for (int p = 0; p < kNumPhases; ++p) {
        Eigen::VectorXd v(kEmbedDim);
        for (int i = 0; i < kEmbedDim; ++i) v(i) = n01(rng);
        dirs.push_back(v.normalized());
    }
    return dirs;
}

Eigen::Vector4d yaw_quat(double yaw) { return {std::cos(yaw / 2), 0.0, 0.0, std::sin(yaw / 2)}; }

}  // namespace

const std::vector<std::string>& skill_vocabulary() {
    static const std::vector<std::string> vocab{"idle", "grasped", "under_linear_force", "under_torque", "released"};
    return vocab;
}

void SynthConfig::validate() const {
    if (clips_per_demo < 1) fail(ErrorCode::ConfigError, "clips_per_demo must be >= 1");
    for (const auto* r : {&idle, &grasped, &linear_force, &torque, &released, &pull_frames, &lock_frames,
                          &release_frames})
        if (r->min < 1 || r->max < r->min) fail(ErrorCode::ConfigError, "duration ranges need 1 <= min <= max");
    for (const Rate* r : {&label_rate, &tactile_rate, &camera_rate, &ft_rate, &pose_rate})
        if (r->num <= 0 || r->den <= 0) fail(ErrorCode::ConfigError, "rates must be positive");
    if (!(tactile_rate == label_rate)) fail(ErrorCode::ConfigError, "tactile stream must run at the label rate");
    for (double v : {tactile_noise, visual_noise, ft_noise})
        if (!(v > 0.0)) fail(ErrorCode::ConfigError, "noise scales must be positive");
    for (double v : {tactile_separation, visual_separation, ft_separation, visual_drift, pose_noise_m, clip_spacing_m})
        if (!(v >= 0.0)) fail(ErrorCode::ConfigError, "signal scales must be non-negative");
    if (!(visual_drift_rho >= 0.0 && visual_drift_rho < 1.0)) fail(ErrorCode::ConfigError, "visual_drift_rho in [0,1)");
    if (!(artifact_amplitude_min > 0.0 && artifact_amplitude_max >= artifact_amplitude_min))
        fail(ErrorCode::ConfigError, "artifact amplitude range invalid");
    if (inject_artifacts && pull_frames.max + lock_frames.max > grasped.min)
        fail(ErrorCode::ConfigError, "pull and lock artifacts must fit inside the grasped phase");
}

SynthConfig SynthConfig::at_minimum_durations() const {
    SynthConfig c = *this;
    for (auto* r : {&c.idle, &c.grasped, &c.linear_force, &c.torque, &c.released, &c.pull_frames, &c.lock_frames,
                    &c.release_frames})
        r->max = r->min;
    return c;
}

Demo generate_demo(const SynthConfig& cfg) {
    cfg.validate();
    const Rate fr = cfg.label_rate;

    // phase schedule
    Rng sched(derive_seed(cfg.seed, "schedule"));
    std::vector<Segment> segs;
    int t = 0;
    auto push = [&](Phase p, int clip, FrameRange r) {
        const int len = draw(sched, r);
        segs.push_back({p, clip, t, len});
        t += len;
    };
    for (int c = 0; c < cfg.clips_per_demo; ++c) {
        push(Phase::Idle, c, cfg.idle);
        push(Phase::Grasped, c, cfg.grasped);
        push(Phase::UnderLinearForce, c, cfg.linear_force);
        push(Phase::UnderTorque, c, cfg.torque);
        push(Phase::Released, c, cfg.released);
    }
    push(Phase::Idle, cfg.clips_per_demo, cfg.idle);
    const int frames = t;

    GroundTruth truth;
    truth.skill.resize(static_cast<std::size_t>(frames));
    std::vector<const Segment*> seg_of(static_cast<std::size_t>(frames));
    for (const auto& s : segs)
        for (int k = s.start; k < s.start + s.length; ++k) {
            truth.skill[static_cast<std::size_t>(k)] = static_cast<int>(s.phase);
            seg_of[static_cast<std::size_t>(k)] = &s;
        }

    // trigger artifacts: pull then lock on grasp, release when letting go
    truth.trigger.assign(static_cast<std::size_t>(frames), 0);
    std::vector<double> amplitude;
    if (cfg.inject_artifacts) {
        Rng art(derive_seed(cfg.seed, "artifacts"));
        std::uniform_real_distribution<double> amp(cfg.artifact_amplitude_min, cfg.artifact_amplitude_max);
        for (const auto& s : segs) {
            if (s.phase == Phase::Grasped) {
                const int pull = draw(art, cfg.pull_frames);
                const int lock = draw(art, cfg.lock_frames);
                truth.artifacts.push_back({s.start, s.start + pull, TriggerClass::Pull});
                truth.artifacts.push_back({s.start + pull, s.start + pull + lock, TriggerClass::Lock});
                amplitude.push_back(amp(art) * cfg.ft_noise);
                amplitude.push_back(amp(art) * cfg.ft_noise);
            } else if (s.phase == Phase::Released) {
                const int len = draw(art, cfg.release_frames);
                truth.artifacts.push_back({s.start, std::min(frames, s.start + len), TriggerClass::Release});
                amplitude.push_back(amp(art) * cfg.ft_noise);
            }
        }
        for (const auto& iv : truth.artifacts)
            for (int k = iv.start; k < iv.end; ++k) truth.trigger[static_cast<std::size_t>(k)] = static_cast<int>(iv.cls);
    }

    // per-clip geometry
    Rng geo(derive_seed(cfg.seed, "geometry"));
    std::uniform_real_distribution<double> jitter(-0.02, 0.02);
    std::uniform_real_distribution<double> yaw_jitter(-0.3, 0.3);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    struct Clip {
        Eigen::Vector3d pos;
        double yaw;
        Eigen::Vector2d pull_dir;
        Eigen::Vector2d twist_dir;
    };
    std::vector<Clip> clips;
    for (int c = 0; c < cfg.clips_per_demo; ++c) {
        Clip k;
        k.pos = Eigen::Vector3d(c * cfg.clip_spacing_m + jitter(geo), jitter(geo), 0.05 + jitter(geo));
        k.yaw = yaw_jitter(geo);
        const double a = angle(geo), b = angle(geo);
        k.pull_dir = {std::cos(a), std::sin(a)};
        k.twist_dir = {std::cos(b), std::sin(b)};
        clips.push_back(k);
    }
    const Eigen::Vector3d home_left(-cfg.clip_spacing_m, 0.0, 0.15);
    const Eigen::Vector3d home_right(0.0, -0.3, 0.05);
    constexpr double kPullTravel = 0.04;
    constexpr double kTwist = 0.5;

    auto progress = [&](int k) {
        const Segment& s = *seg_of[static_cast<std::size_t>(k)];
        return (static_cast<double>(k - s.start) + 0.5) / static_cast<double>(s.length);
    };

    Recording rec;
    rec.name = "demo";
    rec.rate = fr;
    rec.meta["generator"] = "synthgen";
    rec.meta["seed"] = std::to_string(cfg.seed);

    // tactile: phase mean + white noise, one sample per frame
    {
        const auto dirs = phase_directions(cfg.signature_seed, "tactile");
        const double scale = cfg.tactile_separation * cfg.tactile_noise / std::numbers::sqrt2;
        Rng rng(derive_seed(cfg.seed, "tactile"));
        std::normal_distribution<double> noise(0.0, cfg.tactile_noise);
        SensorStream s{"tactile", StreamKind::TactileEmbed, cfg.tactile_rate, kEmbedDim, {}, {}};
        s.timestamps = sample_times(cfg.tactile_rate, fr, frames);
        s.values.resize(static_cast<Eigen::Index>(s.timestamps.size()), kEmbedDim);
        for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
            const int k = frame_of(s.timestamps[static_cast<std::size_t>(i)], fr, frames);
            for (int d = 0; d < kEmbedDim; ++d) s.values(i, d) = noise(rng);
            if (cfg.tactile_informative)
                s.values.row(i) += scale * dirs[static_cast<std::size_t>(truth.skill[static_cast<std::size_t>(k)])].transpose();
        }
        round_to_float(s.values);
        rec.add_stream(std::move(s));
    }

    // camera: slow AR(1) drift + weak phase mean + white noise
    {
        const auto dirs = phase_directions(cfg.signature_seed, "visual");
        const double scale = cfg.visual_separation * cfg.visual_noise / std::numbers::sqrt2;
        Rng rng(derive_seed(cfg.seed, "camera"));
        std::normal_distribution<double> n01(0.0, 1.0);
        SensorStream s{"camera", StreamKind::VisualEmbed, cfg.camera_rate, kEmbedDim, {}, {}};
        s.timestamps = sample_times(cfg.camera_rate, fr, frames);
        s.values.resize(static_cast<Eigen::Index>(s.timestamps.size()), kEmbedDim);
        Eigen::VectorXd drift(kEmbedDim);
        for (int d = 0; d < kEmbedDim; ++d) drift(d) = cfg.visual_drift * n01(rng);
        const double innovation = cfg.visual_drift * std::sqrt(1.0 - cfg.visual_drift_rho * cfg.visual_drift_rho);
        for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
            if (i > 0)
                for (int d = 0; d < kEmbedDim; ++d) drift(d) = cfg.visual_drift_rho * drift(d) + innovation * n01(rng);
            const int k = frame_of(s.timestamps[static_cast<std::size_t>(i)], fr, frames);
            for (int d = 0; d < kEmbedDim; ++d) s.values(i, d) = drift(d) + cfg.visual_noise * n01(rng);
            if (cfg.visual_informative)
                s.values.row(i) += scale * dirs[static_cast<std::size_t>(truth.skill[static_cast<std::size_t>(k)])].transpose();
        }
        round_to_float(s.values);
        rec.add_stream(std::move(s));
    }

    // F/T: baseline + phase wrench + noise + trigger spikes
    {
        Rng rng(derive_seed(cfg.seed, "ft"));
        std::normal_distribution<double> n01(0.0, 1.0);
        Eigen::Matrix<double, 6, 1> offset;
        for (int c = 0; c < 6; ++c) offset(c) = 0.3 * cfg.ft_noise * n01(rng);
        const double sep = cfg.ft_separation * cfg.ft_noise;
        std::vector<int> artifact_of(static_cast<std::size_t>(frames), -1);
        for (std::size_t a = 0; a < truth.artifacts.size(); ++a)
            for (int k = truth.artifacts[a].start; k < truth.artifacts[a].end; ++k)
                artifact_of[static_cast<std::size_t>(k)] = static_cast<int>(a);

        SensorStream s{"ft", StreamKind::Ft, cfg.ft_rate, 6, {}, {}};
        s.timestamps = sample_times(cfg.ft_rate, fr, frames);
        s.values.resize(static_cast<Eigen::Index>(s.timestamps.size()), 6);
        for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
            const int k = frame_of(s.timestamps[static_cast<std::size_t>(i)], fr, frames);
            Eigen::Matrix<double, 6, 1> w = offset;
            const Segment& seg = *seg_of[static_cast<std::size_t>(k)];
            if (cfg.ft_informative && seg.clip < cfg.clips_per_demo) {
                const Clip& clip = clips[static_cast<std::size_t>(seg.clip)];
                switch (seg.phase) {
                    case Phase::Grasped: w(2) -= 0.5 * sep; break;
                    case Phase::UnderLinearForce: {
                        const double mag = sep * (0.5 + progress(k));
                        w(0) += mag * clip.pull_dir(0);
                        w(1) += mag * clip.pull_dir(1);
                        w(2) -= 0.5 * sep;
                        break;
                    }
                    case Phase::UnderTorque:
                        w(3) += sep * clip.twist_dir(0);
                        w(4) += sep * clip.twist_dir(1);
                        w(2) -= 0.5 * sep;
                        break;
                    default: break;
                }
            }
            for (int c = 0; c < 6; ++c) w(c) += cfg.ft_noise * n01(rng);
            const int a = artifact_of[static_cast<std::size_t>(k)];
            if (a >= 0) {
                const double amp = amplitude[static_cast<std::size_t>(a)];
                switch (truth.artifacts[static_cast<std::size_t>(a)].cls) {
                    case TriggerClass::Pull: w(2) += amp; break;
                    case TriggerClass::Lock: w(5) += amp; break;
                    case TriggerClass::Release: w(2) -= amp; break;
                    default: break;
                }
            }
            s.values.row(i) = w.transpose();
        }
        round_to_float(s.values);
        rec.add_stream(std::move(s));
    }

    // poses: move between clips while idle, pull then twist at each clip
    {
        Rng rng(derive_seed(cfg.seed, "pose"));
        std::normal_distribution<double> noise(0.0, cfg.pose_noise_m);
        auto grasp_pos = [&](int c) { return clips[static_cast<std::size_t>(c)].pos; };
        auto end_pos = [&](int c) {
            const Clip& k = clips[static_cast<std::size_t>(c)];
            return Eigen::Vector3d(k.pos + kPullTravel * Eigen::Vector3d(k.pull_dir(0), k.pull_dir(1), 0.0));
        };
        auto left_at = [&](int k, Eigen::Vector3d& pos, double& yaw) {
            const Segment& s = *seg_of[static_cast<std::size_t>(k)];
            if (!cfg.pose_informative) {
                pos = home_left;
                yaw = 0.0;
                return;
            }
            const double u = progress(k);
            const int c = s.clip;
            switch (s.phase) {
                case Phase::Idle: {
                    const Eigen::Vector3d from = c == 0 ? home_left : end_pos(c - 1);
                    const double yaw_from = c == 0 ? 0.0 : clips[static_cast<std::size_t>(c - 1)].yaw + kTwist;
                    const Eigen::Vector3d to = c < cfg.clips_per_demo ? grasp_pos(c) : home_left;
                    const double yaw_to = c < cfg.clips_per_demo ? clips[static_cast<std::size_t>(c)].yaw : 0.0;
                    pos = from + u * (to - from);
                    yaw = yaw_from + u * (yaw_to - yaw_from);
                    break;
                }
                case Phase::Grasped:
                    pos = grasp_pos(c);
                    yaw = clips[static_cast<std::size_t>(c)].yaw;
                    break;
                case Phase::UnderLinearForce:
                    pos = grasp_pos(c) + u * (end_pos(c) - grasp_pos(c));
                    yaw = clips[static_cast<std::size_t>(c)].yaw;
                    break;
                case Phase::UnderTorque:
                    pos = end_pos(c);
                    yaw = clips[static_cast<std::size_t>(c)].yaw + u * kTwist;
                    break;
                case Phase::Released:
                    pos = end_pos(c);
                    yaw = clips[static_cast<std::size_t>(c)].yaw + kTwist;
                    break;
            }
        };
        auto right_at = [&](int k) {
            const Segment& s = *seg_of[static_cast<std::size_t>(k)];
            if (!cfg.pose_informative || s.clip >= cfg.clips_per_demo) return home_right;
            // the other hand keeps the cable taut next to the current clip
            return Eigen::Vector3d(home_right + Eigen::Vector3d(clips[static_cast<std::size_t>(s.clip)].pos(0), 0.0, 0.0));
        };

        SensorStream left{"pose_left", StreamKind::Pose, cfg.pose_rate, kPoseDim, {}, {}};
        SensorStream right{"pose_right", StreamKind::Pose, cfg.pose_rate, kPoseDim, {}, {}};
        left.timestamps = sample_times(cfg.pose_rate, fr, frames);
        right.timestamps = left.timestamps;
        left.values.resize(static_cast<Eigen::Index>(left.timestamps.size()), kPoseDim);
        right.values.resize(left.values.rows(), kPoseDim);
        for (Eigen::Index i = 0; i < left.values.rows(); ++i) {
            const int k = frame_of(left.timestamps[static_cast<std::size_t>(i)], fr, frames);
            Eigen::Vector3d pos;
            double yaw = 0.0;
            left_at(k, pos, yaw);
            for (int d = 0; d < 3; ++d) left.values(i, d) = pos(d) + noise(rng);
            left.values.row(i).tail<4>() = yaw_quat(yaw).transpose();
            const Eigen::Vector3d rp = right_at(k);
            for (int d = 0; d < 3; ++d) right.values(i, d) = rp(d) + noise(rng);
            right.values.row(i).tail<4>() = yaw_quat(0.0).transpose();
        }
        round_to_float(left.values);
        round_to_float(right.values);
        rec.add_stream(std::move(left));
        rec.add_stream(std::move(right));
    }

    rec.labels = LabelTrack{skill_vocabulary(), truth.skill};
    return {std::move(rec), std::move(truth)};
}

void SplitFractions::validate() const {
    for (double f : {train, val, test})
        if (!(f >= 0.0 && f <= 1.0)) fail(ErrorCode::ConfigError, "split fractions must lie in [0, 1]");
    if (std::abs(train + val + test - 1.0) > 1e-9) fail(ErrorCode::ConfigError, "split fractions must sum to 1");
}

Demo generate_indexed_demo(const SynthConfig& cfg, int index) {
    SynthConfig c = cfg;
    c.seed = derive_seed(cfg.seed, "demo", static_cast<std::uint64_t>(index));
    Demo d = generate_demo(c);
    char name[32];
    std::snprintf(name, sizeof(name), "demo_%03d", index);
    d.recording.name = name;
    return d;
}

std::array<int, 3> split_counts(int n_demos, const SplitFractions& split) {
    split.validate();
    const int n_train = std::min(n_demos, static_cast<int>(std::lround(n_demos * split.train)));
    const int n_val = std::min(n_demos - n_train, static_cast<int>(std::lround(n_demos * split.val)));
    return {n_train, n_val, n_demos - n_train - n_val};
}

DatasetSplits generate_dataset(const SynthConfig& cfg, int n_demos, const SplitFractions& split) {
    cfg.validate();
    if (n_demos < 1) fail(ErrorCode::ConfigError, "need at least one demo");
    const auto counts = split_counts(n_demos, split);
    DatasetSplits out;
    for (int i = 0; i < n_demos; ++i) {
        Demo d = generate_indexed_demo(cfg, i);
        if (i < counts[0])
            out.train.push_back(std::move(d));
        else if (i < counts[0] + counts[1])
            out.val.push_back(std::move(d));
        else
            out.test.push_back(std::move(d));
    }
    return out;
}

int demos_for_frames(const SynthConfig& cfg, int frames) {
    auto mean = [](FrameRange r) { return 0.5 * (r.min + r.max); };
    const double per_demo = cfg.clips_per_demo * (mean(cfg.idle) + mean(cfg.grasped) + mean(cfg.linear_force) +
                                                  mean(cfg.torque) + mean(cfg.released)) +
                            mean(cfg.idle);
    return std::max(1, static_cast<int>(std::lround(frames / per_demo)));
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
    nlohmann::json arts = nlohmann::json::array();
    for (const auto& iv : gt.artifacts)
        arts.push_back({{"start", iv.start}, {"end", iv.end}, {"class", trigger_vocabulary()[static_cast<std::size_t>(iv.cls)]}});
    const nlohmann::json j = {{"skill", gt.skill}, {"trigger", gt.trigger}, {"artifacts", arts}};
    std::ofstream os(path);
    if (!os) fail(ErrorCode::IoError, "cannot write " + path.string());
    os << j.dump() << '\n';
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::MissingFile, path.string());
    try {
        const auto j = nlohmann::json::parse(is);
        GroundTruth gt;
        gt.skill = j.at("skill").get<std::vector<int>>();
        gt.trigger = j.at("trigger").get<std::vector<int>>();
        const auto& vocab = trigger_vocabulary();
        for (const auto& a : j.at("artifacts")) {
            const auto name = a.at("class").get<std::string>();
            const auto it = std::find(vocab.begin(), vocab.end(), name);
            if (it == vocab.end()) fail(ErrorCode::FormatError, "unknown trigger class " + name);
            gt.artifacts.push_back({a.at("start").get<int>(), a.at("end").get<int>(),
                                    static_cast<TriggerClass>(it - vocab.begin())});
        }
        if (gt.skill.size() != gt.trigger.size()) fail(ErrorCode::FormatError, "skill/trigger lengths differ");
        return gt;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
}

}  // namespace tacseg
