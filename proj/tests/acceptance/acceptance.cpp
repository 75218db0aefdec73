// Acceptance run. Prints one PASS/FAIL line per criterion; exits 1 if any fail.
//
//   tacseg_acceptance <workdir> [--epochs N] [--trigger-epochs N] [--frames N]

#include "cli.hpp"

#include "tacseg/model.hpp"
#include "tacseg/recording.hpp"
#include "tacseg/rng.hpp"
#include "tacseg/segmenter.hpp"
#include "tacseg/synthgen.hpp"
#include "tacseg/windows.hpp"
#include "tacseg/wrench.hpp"

#include "support/gradcheck.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace tacseg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Options {
    fs::path work;
    int frames = 30000;
    int epochs = 8;
    int trigger_epochs = 4;
    std::uint64_t seed = 2024;
};

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

void tool(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const auto t0 = Clock::now();
    const int code = cli::run(args, out, err);
    std::cerr << out.str() << err.str();
    std::cerr << "  (" << args.front() << " took " << fmt("%.1f", seconds_since(t0)) << " s)\n";
    if (code != cli::kOk) throw std::runtime_error("tacseg " + args.front() + " exited " + std::to_string(code));
}

Eigen::Matrix3d random_rotation(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

Eigen::Vector3d random_vec(Rng& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng), u(rng)};
}

double wrench_gap(const Wrench& a, const Wrench& b) {
    return std::max((a.force - b.force).cwiseAbs().maxCoeff(), (a.torque - b.torque).cwiseAbs().maxCoeff());
}

// ---- criteria that need no data ----

Outcome wrench_algebra() {
    Rng rng(derive_seed(1, "wrench"));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const FrameTransform a{random_rotation(rng), random_vec(rng, 0.5)};
        const FrameTransform b{random_rotation(rng), random_vec(rng, 0.5)};
        const Wrench w{random_vec(rng, 50.0), random_vec(rng, 5.0)};
        worst = std::max(worst, wrench_gap(map_wrench(map_wrench(w, a), b), map_wrench(w, b.compose(a))));
        worst = std::max(worst, wrench_gap(map_wrench(map_wrench(w, a), a.inverse()), w));
    }
    const double c = std::cos(std::numbers::pi / 2), s = std::sin(std::numbers::pi / 2);
    Eigen::Matrix3d rz;
    rz << c, -s, 0, s, c, 0, 0, 0, 1;
    const Wrench hand = map_wrench({{1, 0, 0}, {0, 0, 0}}, {rz, {0, 0, 0.1}});
    const double hand_gap = std::max((hand.torque - Eigen::Vector3d(-0.1, 0, 0)).cwiseAbs().maxCoeff(),
                                     (hand.force - Eigen::Vector3d(0, 1, 0)).cwiseAbs().maxCoeff());
    return {worst < 1e-9 && hand_gap < 1e-12,
            "max property error " + fmt("%.2e", worst) + ", hand example error " + fmt("%.2e", hand_gap)};
}

Outcome gradient_correctness() {
    std::string detail;
    bool pass = true;
    for (Arch arch : {Arch::BiLstm, Arch::Tcn, Arch::Transformer}) {
        ModelConfig cfg;
        cfg.arch = arch;
        const auto model = init_model(cfg, derive_seed(7, "gradcheck"));
        Rng rng(derive_seed(7, "x"));
        std::normal_distribution<double> n(0.0, 1.0);
        Mat x(20, cfg.input_dim);
        for (auto& v : x.reshaped()) v = n(rng);
        std::vector<int> y(20);
        for (int t = 0; t < 20; ++t) y[static_cast<std::size_t>(t)] = (t * 7 + 3) % 5;
        const auto r = testing::gradient_check(model, x, y, 10, 1e-5, 1e-6, derive_seed(7, "sample"));
        const bool ok = r.max_rel_error < 1e-4 && r.full_coverage;
        pass = pass && ok;
        detail += to_string(arch) + " " + fmt("%.1e", r.max_rel_error) + " over " + std::to_string(r.checked) + "/" +
                  std::to_string(r.tensors) + " tensors; ";
        if (!ok) detail += "(worst " + r.worst_tensor + ") ";
    }
    return {pass, detail + "default sizes, T=20 C=5"};
}

Outcome soft_vote_oracle() {
    Rng rng(derive_seed(3, "softvote"));
    std::uniform_int_distribution<int> len(1, 200);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    int exact = 0, min_k = 1 << 30;
    for (int trial = 0; trial < 100; ++trial) {
        const int frames = len(rng);
        const auto plan = plan_windows(frames, 50, 10);
        std::vector<WindowProbs> wp;
        for (int s : plan.starts) {
            Mat p(plan.length(), 5);
            for (auto& v : p.reshaped()) v = u(rng);
            for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
            wp.push_back({s, p});
        }
        Mat sum = Mat::Zero(frames, 5);
        std::vector<int> k(static_cast<std::size_t>(frames), 0);
        for (const auto& w : wp)
            for (int i = 0; i < w.probs.rows(); ++i) {
                for (int c = 0; c < 5; ++c) sum(w.start + i, c) += w.probs(i, c);
                ++k[static_cast<std::size_t>(w.start + i)];
            }
        for (int t = 0; t < frames; ++t) {
            min_k = std::min(min_k, k[static_cast<std::size_t>(t)]);
            if (k[static_cast<std::size_t>(t)] > 0) sum.row(t) /= static_cast<double>(k[static_cast<std::size_t>(t)]);
        }
        if (soft_vote(wp, plan, frames).probs == sum) ++exact;
    }
    return {exact == 100 && min_k >= 1,
            std::to_string(exact) + "/100 exact, min coverage " + std::to_string(min_k)};
}

Outcome window_filter() {
    FusedSequence seq;
    seq.features = Mat::Zero(50, 1);
    int wrong = 0;
    // exact idle counts 0..50 in a single window
    for (int idle = 0; idle <= 50; ++idle) {
        seq.labels.assign(50, 1);
        std::fill(seq.labels.begin(), seq.labels.begin() + idle, 0);
        const bool kept = !make_training_windows(seq, plan_windows(50)).empty();
        if (kept != (idle <= 40)) ++wrong;
    }
    // random sequences against a direct count
    Rng rng(derive_seed(4, "windows"));
    std::uniform_int_distribution<int> len(1, 300);
    std::bernoulli_distribution idle_p(0.7);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int t = len(rng);
        seq.features = Mat::Zero(t, 1);
        seq.labels.resize(static_cast<std::size_t>(t));
        for (auto& l : seq.labels) l = idle_p(rng) ? 0 : 2;
        const auto plan = plan_windows(t);
        std::vector<int> expected;
        for (int s : plan.starts) {
            const int idle = static_cast<int>(std::count(seq.labels.begin() + s, seq.labels.begin() + s + plan.length(), 0));
            if (static_cast<double>(idle) / plan.length() <= 0.8) expected.push_back(s);
        }
        std::vector<int> got;
        for (const auto& w : make_training_windows(seq, plan)) got.push_back(w.start);
        if (got != expected) ++wrong;
        ++checked;
    }
    const auto plan100 = plan_windows(100, 50, 10);
    return {wrong == 0 && plan100.size() == 6,
            std::to_string(wrong) + " mismatches over 51 threshold cases + " + std::to_string(checked) +
                " random sequences; T=100 plan has " + std::to_string(plan100.size()) + " windows"};
}

Outcome resampling() {
    SynthConfig cfg;
    cfg.seed = 77;
    const auto demo = generate_demo(cfg);
    const auto synced = synchronize(rebase(demo.recording), kTactileRate);
    bool equal = true;
    const auto& grid = synced.streams.begin()->second.timestamps;
    for (const auto& [name, s] : synced.streams) equal = equal && s.timestamps == grid && s.rate == kTactileRate;
    equal = equal && synced.labels && synced.labels->labels.size() == grid.size();

    Rng rng(derive_seed(9, "resample"));
    std::uniform_int_distribution<int> n(1, 400), num(5, 2000), off(0, 1000);
    std::uniform_real_distribution<double> v(-10.0, 10.0);
    const Rate targets[] = {kTactileRate, Rate{60, 1}, Rate{100, 1}, Rate{25, 2}};
    int idempotent = 0;
    for (int trial = 0; trial < 100; ++trial) {
        SensorStream s;
        s.name = "x";
        s.rate = Rate{num(rng), 1};
        s.dim = 3;
        const int count = n(rng);
        const double t0 = off(rng) * 1e-3;
        s.values.resize(count, 3);
        for (int i = 0; i < count; ++i) {
            s.timestamps.push_back(t0 + i / s.rate.hz());
            for (int c = 0; c < 3; ++c) s.values(i, c) = v(rng);
        }
        const auto once = resample(s, targets[trial % 4]);
        if (resample(once, targets[trial % 4]) == once) ++idempotent;
    }
    return {equal && idempotent == 100,
            std::to_string(synced.streams.size()) + " streams on one " + std::to_string(grid.size()) +
                "-frame grid: " + (equal ? "yes" : "no") + "; idempotent " + std::to_string(idempotent) + "/100"};
}

Outcome determinism(const Options& opt) {
    const fs::path root = opt.work / "determinism";
    fs::remove_all(root);
    std::vector<std::string> metrics;
    for (const char* run : {"a", "b"}) {
        const fs::path dir = root / run;
        tool({"synth", "--demos", "8", "--seed", "31", "--out", (dir / "data").string()});
        tool({"train", "--data", (dir / "data").string(), "--out", (dir / "model").string(), "--epochs", "2",
              "--hidden", "16", "--layers", "1", "--seed", "5"});
        tool({"eval", "--checkpoint", (dir / "model" / "model.tsck").string(), "--data", (dir / "data").string(),
              "--out", (dir / "eval").string()});
        metrics.push_back(slurp(dir / "eval" / "metrics.json"));
    }
    const bool same_model = slurp(root / "a" / "model" / "model.tsck") == slurp(root / "b" / "model" / "model.tsck");
    return {!metrics[0].empty() && metrics[0] == metrics[1],
            std::string("metrics.json ") + (metrics[0] == metrics[1] ? "identical" : "differs") + " (" +
                std::to_string(metrics[0].size()) + " bytes); checkpoints " + (same_model ? "identical" : "differ")};
}

// ---- full-size pipeline ----

struct EndToEnd {
    double seconds = 0.0;
    long frames = 0;
    double trigger_iou = 0.0;
    nlohmann::json full, camera, tcn;
};

const std::vector<std::string>& demo_names(const fs::path& data) {
    static std::vector<std::string> names;
    if (names.empty()) {
        const auto splits = read_json(data / "splits.json");
        for (const char* s : {"train", "val", "test"})
            for (const auto& n : splits[s]) names.push_back(n.get<std::string>());
    }
    return names;
}

Outcome oracle_filtering(const Options& opt) {
    const fs::path data = opt.work / "e2e" / "data", oracle = opt.work / "e2e" / "oracle";
    tool({"ft-filter", "--in", data.string(), "--out", oracle.string(), "--oracle", "--seed", "3"});
    long outside = 0, outside_diff = 0, tests = 0, violations = 0;
    double worst_ratio = 0.0;
    for (const auto& name : demo_names(data)) {
        const auto raw = synchronize(rebase(load_recording(data / name)));
        const Mat& before = raw.stream("ft").values;
        const auto filtered = load_recording(oracle / name);
        const Mat& after = filtered.stream("ft").values;
        if (before.rows() != after.rows()) return {false, name + ": frame count changed"};
        const auto intervals = load_intervals_csv(oracle / name / "trigger_intervals.csv");
        const auto mask = labels_from_intervals(intervals, static_cast<int>(before.rows()));
        for (Eigen::Index t = 0; t < before.rows(); ++t)
            if (mask[static_cast<std::size_t>(t)] == 0) {
                ++outside;
                if (!(before.row(t).array() == after.row(t).array()).all()) ++outside_diff;
            }
        const auto stats = baseline_stats(before);
        for (const auto& iv : intervals)
            for (int c = 0; c < 6; ++c) {
                const double mean = after.block(iv.start, c, iv.length(), 1).mean();
                const double bound = 4.0 * stats.std[static_cast<std::size_t>(c)] / std::sqrt(iv.length());
                const double ratio = std::abs(mean - stats.mean[static_cast<std::size_t>(c)]) / bound;
                worst_ratio = std::max(worst_ratio, ratio);
                ++tests;
                if (ratio >= 1.0) ++violations;
            }
    }
    return {outside_diff == 0 && violations == 0 && tests > 0,
            std::to_string(outside_diff) + "/" + std::to_string(outside) + " outside frames changed; " +
                std::to_string(violations) + "/" + std::to_string(tests) +
                " interval-channel means beyond 4 sigma/sqrt(L) (worst at " + fmt("%.2f", worst_ratio) +
                " of the bound)"};
}

EndToEnd run_end_to_end(const Options& opt) {
    const fs::path root = opt.work / "e2e";
    fs::remove_all(root);
    const auto data = (root / "data").string(), clean = (root / "clean").string();
    const auto seed = std::to_string(opt.seed), epochs = std::to_string(opt.epochs);
    EndToEnd e;
    const auto t0 = Clock::now();
    tool({"synth", "--frames", std::to_string(opt.frames), "--seed", seed, "--out", data});
    tool({"train", "--task", "trigger", "--data", data, "--out", (root / "trigger").string(), "--epochs",
          std::to_string(opt.trigger_epochs), "--seed", seed});
    tool({"eval", "--checkpoint", (root / "trigger" / "model.tsck").string(), "--data", data, "--out",
          (root / "trigger_eval").string()});
    tool({"ft-filter", "--in", data, "--out", clean, "--checkpoint", (root / "trigger" / "model.tsck").string(),
          "--seed", seed});
    struct Config {
        std::string tag, arch, modalities;
        nlohmann::json* out;
    };
    for (const Config& c : {Config{"bilstm_full", "bilstm", "camera,tactile,ft,pose", &e.full},
                            Config{"bilstm_camera", "bilstm", "camera", &e.camera},
                            Config{"tcn_full", "tcn", "camera,tactile,ft,pose", &e.tcn}}) {
        const auto model = (root / c.tag).string();
        tool({"train", "--data", clean, "--out", model, "--arch", c.arch, "--modalities", c.modalities, "--epochs",
              epochs, "--seed", seed});
        tool({"eval", "--checkpoint", (root / c.tag / "model.tsck").string(), "--data", clean, "--out",
              (root / "eval").string(), "--label", c.tag});
        *c.out = read_json(root / "eval" / "metrics.json");
    }
    e.seconds = seconds_since(t0);
    e.trigger_iou = read_json(root / "trigger_eval" / "metrics.json")["mean_interval_iou"].get<double>();
    e.frames = read_json(root / "data" / "run_manifest.json")["config"]["frames"].get<long>();
    return e;
}

Outcome trigger_filtering(const Options& opt, const EndToEnd& e) {
    auto oracle = oracle_filtering(opt);
    const bool iou_ok = e.trigger_iou >= 0.5;
    return {oracle.pass && iou_ok,
            "oracle: " + oracle.detail + "; trained detector mean IoU " + fmt("%.4f", e.trigger_iou) +
                " on held-out demos"};
}

Outcome end_to_end(const EndToEnd& e) {
    const double full = e.full["accuracy"], camera = e.camera["accuracy"], tcn = e.tcn["accuracy"];
    const bool pass = full >= 0.90 && full - camera >= 0.05 && full >= tcn && e.seconds < 1800.0;
    return {pass, std::to_string(e.frames) + " frames; bilstm full " + fmt("%.4f", full) + ", camera-only " +
                      fmt("%.4f", camera) + ", tcn full " + fmt("%.4f", tcn) + "; pipeline " +
                      fmt("%.0f", e.seconds) + " s"};
}

Outcome released_f1(const EndToEnd& e) {
    std::string lowest;
    double low = 2.0;
    std::string detail;
    for (const auto& [name, scores] : e.full["per_class"].items()) {
        const double f1 = scores["f1"];
        detail += name + " " + fmt("%.3f", f1) + ", ";
        if (f1 < low) low = f1, lowest = name;
    }
    return {lowest == "released", "lowest is " + lowest + " (" + detail.substr(0, detail.size() - 2) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    opt.work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "tacseg_acceptance";
    for (int i = 2; i + 1 < argc; i += 2) {
        const std::string key = argv[i];
        const int value = std::stoi(argv[i + 1]);
        if (key == "--epochs") opt.epochs = value;
        else if (key == "--trigger-epochs") opt.trigger_epochs = value;
        else if (key == "--frames") opt.frames = value;
        else {
            std::cerr << "unknown option " << key << "\n";
            return 2;
        }
    }
    fs::create_directories(opt.work);

    int failed = 0;
    auto report = [&](const std::string& name, double limit_s, const std::function<Outcome()>& fn) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        const double s = seconds_since(t0);
        if (limit_s > 0 && s >= limit_s) {
            o.pass = false;
            o.detail += "; over the " + fmt("%.0f", limit_s) + " s limit";
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << " (" << fmt("%.2f", s)
                  << " s)" << std::endl;
    };

    report("wrench algebra", 1.0, wrench_algebra);
    report("gradient correctness", 120.0, gradient_correctness);
    report("soft-vote oracle", 0, soft_vote_oracle);
    report("window filter fidelity", 0, window_filter);

    EndToEnd e;
    bool e2e_ok = true;
    std::string e2e_error;
    try {
        e = run_end_to_end(opt);
    } catch (const std::exception& ex) {
        e2e_ok = false;
        e2e_error = ex.what();
    }
    auto needs_e2e = [&](std::function<Outcome()> fn) {
        return [=]() { return e2e_ok ? fn() : Outcome{false, "pipeline failed: " + e2e_error}; };
    };
    report("trigger filtering", 0, needs_e2e([&] { return trigger_filtering(opt, e); }));
    report("end-to-end fusion trend", 0, needs_e2e([&] { return end_to_end(e); }));
    report("released has lowest F1", 0, needs_e2e([&] { return released_f1(e); }));
    report("determinism", 0, [&] { return determinism(opt); });
    report("resampling", 0, resampling);

    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
