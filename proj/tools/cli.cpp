#include "cli.hpp"

#include "tacseg/errors.hpp"
#include "tacseg/fusion.hpp"
#include "tacseg/model.hpp"
#include "tacseg/pipeline.hpp"
#include "tacseg/rng.hpp"
#include "tacseg/segmenter.hpp"
#include "tacseg/synthgen.hpp"
#include "tacseg/trainer.hpp"
#include "tacseg/trigger.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace tacseg::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

const std::vector<std::string> kSplitNames{"train", "val", "test"};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) fail(ErrorCode::IoError, "cannot write " + tmp.string());
        os << content;
        if (!os) fail(ErrorCode::IoError, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::IoError, "cannot move " + tmp.string() + " into place: " + ec.message());
}

json read_json(const fs::path& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::MissingFile, path.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        fail(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

struct RunManifest {
    std::string command;
    json config = json::object();
    json inputs = json::array();
    json outputs = json::array();
    std::optional<std::uint64_t> seed;
    Clock::time_point started = Clock::now();

    void write(const fs::path& dir) const {
        json j;
        j["command"] = command;
        j["config"] = config;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        if (seed) j["seed"] = *seed;
        j["tool_version"] = kToolVersion;
        j["duration_s"] = std::chrono::duration<double>(Clock::now() - started).count();
        write_atomic(dir / "run_manifest.json", j.dump(2) + "\n");
    }
};

// Dataset directory: splits.json plus one recording directory per demo.
struct Dataset {
    fs::path root;
    std::map<std::string, std::vector<std::string>> splits;

    const std::vector<std::string>& split(const std::string& name) const {
        const auto it = splits.find(name);
        if (it == splits.end()) fail(ErrorCode::FormatError, root.string() + ": no split '" + name + "'");
        return it->second;
    }
};

Dataset open_dataset(const fs::path& root) {
    const auto j = read_json(root / "splits.json");
    Dataset d{root, {}};
    try {
        for (const auto& [name, list] : j.items()) d.splits[name] = list.get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        fail(ErrorCode::FormatError, "splits.json: " + std::string(e.what()));
    }
    return d;
}

json splits_json(const Dataset& d) {
    json j = json::object();
    for (const auto& [name, list] : d.splits) j[name] = list;
    return j;
}

Rate parse_rate(double hz) {
    if (!(hz > 0.0)) throw UsageError("--rate-hz must be positive");
    return Rate::from_hz(hz);
}

ModalitySet parse_modalities(const std::string& s) {
    try {
        return ModalitySet::parse(s);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

Arch parse_arch(const std::string& s) {
    try {
        return arch_from_string(s);
    } catch (const Error&) {
        throw UsageError("unknown architecture '" + s + "' (expected bilstm, tcn or transformer)");
    }
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
    int demos = 0;
    std::uint64_t seed = 0;
    std::string out;
    double train = 0.8, val = 0.1, test = 0.1;
    int target_frames = 30000;
};

void cmd_synth(const SynthArgs& a, std::ostream& log) {
    SplitFractions split{a.train, a.val, a.test};
    try {
        split.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (a.demos < 0) throw UsageError("--demos must be positive");
    RunManifest manifest;
    manifest.command = "synth";
    manifest.seed = a.seed;

    SynthConfig cfg;
    cfg.seed = a.seed;
    const int n = a.demos > 0 ? a.demos : demos_for_frames(cfg, a.target_frames);
    const auto counts = split_counts(n, split);
    const fs::path out(a.out);
    ensure_dir(out);

    Dataset ds{out, {}};
    for (const auto& s : kSplitNames) ds.splits[s] = {};
    long frames = 0;
    for (int i = 0; i < n; ++i) {
        Demo d = generate_indexed_demo(cfg, i);
        const fs::path dir = out / d.recording.name;
        save_recording(d.recording, dir);
        save_ground_truth(d.truth, dir / "ground_truth.json");
        const int s = i < counts[0] ? 0 : (i < counts[0] + counts[1] ? 1 : 2);
        ds.splits[kSplitNames[static_cast<std::size_t>(s)]].push_back(d.recording.name);
        frames += static_cast<long>(d.truth.skill.size());
        manifest.outputs.push_back(d.recording.name);
    }
    write_atomic(out / "splits.json", splits_json(ds).dump(2) + "\n");
    log << "synth: " << n << " demos, " << frames << " frames (" << counts[0] << "/" << counts[1] << "/" << counts[2]
        << ") -> " << out.string() << "\n";

    manifest.config = {{"demos", n},
                       {"seed", a.seed},
                       {"fractions", {a.train, a.val, a.test}},
                       {"frames", frames},
                       {"rate", cfg.label_rate.str()}};
    manifest.outputs.push_back("splits.json");
    manifest.write(out);
}

// --- ft-filter ---------------------------------------------------------------

struct FilterArgs {
    std::string in, out, checkpoint, intervals, ft_transform;
    bool oracle = false;
    int pad = 2;
    std::uint64_t seed = 0;
    double rate_hz = 50.0 / 3.0;
    int window = kDefaultWindow, stride = kDefaultStride;
};

void cmd_ft_filter(const FilterArgs& a, std::ostream& log) {
    const int modes = (a.oracle ? 1 : 0) + (a.checkpoint.empty() ? 0 : 1) + (a.intervals.empty() ? 0 : 1);
    if (modes != 1) throw UsageError("give exactly one of --checkpoint, --oracle, --intervals");
    if (a.pad < 0) throw UsageError("--pad must be >= 0");
    const Rate rate = parse_rate(a.rate_hz);
    RunManifest manifest;
    manifest.command = "ft-filter";
    manifest.seed = a.seed;

    std::optional<Checkpoint> ckpt;
    if (!a.checkpoint.empty()) {
        if (!fs::exists(a.checkpoint)) fail(ErrorCode::MissingFile, a.checkpoint);
        ckpt = load_checkpoint(a.checkpoint);
        require_vocabulary(*ckpt, trigger_vocabulary());
    }
    std::optional<FrameTransform> tf;
    if (!a.ft_transform.empty()) tf = load_frame_transform(a.ft_transform);

    const fs::path in(a.in), out(a.out);
    const bool dataset = fs::exists(in / "splits.json");
    std::vector<std::pair<fs::path, fs::path>> jobs;
    std::optional<Dataset> ds;
    if (dataset) {
        if (!a.intervals.empty()) throw UsageError("--intervals applies to a single recording");
        ds = open_dataset(in);
        for (const auto& [_, names] : ds->splits)
            for (const auto& n : names) jobs.emplace_back(in / n, out / n);
    } else {
        jobs.emplace_back(in, out);
    }

    std::size_t total = 0;
    for (const auto& [src, dst] : jobs) {
        Recording rec = rebase(load_recording(src));
        if (!rec.has_stream("ft")) fail(ErrorCode::ConfigError, rec.name + " has no 'ft' stream");
        if (tf) {
            auto mapped = map_wrench_stream(rec.stream("ft"), *tf);
            rec.streams.erase("ft");
            rec.add_stream(std::move(mapped));
        }
        Recording synced = synchronize(rec, rate);
        Mat& ft = synced.streams.at("ft").values;
        const int frames = static_cast<int>(ft.rows());

        IntervalSet found;
        if (ckpt) {
            found = detect_trigger_intervals(trigger_features(ft, ckpt->norm), ckpt->model, a.window, a.stride);
        } else if (a.oracle) {
            found = load_ground_truth(src / "ground_truth.json").artifacts;
        } else {
            found = load_intervals_csv(a.intervals);
        }
        validate_intervals(found, frames);
        const IntervalSet padded = pad_intervals(found, a.pad, frames);
        const auto stats = baseline_stats(ft, std::min(kBaselineFrames, frames));
        ft = filter_trigger_artifacts(ft, padded, stats, derive_seed(a.seed, "noise:" + synced.name));

        save_recording(synced, dst);
        save_intervals_csv(padded, dst / "trigger_intervals.csv");
        if (fs::exists(src / "ground_truth.json"))
            fs::copy_file(src / "ground_truth.json", dst / "ground_truth.json", fs::copy_options::overwrite_existing);
        total += padded.size();
        manifest.inputs.push_back(src.string());
        manifest.outputs.push_back(dst.string());
    }
    if (ds) write_atomic(out / "splits.json", splits_json(*ds).dump(2) + "\n");
    log << "ft-filter: " << jobs.size() << " recording(s), " << total << " interval(s) replaced\n";

    manifest.config = {{"mode", ckpt ? "model" : (a.oracle ? "oracle" : "intervals")},
                       {"pad", a.pad},
                       {"rate", rate.str()},
                       {"checkpoint", a.checkpoint}};
    manifest.write(out);
}

// --- shared loading ----------------------------------------------------------

struct LoadedSplit {
    std::vector<RawSequence> raw;
    std::vector<std::vector<int>> trigger_labels;
    std::vector<IntervalSet> artifacts;
    std::vector<std::string> vocabulary;
};

LoadedSplit load_split(const Dataset& ds, const std::string& split, const PrepOptions& prep, bool need_truth) {
    LoadedSplit out;
    for (const auto& name : ds.split(split)) {
        const fs::path dir = ds.root / name;
        const Recording rec = load_recording(dir);
        if (rec.labels) {
            if (out.vocabulary.empty())
                out.vocabulary = rec.labels->vocabulary;
            else if (out.vocabulary != rec.labels->vocabulary)
                fail(ErrorCode::VocabularyMismatch, name + " uses a different label vocabulary");
        }
        out.raw.push_back(prepare_sequence(rec, prep));
        if (need_truth) {
            auto gt = load_ground_truth(dir / "ground_truth.json");
            if (static_cast<int>(gt.trigger.size()) != out.raw.back().frames())
                fail(ErrorCode::DimMismatch, name + ": ground truth covers " + std::to_string(gt.trigger.size()) +
                                                 " frames, recording has " + std::to_string(out.raw.back().frames()));
            out.trigger_labels.push_back(std::move(gt.trigger));
            out.artifacts.push_back(std::move(gt.artifacts));
        }
    }
    return out;
}

PrepOptions prep_for(const std::string& task, const ModalitySet& modalities, Rate rate) {
    PrepOptions p;
    p.rate = rate;
    if (task == "trigger") {
        p.required = {false, false, true, false};
    } else {
        p.required = modalities;
    }
    return p;
}

std::vector<FusedSequence> to_sequences(const LoadedSplit& split, const std::string& task, const NormStats& norm,
                                        const ModalitySet& modalities) {
    std::vector<FusedSequence> out;
    for (std::size_t i = 0; i < split.raw.size(); ++i) {
        if (task == "trigger") {
            out.push_back({trigger_features(split.raw[i].ft, norm), split.trigger_labels[i], split.raw[i].name});
        } else {
            if (split.raw[i].labels.empty()) fail(ErrorCode::LabelsRequired, split.raw[i].name + " has no label track");
            out.push_back(to_fused(split.raw[i], norm, modalities));
        }
    }
    return out;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
    std::string data, out, checkpoint, task = "skill", arch = "bilstm", modalities = "all";
    int epochs = 30, patience = 5, batch = 32, window = kDefaultWindow, stride = kDefaultStride;
    double lr = 1e-3, lr_decay = 0.5, rate_hz = 50.0 / 3.0, dropout = 0.3;
    int lr_decay_every = 20;
    std::optional<double> max_idle_ratio;
    std::optional<int> hidden, layers;
    std::uint64_t seed = 0;
};

void cmd_train(const TrainArgs& a, std::ostream& log) {
    const Arch arch = parse_arch(a.arch);
    const ModalitySet mods = parse_modalities(a.modalities);
    const Rate rate = parse_rate(a.rate_hz);
    const bool trigger = a.task == "trigger";

    TrainConfig tc;
    tc.epochs_max = a.epochs;
    tc.patience = a.patience;
    tc.lr0 = a.lr;
    tc.lr_decay = a.lr_decay;
    tc.lr_decay_every = a.lr_decay_every;
    tc.batch_size = a.batch;
    tc.seed = a.seed;
    tc.window = a.window;
    tc.stride = a.stride;
    // trigger windows are mostly background by construction
    tc.max_idle_ratio = a.max_idle_ratio.value_or(trigger ? 1.0 : kDefaultMaxIdleRatio);
    try {
        tc.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }

    ModelConfig mc;
    mc.arch = arch;
    mc.dropout_rate = a.dropout;
    mc.input_dim = trigger ? kFtDim : kFusedDim;
    if (a.hidden) {
        mc.lstm_hidden = *a.hidden;
        mc.tcn_channels = *a.hidden;
        mc.tf_d_model = *a.hidden;
        mc.tf_ffn_dim = 2 * *a.hidden;
    }
    if (a.layers) {
        mc.lstm_layers = *a.layers;
        mc.tcn_blocks = *a.layers;
        mc.tf_layers = *a.layers;
    }

    RunManifest manifest;
    manifest.command = "train";
    manifest.seed = a.seed;
    const Dataset ds = open_dataset(a.data);
    const auto prep = prep_for(a.task, mods, rate);
    const LoadedSplit tr = load_split(ds, "train", prep, trigger);
    const LoadedSplit va = load_split(ds, "val", prep, trigger);
    if (tr.raw.empty() || va.raw.empty()) fail(ErrorCode::EmptyDataset, "train and val splits must be non-empty");

    std::vector<Mat> raw_channels;
    for (const auto& r : tr.raw) raw_channels.push_back(r.raw_channels());
    const NormStats norm = fit_norm(raw_channels);
    raw_channels.clear();

    std::vector<std::string> vocab = trigger ? trigger_vocabulary() : tr.vocabulary;
    if (vocab.empty()) fail(ErrorCode::LabelsRequired, "training recordings carry no label track");
    mc.num_classes = static_cast<int>(vocab.size());
    try {
        mc.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }

    const auto train_seqs = to_sequences(tr, a.task, norm, mods);
    const auto val_seqs = to_sequences(va, a.task, norm, mods);

    const fs::path out(a.out);
    ensure_dir(out);
    const fs::path ckpt_path = a.checkpoint.empty() ? out / "model.tsck" : fs::path(a.checkpoint);
    std::ofstream jsonl(out / "train_log.jsonl", std::ios::trunc);
    if (!jsonl) fail(ErrorCode::IoError, "cannot write train_log.jsonl");

    log << "train: " << a.task << " " << to_string(arch) << " [" << (trigger ? std::string("ft") : mods.str()) << "] on " << train_seqs.size()
        << " train / " << val_seqs.size() << " val sequences\n";
    auto result = train(tc, train_seqs, val_seqs, mc, [&](const EpochRecord& e) {
        log << "  epoch " << e.epoch << " loss " << e.train_loss << " val_acc " << format_accuracy(e.val_accuracy)
            << " (" << e.windows << " windows)\n";
        log.flush();
    });
    jsonl << to_jsonl(result.report);
    jsonl.close();

    Checkpoint ck{std::move(result.model), norm, vocab, trigger ? ModalitySet{false, false, true, false} : mods, a.task};
    save_checkpoint(ck, ckpt_path);
    log << "train: best epoch " << result.report.best_epoch << " val_acc "
        << format_accuracy(result.report.best_accuracy) << " (" << result.report.stop_reason << ") -> "
        << ckpt_path.string() << "\n";

    json cfg = to_json(tc);
    cfg["task"] = a.task;
    cfg["model"] = to_json(mc);
    cfg["modalities"] = mods.str();
    cfg["rate"] = rate.str();
    manifest.config = cfg;
    manifest.inputs.push_back(a.data);
    manifest.outputs = {ckpt_path.string(), (out / "train_log.jsonl").string()};
    manifest.write(out);
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint, data, out, split = "test", label;
    int window = kDefaultWindow, stride = kDefaultStride;
    double rate_hz = 50.0 / 3.0;
};

void cmd_eval(const EvalArgs& a, std::ostream& log) {
    const Rate rate = parse_rate(a.rate_hz);
    if (!fs::exists(a.checkpoint)) fail(ErrorCode::MissingFile, a.checkpoint);
    RunManifest manifest;
    manifest.command = "eval";
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const bool trigger = ck.task == "trigger";
    if (trigger) require_vocabulary(ck, trigger_vocabulary());

    const Dataset ds = open_dataset(a.data);
    const LoadedSplit split = load_split(ds, a.split, prep_for(ck.task, ck.modalities, rate), trigger);
    if (split.raw.empty()) fail(ErrorCode::EmptyDataset, "split '" + a.split + "' is empty");
    if (!trigger) require_vocabulary(ck, split.vocabulary);
    const auto seqs = to_sequences(split, ck.task, ck.norm, ck.modalities);

    std::vector<int> predicted, truth;
    double iou_sum = 0.0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const auto pred = segment(ck.model, seqs[i].features, a.window, a.stride);
        predicted.insert(predicted.end(), pred.labels.begin(), pred.labels.end());
        truth.insert(truth.end(), seqs[i].labels.begin(), seqs[i].labels.end());
        if (trigger) iou_sum += mean_interval_iou(split.artifacts[i], intervals_from_labels(pred.labels));
    }
    const Metrics m = evaluate(predicted, truth, ck.model.config().num_classes);
    json j = metrics_to_json(m, ck.vocabulary);
    const std::string label = a.label.empty() ? to_string(ck.model.config().arch) + ":" + ck.modalities.str() : a.label;
    j["configuration"] = label;
    j["split"] = a.split;
    j["sequences"] = seqs.size();
    if (trigger) j["mean_interval_iou"] = iou_sum / static_cast<double>(seqs.size());

    const fs::path out(a.out);
    ensure_dir(out);
    write_atomic(out / "metrics.json", j.dump(2) + "\n");
    append_f1_table(out / "f1_table.csv", label, m, ck.vocabulary);
    log << "eval: " << label << " accuracy " << format_accuracy(m.frame_accuracy) << " on " << m.total << " frames\n";

    manifest.config = {{"split", a.split}, {"window", a.window}, {"stride", a.stride}, {"label", label}};
    manifest.inputs = {a.checkpoint, a.data};
    manifest.outputs = {(out / "metrics.json").string(), (out / "f1_table.csv").string()};
    manifest.write(out);
}

// --- infer -------------------------------------------------------------------

struct InferArgs {
    std::string checkpoint, in, out;
    int window = kDefaultWindow, stride = kDefaultStride;
    double rate_hz = 50.0 / 3.0;
};

void cmd_infer(const InferArgs& a, std::ostream& log) {
    const Rate rate = parse_rate(a.rate_hz);
    if (!fs::exists(a.checkpoint)) fail(ErrorCode::MissingFile, a.checkpoint);
    RunManifest manifest;
    manifest.command = "infer";
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const bool trigger = ck.task == "trigger";
    const Recording rec = load_recording(a.in);
    const RawSequence raw = prepare_sequence(rec, prep_for(ck.task, ck.modalities, rate));
    const Mat features = trigger ? trigger_features(raw.ft, ck.norm) : to_fused(raw, ck.norm, ck.modalities).features;
    const Prediction pred = segment(ck.model, features, a.window, a.stride);

    const fs::path out(a.out);
    ensure_dir(out);
    write_prediction(pred, ck.vocabulary, out / "probs.tsm", out / "labels.csv");
    const std::vector<int>* truth = (!trigger && raw.labels.size() == pred.labels.size()) ? &raw.labels : nullptr;
    write_atomic(out / "timeline.svg", timeline_svg(pred.labels, ck.vocabulary, truth));
    manifest.outputs = {"probs.tsm", "labels.csv", "timeline.svg"};
    if (trigger) {
        save_intervals_csv(intervals_from_labels(pred.labels), out / "trigger_intervals.csv");
        manifest.outputs.push_back("trigger_intervals.csv");
    }
    log << "infer: " << pred.labels.size() << " frames -> " << out.string() << "\n";
    manifest.config = {{"window", a.window}, {"stride", a.stride}, {"rate", rate.str()}};
    manifest.inputs = {a.checkpoint, a.in};
    manifest.write(out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multimodal demonstration segmentation toolkit", "tacseg"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic demonstration dataset");
    synth->add_option("--demos", sa.demos, "Number of demos (default: about 30k frames' worth)");
    synth->add_option("--seed", sa.seed, "Base seed");
    synth->add_option("--out", sa.out, "Output directory")->required();
    synth->add_option("--train-frac", sa.train, "Training fraction");
    synth->add_option("--val-frac", sa.val, "Validation fraction");
    synth->add_option("--test-frac", sa.test, "Test fraction");
    synth->add_option("--frames", sa.target_frames, "Target total frames when --demos is not given");

    FilterArgs fa;
    auto* filter = app.add_subcommand("ft-filter", "Remove trigger artifacts from F/T streams");
    filter->add_option("--in", fa.in, "Recording or dataset directory")->required();
    filter->add_option("--out", fa.out, "Output directory")->required();
    filter->add_option("--checkpoint", fa.checkpoint, "Trigger model checkpoint");
    filter->add_flag("--oracle", fa.oracle, "Use ground_truth.json artifact intervals");
    filter->add_option("--intervals", fa.intervals, "Interval CSV (start,end,class)");
    filter->add_option("--pad", fa.pad, "Frames added on each side of an interval");
    filter->add_option("--seed", fa.seed, "Noise seed");
    filter->add_option("--rate-hz", fa.rate_hz, "Common frame rate");
    filter->add_option("--ft-transform", fa.ft_transform, "FrameTransform JSON applied to the F/T stream first");
    filter->add_option("--window", fa.window, "Window length");
    filter->add_option("--stride", fa.stride, "Window stride");

    TrainArgs ta;
    auto* trn = app.add_subcommand("train", "Train a segmentation model");
    trn->add_option("--data", ta.data, "Dataset directory")->required();
    trn->add_option("--out", ta.out, "Output directory")->required();
    trn->add_option("--checkpoint", ta.checkpoint, "Checkpoint path (default <out>/model.tsck)");
    trn->add_option("--task", ta.task, "skill or trigger")->check(CLI::IsMember({"skill", "trigger"}));
    trn->add_option("--arch", ta.arch, "bilstm, tcn or transformer");
    trn->add_option("--modalities", ta.modalities, "Comma list of camera,tactile,ft,pose or 'all'");
    trn->add_option("--epochs", ta.epochs, "Maximum epochs");
    trn->add_option("--patience", ta.patience, "Early-stopping patience");
    trn->add_option("--lr", ta.lr, "Initial learning rate");
    trn->add_option("--lr-decay", ta.lr_decay, "Step decay factor");
    trn->add_option("--lr-decay-every", ta.lr_decay_every, "Epochs between decays");
    trn->add_option("--batch", ta.batch, "Windows per batch");
    trn->add_option("--window", ta.window, "Window length");
    trn->add_option("--stride", ta.stride, "Window stride");
    trn->add_option("--max-idle-ratio", ta.max_idle_ratio, "Discard windows idler than this");
    trn->add_option("--rate-hz", ta.rate_hz, "Common frame rate");
    trn->add_option("--dropout", ta.dropout, "Dropout before the classifier");
    trn->add_option("--hidden", ta.hidden, "Hidden width (LSTM units / TCN channels / d_model)");
    trn->add_option("--layers", ta.layers, "Layers (LSTM layers / TCN blocks / encoder layers)");
    trn->add_option("--seed", ta.seed, "Base seed");

    EvalArgs ea;
    auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    evl->add_option("--checkpoint", ea.checkpoint, "Checkpoint")->required();
    evl->add_option("--data", ea.data, "Dataset directory")->required();
    evl->add_option("--out", ea.out, "Output directory")->required();
    evl->add_option("--split", ea.split, "Split name");
    evl->add_option("--label", ea.label, "Configuration name for the F1 table");
    evl->add_option("--window", ea.window, "Window length");
    evl->add_option("--stride", ea.stride, "Window stride");
    evl->add_option("--rate-hz", ea.rate_hz, "Common frame rate");

    InferArgs ia;
    auto* inf = app.add_subcommand("infer", "Segment one recording");
    inf->add_option("--checkpoint", ia.checkpoint, "Checkpoint")->required();
    inf->add_option("--in", ia.in, "Recording directory")->required();
    inf->add_option("--out", ia.out, "Output directory")->required();
    inf->add_option("--window", ia.window, "Window length");
    inf->add_option("--stride", ia.stride, "Window stride");
    inf->add_option("--rate-hz", ia.rate_hz, "Common frame rate");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*synth) cmd_synth(sa, out);
        else if (*filter) cmd_ft_filter(fa, out);
        else if (*trn) cmd_train(ta, out);
        else if (*evl) cmd_eval(ea, out);
        else if (*inf) cmd_infer(ia, out);
        return kOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsageError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kRuntimeError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
}

}  // namespace tacseg::cli
