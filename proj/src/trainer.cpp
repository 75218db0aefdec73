#include "tacseg/trainer.hpp"

#include "tacseg/errors.hpp"
#include "tacseg/rng.hpp"
#include "tacseg/segmenter.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace tacseg {

void TrainConfig::validate() const {
    if (epochs_max < 1) fail(ErrorCode::ConfigError, "epochs_max must be >= 1");
    if (patience < 1) fail(ErrorCode::ConfigError, "patience must be >= 1");
    if (!(lr0 > 0.0) || !std::isfinite(lr0)) fail(ErrorCode::ConfigError, "learning rate must be positive");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail(ErrorCode::ConfigError, "lr_decay must be in (0, 1]");
    if (lr_decay_every < 1) fail(ErrorCode::ConfigError, "lr_decay_every must be >= 1");
    if (batch_size < 1) fail(ErrorCode::ConfigError, "batch size must be >= 1");
    if (window < 1 || stride < 1) fail(ErrorCode::ConfigError, "window and stride must be >= 1");
    if (!(max_idle_ratio >= 0.0 && max_idle_ratio <= 1.0))
        fail(ErrorCode::ConfigError, "max_idle_ratio must be in [0, 1]");
}

nlohmann::json to_json(const TrainConfig& cfg) {
    return {{"epochs_max", cfg.epochs_max},
            {"patience", cfg.patience},
            {"lr0", cfg.lr0},
            {"lr_decay", cfg.lr_decay},
            {"lr_decay_every", cfg.lr_decay_every},
            {"batch_size", cfg.batch_size},
            {"seed", cfg.seed},
            {"window", cfg.window},
            {"stride", cfg.stride},
            {"max_idle_ratio", cfg.max_idle_ratio},
            {"idle_class", cfg.idle_class}};
}

std::string to_jsonl(const TrainReport& report) {
    std::ostringstream os;
    for (const auto& e : report.epochs) {
        nlohmann::json j = {{"epoch", e.epoch},
                            {"train_loss", e.train_loss},
                            {"val_accuracy", e.val_accuracy},
                            {"lr", e.lr},
                            {"windows", e.windows},
                            {"best", e.epoch == report.best_epoch}};
        os << j.dump() << '\n';
    }
    return os.str();
}

bool EarlyStopping::update(int epoch, double accuracy) {
    if (accuracy > best_) {
        best_ = accuracy;
        best_epoch_ = epoch;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

double sequence_accuracy(const SeqModel& model, const std::vector<FusedSequence>& seqs, int window, int stride) {
    long correct = 0, total = 0;
    for (const auto& s : seqs) {
        if (!s.has_labels()) fail(ErrorCode::LabelsRequired, "sequence " + s.source + " has no labels");
        if (s.frames() == 0) continue;
        const auto pred = segment(model, s.features, window, stride);
        for (std::size_t t = 0; t < s.labels.size(); ++t) correct += pred.labels[t] == s.labels[t] ? 1 : 0;
        total += static_cast<long>(s.labels.size());
    }
    return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

TrainResult train(const TrainConfig& config, const std::vector<FusedSequence>& train_seqs,
                  const std::vector<FusedSequence>& val_seqs, const ModelConfig& model_config,
                  const EpochCallback& on_epoch) {
    config.validate();
    model_config.validate();
    if (train_seqs.empty()) fail(ErrorCode::EmptyDataset, "no training sequences");
    if (val_seqs.empty()) fail(ErrorCode::EmptyDataset, "no validation sequences");
    for (const auto* split : {&train_seqs, &val_seqs})
        for (const auto& s : *split) {
            if (!s.has_labels()) fail(ErrorCode::LabelsRequired, "sequence " + s.source + " has no labels");
            if (static_cast<int>(s.labels.size()) != s.frames())
                fail(ErrorCode::DimMismatch, "sequence " + s.source + " label/frame count mismatch");
            if (s.features.cols() != model_config.input_dim)
                fail(ErrorCode::DimMismatch, "sequence " + s.source + " has width " +
                                                 std::to_string(s.features.cols()));
            for (int y : s.labels)
                if (y < 0 || y >= model_config.num_classes)
                    fail(ErrorCode::LabelError, "label out of range in " + s.source);
        }

    std::vector<Window> windows;
    for (const auto& s : train_seqs) {
        if (s.frames() == 0) continue;
        auto w = make_training_windows(s, plan_windows(s.frames(), config.window, config.stride), config.idle_class,
                                       config.max_idle_ratio);
        windows.insert(windows.end(), w.begin(), w.end());
    }
    if (windows.empty()) fail(ErrorCode::NoTrainingWindows, "every training window was filtered by the idle rule");

    SeqModel model = init_model(model_config, derive_seed(config.seed, "init"));
    auto opt = OptimizerState::for_model(model, config.lr0);
    EarlyStopping stopper(config.patience);
    SeqModel best = model;
    TrainReport report;
    report.stop_reason = "max_epochs";
    std::uint64_t step = 0;

    for (int epoch = 1; epoch <= config.epochs_max; ++epoch) {
        opt.lr = config.lr0 * std::pow(config.lr_decay, (epoch - 1) / config.lr_decay_every);

        std::vector<std::size_t> order(windows.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);

        // equal-length windows share a batch; short sequences form their own buckets
        std::map<int, std::vector<std::size_t>> buckets;
        for (auto i : order) buckets[windows[i].length].push_back(i);

        double loss_sum = 0.0;
        long loss_rows = 0;
        for (const auto& [len, idx] : buckets) {
            for (std::size_t first = 0; first < idx.size(); first += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t last = std::min(idx.size(), first + static_cast<std::size_t>(config.batch_size));
                std::vector<Eigen::Block<const Mat, Eigen::Dynamic, Eigen::Dynamic, true>> blocks;
                for (std::size_t k = first; k < last; ++k) blocks.push_back(windows[idx[k]].features());
                const auto batch = SequenceBatch::pack(blocks);
                std::vector<int> labels(static_cast<std::size_t>(batch.steps) * static_cast<std::size_t>(batch.batch));
                for (int t = 0; t < batch.steps; ++t)
                    for (int b = 0; b < batch.batch; ++b)
                        labels[static_cast<std::size_t>(t * batch.batch + b)] =
                            windows[idx[first + static_cast<std::size_t>(b)]].label(t);

                const auto fw = forward(model, batch, true, derive_seed(config.seed, "dropout", step++));
                loss_sum += ce_loss(fw.logits, labels) * static_cast<double>(labels.size());
                loss_rows += static_cast<long>(labels.size());
                const auto grads = backward(model, *fw.cache, ce_loss_grad(fw.logits, labels));
                adam_step(model, opt, grads);
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(loss_rows);
        rec.val_accuracy = sequence_accuracy(model, val_seqs, config.window, config.stride);
        rec.lr = opt.lr;
        rec.windows = static_cast<int>(windows.size());
        report.epochs.push_back(rec);
        if (stopper.update(epoch, rec.val_accuracy)) best = model;
        if (on_epoch) on_epoch(rec);
        if (stopper.should_stop()) {
            report.stop_reason = "patience";
            break;
        }
    }
    report.best_epoch = stopper.best_epoch();
    report.best_accuracy = stopper.best_accuracy();
    return {std::move(best), std::move(report)};
}

}  // namespace tacseg
