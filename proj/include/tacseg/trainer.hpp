#pragma once

#include "tacseg/fusion.hpp"
#include "tacseg/model.hpp"
#include "tacseg/windows.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tacseg {

struct TrainConfig {
    int epochs_max = 30;
    int patience = 5;
    double lr0 = 1e-3;
    double lr_decay = 0.5;
    int lr_decay_every = 20;  // epochs
    int batch_size = 32;
    std::uint64_t seed = 0;
    int window = kDefaultWindow;
    int stride = kDefaultStride;
    double max_idle_ratio = kDefaultMaxIdleRatio;
    int idle_class = 0;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double lr = 0.0;
    int windows = 0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_accuracy = 0.0;
    std::string stop_reason;  // "patience" | "max_epochs"
};

std::string to_jsonl(const TrainReport& report);

/// Validation-driven stopping: strictly better accuracy resets the counter,
/// ties keep the earlier epoch.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}

    /// Returns true when `accuracy` is a new best.
    bool update(int epoch, double accuracy);
    bool should_stop() const { return since_best_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best_accuracy() const { return best_; }

private:
    int patience_;
    int best_epoch_ = 0;
    double best_ = -1.0;
    int since_best_ = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainResult {
    SeqModel model;
    TrainReport report;
};

/// Frame accuracy over all frames of all sequences, via windows + soft vote.
double sequence_accuracy(const SeqModel& model, const std::vector<FusedSequence>& seqs, int window, int stride);

TrainResult train(const TrainConfig& config, const std::vector<FusedSequence>& train_seqs,
                  const std::vector<FusedSequence>& val_seqs, const ModelConfig& model_config,
                  const EpochCallback& on_epoch = {});

}  // namespace tacseg
