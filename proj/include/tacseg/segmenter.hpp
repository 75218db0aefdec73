#pragma once

#include "tacseg/fusion.hpp"
#include "tacseg/matrix.hpp"
#include "tacseg/model.hpp"
#include "tacseg/windows.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace tacseg {

struct WindowProbs {
    int start = 0;
    Mat probs;  // length × C, rows sum to 1
};

struct Prediction {
    Mat probs;  // T × C, soft-voted
    std::vector<int> labels;
};

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long support = 0;
};

struct Metrics {
    double frame_accuracy = 0.0;
    std::vector<ClassScores> per_class;
    std::vector<std::vector<long>> confusion;  // [truth][pred]
    long total = 0;
};

/// Eval-mode probabilities for every planned window (no idle filtering).
std::vector<WindowProbs> predict_windows(const SeqModel& model, const Mat& features, const WindowPlan& plan);

Prediction soft_vote(const std::vector<WindowProbs>& window_probs, const WindowPlan& plan, int frames);

/// predict_windows + soft_vote over the default plan for the sequence.
Prediction segment(const SeqModel& model, const Mat& features, int window = kDefaultWindow,
                   int stride = kDefaultStride);

/// Lowest class index among the maxima.
int argmax_tiebreak(const Eigen::Ref<const RowVec>& row);

Metrics evaluate(const std::vector<int>& predicted, const std::vector<int>& truth, int num_classes);
Metrics evaluate(const Prediction& pred, const std::vector<int>& truth, int num_classes);

/// Four-decimal rendering used in reports, e.g. "0.9402".
std::string format_accuracy(double accuracy);

nlohmann::json metrics_to_json(const Metrics& m, const std::vector<std::string>& vocabulary);

/// One row of the class × configuration F1 table; the header is written only
/// when the file does not exist yet.
void append_f1_table(const std::filesystem::path& path, const std::string& configuration, const Metrics& m,
                     const std::vector<std::string>& vocabulary);

void write_prediction(const Prediction& pred, const std::vector<std::string>& vocabulary,
                      const std::filesystem::path& probs_path, const std::filesystem::path& labels_csv_path);

std::string timeline_svg(const std::vector<int>& labels, const std::vector<std::string>& vocabulary,
                         const std::vector<int>* truth = nullptr);

}  // namespace tacseg
