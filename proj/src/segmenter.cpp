#include "tacseg/segmenter.hpp"

#include "tacseg/errors.hpp"
#include "tacseg/parallel.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace tacseg {
namespace {

// Windows per forward pass at inference. Fixed so results do not depend on
// the worker count.
constexpr std::size_t kInferenceChunk = 32;

const char* kPalette[] = {"#9e9e9e", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22"};

}  // namespace

std::vector<WindowProbs> predict_windows(const SeqModel& model, const Mat& features, const WindowPlan& plan) {
    if (features.cols() != model.config().input_dim)
        fail(ErrorCode::DimMismatch, "feature width " + std::to_string(features.cols()) + ", model expects " +
                                         std::to_string(model.config().input_dim));
    if (plan.frames != features.rows()) fail(ErrorCode::DimMismatch, "window plan built for a different length");

    const int len = plan.length();
    std::vector<WindowProbs> out(plan.size());
    const std::size_t chunks = (plan.size() + kInferenceChunk - 1) / kInferenceChunk;
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t first = c * kInferenceChunk;
        const std::size_t last = std::min(plan.size(), first + kInferenceChunk);
        std::vector<Eigen::Block<const Mat, Eigen::Dynamic, Eigen::Dynamic, true>> blocks;
        for (std::size_t k = first; k < last; ++k) blocks.push_back(features.middleRows(plan.starts[k], len));
        const auto batch = SequenceBatch::pack(blocks);
        const Mat probs = softmax_rows(forward(model, batch, false, 0).logits);
        for (std::size_t k = first; k < last; ++k)
            out[k] = {plan.starts[k], SequenceBatch::unpack(probs, batch.steps, batch.batch, static_cast<int>(k - first))};
    });
    return out;
}

Prediction soft_vote(const std::vector<WindowProbs>& window_probs, const WindowPlan& plan, int frames) {
    if (window_probs.empty()) fail(ErrorCode::CoverageGap, "no window predictions");
    const auto classes = window_probs.front().probs.cols();
    Mat sum = Mat::Zero(frames, classes);
    std::vector<int> count(static_cast<std::size_t>(frames), 0);
    for (const auto& w : window_probs) {
        if (w.probs.cols() != classes) fail(ErrorCode::DimMismatch, "window class counts differ");
        for (Eigen::Index i = 0; i < w.probs.rows(); ++i) {
            const Eigen::Index t = w.start + i;
            if (t < 0 || t >= frames) fail(ErrorCode::DimMismatch, "window extends past the sequence");
            sum.row(t) += w.probs.row(i);
            ++count[static_cast<std::size_t>(t)];
        }
    }
    (void)plan;
    Prediction pred;
    pred.probs.resize(frames, classes);
    pred.labels.resize(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) {
        const int k = count[static_cast<std::size_t>(t)];
        if (k == 0) fail(ErrorCode::CoverageGap, "frame " + std::to_string(t) + " is covered by no window");
        pred.probs.row(t) = sum.row(t) / static_cast<double>(k);
        pred.labels[static_cast<std::size_t>(t)] = argmax_tiebreak(pred.probs.row(t));
    }
    return pred;
}

Prediction segment(const SeqModel& model, const Mat& features, int window, int stride) {
    const auto plan = plan_windows(static_cast<int>(features.rows()), window, stride);
    return soft_vote(predict_windows(model, features, plan), plan, static_cast<int>(features.rows()));
}

int argmax_tiebreak(const Eigen::Ref<const RowVec>& row) {
    int best = 0;
    for (Eigen::Index c = 1; c < row.size(); ++c)
        if (row(c) > row(best)) best = static_cast<int>(c);
    return best;
}

Metrics evaluate(const std::vector<int>& predicted, const std::vector<int>& truth, int num_classes) {
    if (predicted.size() != truth.size()) fail(ErrorCode::DimMismatch, "prediction and truth lengths differ");
    Metrics m;
    m.confusion.assign(static_cast<std::size_t>(num_classes), std::vector<long>(static_cast<std::size_t>(num_classes), 0));
    long correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int y = truth[i];
        const int p = predicted[i];
        if (y < 0 || y >= num_classes || p < 0 || p >= num_classes)
            fail(ErrorCode::LabelError, "class index out of range at frame " + std::to_string(i));
        ++m.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
        correct += y == p ? 1 : 0;
    }
    m.total = static_cast<long>(truth.size());
    m.frame_accuracy = m.total > 0 ? static_cast<double>(correct) / static_cast<double>(m.total) : 0.0;

    m.per_class.resize(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        long tp = m.confusion[cu][cu];
        long support = 0, predicted_count = 0;
        for (int k = 0; k < num_classes; ++k) {
            support += m.confusion[cu][static_cast<std::size_t>(k)];
            predicted_count += m.confusion[static_cast<std::size_t>(k)][cu];
        }
        auto& s = m.per_class[cu];
        s.support = support;
        if (support == 0 && predicted_count == 0) {
            // absent from both: nothing to get wrong
            s.precision = s.recall = s.f1 = 1.0;
            continue;
        }
        s.precision = predicted_count > 0 ? static_cast<double>(tp) / static_cast<double>(predicted_count) : 0.0;
        s.recall = support > 0 ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
        s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    }
    return m;
}

Metrics evaluate(const Prediction& pred, const std::vector<int>& truth, int num_classes) {
    return evaluate(pred.labels, truth, num_classes);
}

std::string format_accuracy(double accuracy) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", accuracy);
    return buf;
}

nlohmann::json metrics_to_json(const Metrics& m, const std::vector<std::string>& vocabulary) {
    if (vocabulary.size() != m.per_class.size()) fail(ErrorCode::VocabularyMismatch, "vocabulary/metrics size mismatch");
    nlohmann::json j;
    j["accuracy"] = m.frame_accuracy;
    j["frames"] = m.total;
    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t c = 0; c < vocabulary.size(); ++c) {
        const auto& s = m.per_class[c];
        per_class[vocabulary[c]] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
    }
    j["per_class"] = per_class;
    j["confusion"] = m.confusion;
    return j;
}

void append_f1_table(const std::filesystem::path& path, const std::string& configuration, const Metrics& m,
                     const std::vector<std::string>& vocabulary) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream os(path, std::ios::app);
    if (!os) fail(ErrorCode::IoError, "cannot write " + path.string());
    if (fresh) {
        os << "configuration";
        for (const auto& name : vocabulary) os << ',' << name;
        os << ",accuracy\n";
    }
    os << configuration;
    for (const auto& s : m.per_class) os << ',' << format_accuracy(s.f1);
    os << ',' << format_accuracy(m.frame_accuracy) << '\n';
}

void write_prediction(const Prediction& pred, const std::vector<std::string>& vocabulary,
                      const std::filesystem::path& probs_path, const std::filesystem::path& labels_csv_path) {
    save_matrix(probs_path, pred.probs, DType::F64);
    std::ofstream os(labels_csv_path);
    if (!os) fail(ErrorCode::IoError, "cannot write " + labels_csv_path.string());
    os << "t,class\n";
    for (std::size_t t = 0; t < pred.labels.size(); ++t)
        os << t << ',' << vocabulary.at(static_cast<std::size_t>(pred.labels[t])) << '\n';
}

std::string timeline_svg(const std::vector<int>& labels, const std::vector<std::string>& vocabulary,
                         const std::vector<int>* truth) {
    constexpr int kBand = 24;
    constexpr int kLegendRow = 18;
    const int frames = static_cast<int>(labels.size());
    const int strips = truth ? 2 : 1;
    const int width = std::max(frames, 200);
    const int height = strips * (kBand + 6) + kLegendRow * static_cast<int>(vocabulary.size()) + 10;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" shape-rendering=\"crispEdges\">\n";
    auto strip = [&](const std::vector<int>& seq, int y) {
        for (int t = 0; t < frames;) {
            int end = t + 1;
            while (end < frames && seq[static_cast<std::size_t>(end)] == seq[static_cast<std::size_t>(t)]) ++end;
            os << "  <rect x=\"" << t << "\" y=\"" << y << "\" width=\"" << end - t << "\" height=\"" << kBand
               << "\" fill=\"" << kPalette[seq[static_cast<std::size_t>(t)] % 10] << "\"/>\n";
            t = end;
        }
    };
    strip(labels, 0);
    if (truth) strip(*truth, kBand + 6);
    int y = strips * (kBand + 6) + 4;
    for (std::size_t c = 0; c < vocabulary.size(); ++c, y += kLegendRow) {
        os << "  <rect x=\"2\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[c % 10] << "\"/>\n";
        os << "  <text x=\"20\" y=\"" << y + 11 << "\" font-family=\"sans-serif\" font-size=\"12\">" << vocabulary[c]
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace tacseg
