#pragma once

#include "tacseg/errors.hpp"
#include "tacseg/fusion.hpp"
#include "tacseg/matrix.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tacseg {

enum class Arch { BiLstm, Tcn, Transformer };

std::string to_string(Arch arch);
/// Throws ConfigError for anything but bilstm|tcn|transformer.
Arch arch_from_string(const std::string& s);

struct ModelConfig {
    Arch arch = Arch::BiLstm;
    int input_dim = kFusedDim;
    int num_classes = 5;
    double dropout_rate = 0.3;

    int lstm_layers = 3;
    int lstm_hidden = 128;  // per direction

    int tcn_blocks = 5;
    int tcn_kernel = 3;
    int tcn_channels = 256;

    int tf_d_model = 256;
    int tf_heads = 4;
    int tf_layers = 3;
    int tf_ffn_dim = 512;

    /// Throws ConfigError on non-positive dims, heads not dividing d_model, an
    /// even TCN kernel, or a dropout rate outside [0, 1).
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Tensor {
    std::string name;
    Mat value;
};

/// Ordered named tensors. Gradients and Adam moments share the layout of the
/// model parameters they belong to.
class ParamSet {
public:
    Mat& add(std::string name, Mat value);
    Mat& operator[](const std::string& name);
    const Mat& operator[](const std::string& name) const;
    bool contains(const std::string& name) const;

    std::vector<Tensor>& tensors() { return tensors_; }
    const std::vector<Tensor>& tensors() const { return tensors_; }
    std::size_t size() const { return tensors_.size(); }
    std::size_t scalar_count() const;

    /// Same names and shapes, all zeros.
    ParamSet zeros_like() const;
    bool same_layout(const ParamSet& other) const;

private:
    std::vector<Tensor> tensors_;
};

class SeqModel {
public:
    SeqModel() = default;
    SeqModel(ModelConfig config, ParamSet params);

    const ModelConfig& config() const { return config_; }
    const ParamSet& params() const { return params_; }
    /// Mutable access invalidates caches taken from earlier forward passes.
    ParamSet& mutable_params();

    std::uint64_t identity() const { return identity_; }
    std::uint64_t version() const { return version_; }

private:
    ModelConfig config_;
    ParamSet params_;
    std::uint64_t identity_ = 0;
    std::uint64_t version_ = 0;
};

/// Deterministic init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases,
/// LSTM forget-gate bias 1, LayerNorm gain 1.
SeqModel init_model(const ModelConfig& config, std::uint64_t seed);

/// B equal-length sequences packed time-major: row t*B + b is frame t of
/// sequence b.
struct SequenceBatch {
    Mat data;
    int steps = 0;
    int batch = 0;

    static SequenceBatch single(const Mat& seq);
    template <class Blocks>
    static SequenceBatch pack(const Blocks& seqs);

    /// Rows of sequence b out of a time-major (steps*batch) × n matrix.
    static Mat unpack(const Mat& packed, int steps, int batch, int b);
};

struct ForwardCache;

struct ForwardResult {
    Mat logits;  // time-major (steps*batch) × C
    std::shared_ptr<const ForwardCache> cache;
};

ForwardResult forward(const SeqModel& model, const SequenceBatch& input, bool train_mode,
                      std::uint64_t dropout_seed);
ForwardResult forward(const SeqModel& model, const Mat& features, bool train_mode, std::uint64_t dropout_seed);

/// Gradients of the loss wrt every parameter given dL/dlogits.
ParamSet backward(const SeqModel& model, const ForwardCache& cache, const Mat& d_logits);

/// Mean over rows of -log softmax(logits)[label].
double ce_loss(const Mat& logits, const std::vector<int>& labels);
/// dL/dlogits of ce_loss: (softmax - one_hot) / rows.
Mat ce_loss_grad(const Mat& logits, const std::vector<int>& labels);

/// Row-wise numerically stable softmax.
Mat softmax_rows(const Mat& logits);

struct OptimizerState {
    std::int64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    ParamSet m;
    ParamSet v;

    static OptimizerState for_model(const SeqModel& model, double lr = 1e-3);
};

void adam_step(SeqModel& model, OptimizerState& opt, const ParamSet& grads);

/// Model plus everything needed to rebuild its inputs at inference.
struct Checkpoint {
    SeqModel model;
    NormStats norm;
    std::vector<std::string> vocabulary;
    ModalitySet modalities;
    std::string task = "skill";
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws FormatError on bad magic/version, ConfigError when `expected_arch`
/// is given and does not match.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<Arch> expected_arch = std::nullopt);

/// Throws VocabularyMismatch unless the checkpoint's class list equals `vocabulary`.
void require_vocabulary(const Checkpoint& ckpt, const std::vector<std::string>& vocabulary);

template <class Blocks>
SequenceBatch SequenceBatch::pack(const Blocks& seqs) {
    SequenceBatch out;
    out.batch = static_cast<int>(seqs.size());
    if (out.batch == 0) return out;
    out.steps = static_cast<int>(seqs[0].rows());
    const auto cols = seqs[0].cols();
    out.data.resize(static_cast<Eigen::Index>(out.steps) * out.batch, cols);
    for (int b = 0; b < out.batch; ++b) {
        const auto& s = seqs[static_cast<std::size_t>(b)];
        if (s.rows() != out.steps || s.cols() != cols) fail(ErrorCode::DimMismatch, "batched sequences differ in shape");
        for (int t = 0; t < out.steps; ++t) out.data.row(static_cast<Eigen::Index>(t) * out.batch + b) = s.row(t);
    }
    return out;
}

}  // namespace tacseg
