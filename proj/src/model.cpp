#include "tacseg/model.hpp"

#include "arch.hpp"
#include "tacseg/errors.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <random>
#include <type_traits>

namespace tacseg {
namespace {

std::atomic<std::uint64_t> g_next_identity{1};

void check_positive(int v, const char* what) {
    if (v <= 0) fail(ErrorCode::ConfigError, std::string(what) + " must be positive");
}

int encoder_feature_dim(const ModelConfig& cfg) {
    switch (cfg.arch) {
        case Arch::BiLstm: return bilstm::feature_dim(cfg);
        case Arch::Tcn: return tcn::feature_dim(cfg);
        case Arch::Transformer: return transformer::feature_dim(cfg);
    }
    return 0;
}

}  // namespace

std::string to_string(Arch arch) {
    switch (arch) {
        case Arch::BiLstm: return "bilstm";
        case Arch::Tcn: return "tcn";
        case Arch::Transformer: return "transformer";
    }
    return "bilstm";
}

Arch arch_from_string(const std::string& s) {
    if (s == "bilstm") return Arch::BiLstm;
    if (s == "tcn") return Arch::Tcn;
    if (s == "transformer") return Arch::Transformer;
    fail(ErrorCode::ConfigError, "unknown architecture '" + s + "'");
}

void ModelConfig::validate() const {
    check_positive(input_dim, "input_dim");
    check_positive(num_classes, "num_classes");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail(ErrorCode::ConfigError, "dropout rate must be in [0, 1)");
    switch (arch) {
        case Arch::BiLstm:
            check_positive(lstm_layers, "lstm_layers");
            check_positive(lstm_hidden, "lstm_hidden");
            break;
        case Arch::Tcn:
            check_positive(tcn_blocks, "tcn_blocks");
            check_positive(tcn_kernel, "tcn_kernel");
            check_positive(tcn_channels, "tcn_channels");
            if (tcn_kernel % 2 == 0) fail(ErrorCode::ConfigError, "TCN kernel must be odd for same-length output");
            if (tcn_blocks > 30) fail(ErrorCode::ConfigError, "too many TCN blocks");
            break;
        case Arch::Transformer:
            check_positive(tf_d_model, "tf_d_model");
            check_positive(tf_heads, "tf_heads");
            check_positive(tf_layers, "tf_layers");
            check_positive(tf_ffn_dim, "tf_ffn_dim");
            if (tf_d_model % tf_heads != 0) fail(ErrorCode::ConfigError, "heads must divide d_model");
            break;
    }
}

nlohmann::json to_json(const ModelConfig& cfg) {
    return {{"arch", to_string(cfg.arch)},       {"input_dim", cfg.input_dim},
            {"num_classes", cfg.num_classes},    {"dropout_rate", cfg.dropout_rate},
            {"lstm_layers", cfg.lstm_layers},    {"lstm_hidden", cfg.lstm_hidden},
            {"tcn_blocks", cfg.tcn_blocks},      {"tcn_kernel", cfg.tcn_kernel},
            {"tcn_channels", cfg.tcn_channels},  {"tf_d_model", cfg.tf_d_model},
            {"tf_heads", cfg.tf_heads},          {"tf_layers", cfg.tf_layers},
            {"tf_ffn_dim", cfg.tf_ffn_dim}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.arch = arch_from_string(j.at("arch").get<std::string>());
    cfg.input_dim = j.at("input_dim").get<int>();
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.dropout_rate = j.at("dropout_rate").get<double>();
    cfg.lstm_layers = j.value("lstm_layers", cfg.lstm_layers);
    cfg.lstm_hidden = j.value("lstm_hidden", cfg.lstm_hidden);
    cfg.tcn_blocks = j.value("tcn_blocks", cfg.tcn_blocks);
    cfg.tcn_kernel = j.value("tcn_kernel", cfg.tcn_kernel);
    cfg.tcn_channels = j.value("tcn_channels", cfg.tcn_channels);
    cfg.tf_d_model = j.value("tf_d_model", cfg.tf_d_model);
    cfg.tf_heads = j.value("tf_heads", cfg.tf_heads);
    cfg.tf_layers = j.value("tf_layers", cfg.tf_layers);
    cfg.tf_ffn_dim = j.value("tf_ffn_dim", cfg.tf_ffn_dim);
    cfg.validate();
    return cfg;
}

Mat& ParamSet::add(std::string name, Mat value) {
    if (contains(name)) fail(ErrorCode::ConfigError, "duplicate parameter '" + name + "'");
    tensors_.push_back({std::move(name), std::move(value)});
    return tensors_.back().value;
}

Mat& ParamSet::operator[](const std::string& name) {
    for (auto& t : tensors_)
        if (t.name == name) return t.value;
    fail(ErrorCode::ConfigError, "no parameter '" + name + "'");
}

const Mat& ParamSet::operator[](const std::string& name) const {
    for (const auto& t : tensors_)
        if (t.name == name) return t.value;
    fail(ErrorCode::ConfigError, "no parameter '" + name + "'");
}

bool ParamSet::contains(const std::string& name) const {
    for (const auto& t : tensors_)
        if (t.name == name) return true;
    return false;
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
    return n;
}

ParamSet ParamSet::zeros_like() const {
    ParamSet out;
    for (const auto& t : tensors_) out.tensors_.push_back({t.name, Mat::Zero(t.value.rows(), t.value.cols())});
    return out;
}

bool ParamSet::same_layout(const ParamSet& other) const {
    if (tensors_.size() != other.tensors_.size()) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        const auto& a = tensors_[i];
        const auto& b = other.tensors_[i];
        if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) return false;
    }
    return true;
}

SeqModel::SeqModel(ModelConfig config, ParamSet params)
    : config_(std::move(config)), params_(std::move(params)), identity_(g_next_identity.fetch_add(1)) {}

ParamSet& SeqModel::mutable_params() {
    ++version_;
    return params_;
}

Mat uniform_fan_in(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

SeqModel init_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    ParamSet params;
    switch (config.arch) {
        case Arch::BiLstm: bilstm::init(params, config, rng); break;
        case Arch::Tcn: tcn::init(params, config, rng); break;
        case Arch::Transformer: transformer::init(params, config, rng); break;
    }
    params.add("cls.w", uniform_fan_in(config.num_classes, encoder_feature_dim(config), rng));
    params.add("cls.b", Mat::Zero(1, config.num_classes));
    return SeqModel(config, std::move(params));
}

SequenceBatch SequenceBatch::single(const Mat& seq) { return {seq, static_cast<int>(seq.rows()), 1}; }

Mat SequenceBatch::unpack(const Mat& packed, int steps, int batch, int b) {
    return layers::gather_sequence(packed, steps, batch, b, 0, packed.cols());
}

ForwardResult forward(const SeqModel& model, const SequenceBatch& input, bool train_mode, std::uint64_t dropout_seed) {
    const auto& cfg = model.config();
    if (input.data.cols() != cfg.input_dim)
        fail(ErrorCode::DimMismatch, "input width " + std::to_string(input.data.cols()) + ", model expects " +
                                         std::to_string(cfg.input_dim));
    if (input.steps < 1 || input.batch < 1 ||
        input.data.rows() != static_cast<Eigen::Index>(input.steps) * input.batch)
        fail(ErrorCode::DimMismatch, "malformed sequence batch");

    auto cache = std::make_shared<ForwardCache>();
    cache->model_identity = model.identity();
    cache->model_version = model.version();
    cache->steps = input.steps;
    cache->batch = input.batch;

    Mat features;
    switch (cfg.arch) {
        case Arch::BiLstm: {
            BiLstmCache c;
            features = bilstm::encode(model.params(), cfg, input, c);
            cache->encoder = std::move(c);
            break;
        }
        case Arch::Tcn: {
            TcnCache c;
            features = tcn::encode(model.params(), cfg, input, c);
            cache->encoder = std::move(c);
            break;
        }
        case Arch::Transformer: {
            TransformerCache c;
            features = transformer::encode(model.params(), cfg, input, c);
            cache->encoder = std::move(c);
            break;
        }
    }

    if (train_mode && cfg.dropout_rate > 0.0) {
        const double keep = 1.0 - cfg.dropout_rate;
        Rng rng(dropout_seed);
        std::bernoulli_distribution draw(keep);
        cache->dropout_mask.resize(features.rows(), features.cols());
        for (Eigen::Index i = 0; i < cache->dropout_mask.size(); ++i)
            cache->dropout_mask.data()[i] = draw(rng) ? 1.0 / keep : 0.0;
        features = features.cwiseProduct(cache->dropout_mask);
    }
    cache->head_in = std::move(features);

    ForwardResult out;
    out.logits = layers::linear(cache->head_in, model.params()["cls.w"], model.params()["cls.b"]);
    out.cache = std::move(cache);
    return out;
}

ForwardResult forward(const SeqModel& model, const Mat& features, bool train_mode, std::uint64_t dropout_seed) {
    return forward(model, SequenceBatch::single(features), train_mode, dropout_seed);
}

ParamSet backward(const SeqModel& model, const ForwardCache& cache, const Mat& d_logits) {
    if (cache.model_identity != model.identity() || cache.model_version != model.version())
        fail(ErrorCode::CacheError, "forward cache was taken from a different or since-updated model");
    const auto& cfg = model.config();
    if (d_logits.rows() != cache.head_in.rows() || d_logits.cols() != cfg.num_classes)
        fail(ErrorCode::DimMismatch, "d_logits shape does not match the forward pass");

    const auto& params = model.params();
    ParamSet grads = params.zeros_like();
    Mat d_features;
    layers::linear_backward(cache.head_in, params["cls.w"], d_logits, grads["cls.w"], grads["cls.b"], &d_features);
    if (cache.dropout_mask.size() > 0) d_features = d_features.cwiseProduct(cache.dropout_mask);

    std::visit(
        [&](const auto& enc) {
            using T = std::decay_t<decltype(enc)>;
            if constexpr (std::is_same_v<T, BiLstmCache>)
                bilstm::encode_backward(params, cfg, enc, cache.steps, cache.batch, d_features, grads);
            else if constexpr (std::is_same_v<T, TcnCache>)
                tcn::encode_backward(params, cfg, enc, cache.steps, cache.batch, d_features, grads);
            else
                transformer::encode_backward(params, cfg, enc, cache.steps, cache.batch, d_features, grads);
        },
        cache.encoder);
    return grads;
}

Mat softmax_rows(const Mat& logits) {
    Mat p(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        p.row(r) = (logits.row(r).array() - mx).exp().matrix();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

namespace {

void check_labels(const Mat& logits, const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
        fail(ErrorCode::DimMismatch, "label count differs from logit rows");
    for (int l : labels)
        if (l < 0 || l >= logits.cols()) fail(ErrorCode::LabelError, "label " + std::to_string(l) + " out of range");
}

}  // namespace

double ce_loss(const Mat& logits, const std::vector<int>& labels) {
    check_labels(logits, labels);
    if (logits.rows() == 0) return 0.0;
    double total = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
        total += lse - logits(r, labels[static_cast<std::size_t>(r)]);
    }
    return total / static_cast<double>(logits.rows());
}

Mat ce_loss_grad(const Mat& logits, const std::vector<int>& labels) {
    check_labels(logits, labels);
    Mat g = softmax_rows(logits);
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    if (g.rows() > 0) g /= static_cast<double>(g.rows());
    return g;
}

OptimizerState OptimizerState::for_model(const SeqModel& model, double lr) {
    OptimizerState s;
    s.lr = lr;
    s.m = model.params().zeros_like();
    s.v = model.params().zeros_like();
    return s;
}

void adam_step(SeqModel& model, OptimizerState& opt, const ParamSet& grads) {
    if (!grads.same_layout(model.params()) || !opt.m.same_layout(model.params()) ||
        !opt.v.same_layout(model.params()))
        fail(ErrorCode::DimMismatch, "gradient/moment layout does not match the model parameters");
    ++opt.step;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    auto& params = model.mutable_params().tensors();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto g = grads.tensors()[i].value.array();
        auto m = opt.m.tensors()[i].value.array();
        auto v = opt.v.tensors()[i].value.array();
        m = opt.beta1 * m + (1.0 - opt.beta1) * g;
        v = opt.beta2 * v + (1.0 - opt.beta2) * g.square();
        params[i].value.array() -= opt.lr * (m / bc1) / ((v / bc2).sqrt() + opt.eps);
    }
}

}  // namespace tacseg
