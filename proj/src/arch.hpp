#pragma once

// Per-architecture encoders. Each maps a packed (T*B)×input batch to
// (T*B)×feature_dim hidden features; the shared dropout + linear head lives
// in model.cpp.

#include "layers.hpp"
#include "tacseg/model.hpp"
#include "tacseg/rng.hpp"

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

namespace tacseg {

struct LstmDirCache {
    Mat gates;  // post-activation i, f, g, o
    Mat cell;
    Mat tanh_cell;
    Mat hidden;
};

struct BiLstmCache {
    std::vector<Mat> inputs;  // input of each layer
    std::vector<std::array<LstmDirCache, 2>> dirs;
};

struct TcnBlockCache {
    Mat xcol;  // dilated im2col of the block input
    layers::LayerNormCache ln;
    Mat ln_out;  // GELU input
};

struct TcnCache {
    Mat input;
    std::vector<TcnBlockCache> blocks;
};

struct AttentionCache {
    Mat q, k, v;
    Mat context;  // concatenated head outputs
    std::vector<Mat> probs;  // [b * heads + h], T×T
};

struct TransformerLayerCache {
    Mat x_in;
    AttentionCache attn;
    layers::LayerNormCache ln1;
    Mat x1;
    Mat ff_pre;
    Mat ff_act;
    layers::LayerNormCache ln2;
};

struct TransformerCache {
    Mat input;
    std::vector<TransformerLayerCache> layers;
};

struct ForwardCache {
    std::uint64_t model_identity = 0;
    std::uint64_t model_version = 0;
    int steps = 0;
    int batch = 0;
    std::variant<BiLstmCache, TcnCache, TransformerCache> encoder;
    Mat head_in;  // encoder features after dropout
    Mat dropout_mask;  // empty when dropout was not applied
};

namespace bilstm {
void init(ParamSet& params, const ModelConfig& cfg, Rng& rng);
int feature_dim(const ModelConfig& cfg);
Mat encode(const ParamSet& params, const ModelConfig& cfg, const SequenceBatch& in, BiLstmCache& cache);
void encode_backward(const ParamSet& params, const ModelConfig& cfg, const BiLstmCache& cache, int steps, int batch,
                     const Mat& d_features, ParamSet& grads);
}  // namespace bilstm

namespace tcn {
void init(ParamSet& params, const ModelConfig& cfg, Rng& rng);
int feature_dim(const ModelConfig& cfg);
Mat encode(const ParamSet& params, const ModelConfig& cfg, const SequenceBatch& in, TcnCache& cache);
void encode_backward(const ParamSet& params, const ModelConfig& cfg, const TcnCache& cache, int steps, int batch,
                     const Mat& d_features, ParamSet& grads);
}  // namespace tcn

namespace transformer {
void init(ParamSet& params, const ModelConfig& cfg, Rng& rng);
int feature_dim(const ModelConfig& cfg);
Mat encode(const ParamSet& params, const ModelConfig& cfg, const SequenceBatch& in, TransformerCache& cache);
void encode_backward(const ParamSet& params, const ModelConfig& cfg, const TransformerCache& cache, int steps,
                     int batch, const Mat& d_features, ParamSet& grads);
/// Sinusoidal table, steps × d_model.
Mat positional_encoding(int steps, int d_model);
}  // namespace transformer

/// U(-1/sqrt(cols), 1/sqrt(cols)).
Mat uniform_fan_in(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace tacseg
