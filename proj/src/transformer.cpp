#include "arch.hpp"

#include <cmath>
#include <string>

namespace tacseg::transformer {
namespace {

std::string layer_name(int l) { return "tf.l" + std::to_string(l); }

Mat softmax_rows_inplace(Mat s) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        s.row(r).array() -= s.row(r).maxCoeff();
        s.row(r) = s.row(r).array().exp().matrix();
        s.row(r) /= s.row(r).sum();
    }
    return s;
}

Mat attention(const ParamSet& params, const std::string& p, const ModelConfig& cfg, const Mat& x, int steps, int batch,
              AttentionCache& c) {
    const int heads = cfg.tf_heads;
    const int dh = cfg.tf_d_model / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    c.q = layers::linear(x, params[p + ".attn.wq"], params[p + ".attn.bq"]);
    c.k = layers::linear(x, params[p + ".attn.wk"], params[p + ".attn.bk"]);
    c.v = layers::linear(x, params[p + ".attn.wv"], params[p + ".attn.bv"]);
    c.context.resize(x.rows(), cfg.tf_d_model);
    c.probs.assign(static_cast<std::size_t>(batch * heads), Mat());
    for (int b = 0; b < batch; ++b) {
        for (int h = 0; h < heads; ++h) {
            const Mat q = layers::gather_sequence(c.q, steps, batch, b, h * dh, dh);
            const Mat k = layers::gather_sequence(c.k, steps, batch, b, h * dh, dh);
            const Mat v = layers::gather_sequence(c.v, steps, batch, b, h * dh, dh);
            Mat& prob = c.probs[static_cast<std::size_t>(b * heads + h)];
            prob = softmax_rows_inplace((q * k.transpose()) * scale);
            layers::scatter_sequence(c.context, prob * v, batch, b, h * dh);
        }
    }
    return layers::linear(c.context, params[p + ".attn.wo"], params[p + ".attn.bo"]);
}

Mat attention_backward(const ParamSet& params, const std::string& p, const ModelConfig& cfg, const Mat& x,
                       const AttentionCache& c, int steps, int batch, const Mat& d_out, ParamSet& grads) {
    const int heads = cfg.tf_heads;
    const int dh = cfg.tf_d_model / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Mat d_context;
    layers::linear_backward(c.context, params[p + ".attn.wo"], d_out, grads[p + ".attn.wo"], grads[p + ".attn.bo"],
                            &d_context);
    Mat dq(x.rows(), cfg.tf_d_model), dk(x.rows(), cfg.tf_d_model), dv(x.rows(), cfg.tf_d_model);
    for (int b = 0; b < batch; ++b) {
        for (int h = 0; h < heads; ++h) {
            const Mat q = layers::gather_sequence(c.q, steps, batch, b, h * dh, dh);
            const Mat k = layers::gather_sequence(c.k, steps, batch, b, h * dh, dh);
            const Mat v = layers::gather_sequence(c.v, steps, batch, b, h * dh, dh);
            const Mat d_ctx = layers::gather_sequence(d_context, steps, batch, b, h * dh, dh);
            const Mat& prob = c.probs[static_cast<std::size_t>(b * heads + h)];
            const Mat d_prob = d_ctx * v.transpose();
            const Mat d_v = prob.transpose() * d_ctx;
            Mat d_score = prob.cwiseProduct(d_prob);
            const Vec row_dot = d_score.rowwise().sum();
            d_score -= prob.cwiseProduct(row_dot.replicate(1, prob.cols()));
            d_score *= scale;
            layers::scatter_sequence(dq, d_score * k, batch, b, h * dh);
            layers::scatter_sequence(dk, d_score.transpose() * q, batch, b, h * dh);
            layers::scatter_sequence(dv, d_v, batch, b, h * dh);
        }
    }
    Mat dx, tmp;
    layers::linear_backward(x, params[p + ".attn.wq"], dq, grads[p + ".attn.wq"], grads[p + ".attn.bq"], &dx);
    layers::linear_backward(x, params[p + ".attn.wk"], dk, grads[p + ".attn.wk"], grads[p + ".attn.bk"], &tmp);
    dx += tmp;
    layers::linear_backward(x, params[p + ".attn.wv"], dv, grads[p + ".attn.wv"], grads[p + ".attn.bv"], &tmp);
    dx += tmp;
    return dx;
}

}  // namespace

int feature_dim(const ModelConfig& cfg) { return cfg.tf_d_model; }

Mat positional_encoding(int steps, int d_model) {
    Mat pe(steps, d_model);
    for (int t = 0; t < steps; ++t) {
        for (int i = 0; i < d_model; i += 2) {
            const double freq = std::pow(10000.0, -static_cast<double>(i) / d_model);
            pe(t, i) = std::sin(t * freq);
            if (i + 1 < d_model) pe(t, i + 1) = std::cos(t * freq);
        }
    }
    return pe;
}

void init(ParamSet& params, const ModelConfig& cfg, Rng& rng) {
    const int d = cfg.tf_d_model;
    params.add("tf.in.w", uniform_fan_in(d, cfg.input_dim, rng));
    params.add("tf.in.b", Mat::Zero(1, d));
    for (int l = 0; l < cfg.tf_layers; ++l) {
        const auto p = layer_name(l);
        for (const char* m : {"q", "k", "v", "o"}) {
            params.add(p + ".attn.w" + m, uniform_fan_in(d, d, rng));
            params.add(p + ".attn.b" + m, Mat::Zero(1, d));
        }
        params.add(p + ".ln1.g", Mat::Ones(1, d));
        params.add(p + ".ln1.b", Mat::Zero(1, d));
        params.add(p + ".ff1.w", uniform_fan_in(cfg.tf_ffn_dim, d, rng));
        params.add(p + ".ff1.b", Mat::Zero(1, cfg.tf_ffn_dim));
        params.add(p + ".ff2.w", uniform_fan_in(d, cfg.tf_ffn_dim, rng));
        params.add(p + ".ff2.b", Mat::Zero(1, d));
        params.add(p + ".ln2.g", Mat::Ones(1, d));
        params.add(p + ".ln2.b", Mat::Zero(1, d));
    }
}

// Post-norm encoder layer: x1 = LN(x + MHA(x)); x2 = LN(x1 + FFN(x1)).
Mat encode(const ParamSet& params, const ModelConfig& cfg, const SequenceBatch& in, TransformerCache& cache) {
    cache.input = in.data;
    cache.layers.assign(static_cast<std::size_t>(cfg.tf_layers), {});
    Mat x = layers::linear(in.data, params["tf.in.w"], params["tf.in.b"]);
    const Mat pe = positional_encoding(in.steps, cfg.tf_d_model);
    for (int t = 0; t < in.steps; ++t)
        x.middleRows(static_cast<Eigen::Index>(t) * in.batch, in.batch).rowwise() += pe.row(t);

    for (int l = 0; l < cfg.tf_layers; ++l) {
        const auto p = layer_name(l);
        auto& lc = cache.layers[static_cast<std::size_t>(l)];
        lc.x_in = x;
        const Mat a = attention(params, p, cfg, x, in.steps, in.batch, lc.attn);
        lc.x1 = layers::layer_norm(x + a, params[p + ".ln1.g"], params[p + ".ln1.b"], lc.ln1);
        lc.ff_pre = layers::linear(lc.x1, params[p + ".ff1.w"], params[p + ".ff1.b"]);
        lc.ff_act = layers::gelu(lc.ff_pre);
        const Mat f = layers::linear(lc.ff_act, params[p + ".ff2.w"], params[p + ".ff2.b"]);
        x = layers::layer_norm(lc.x1 + f, params[p + ".ln2.g"], params[p + ".ln2.b"], lc.ln2);
    }
    return x;
}

void encode_backward(const ParamSet& params, const ModelConfig& cfg, const TransformerCache& cache, int steps,
                     int batch, const Mat& d_features, ParamSet& grads) {
    Mat dx = d_features;
    for (int l = cfg.tf_layers - 1; l >= 0; --l) {
        const auto p = layer_name(l);
        const auto& lc = cache.layers[static_cast<std::size_t>(l)];
        const Mat d_r2 =
            layers::layer_norm_backward(dx, params[p + ".ln2.g"], lc.ln2, grads[p + ".ln2.g"], grads[p + ".ln2.b"]);
        Mat d_act;
        layers::linear_backward(lc.ff_act, params[p + ".ff2.w"], d_r2, grads[p + ".ff2.w"], grads[p + ".ff2.b"],
                                &d_act);
        const Mat d_pre = layers::gelu_backward(lc.ff_pre, d_act);
        Mat d_x1;
        layers::linear_backward(lc.x1, params[p + ".ff1.w"], d_pre, grads[p + ".ff1.w"], grads[p + ".ff1.b"], &d_x1);
        d_x1 += d_r2;
        const Mat d_r1 =
            layers::layer_norm_backward(d_x1, params[p + ".ln1.g"], lc.ln1, grads[p + ".ln1.g"], grads[p + ".ln1.b"]);
        dx = d_r1 + attention_backward(params, p, cfg, lc.x_in, lc.attn, steps, batch, d_r1, grads);
    }
    layers::linear_backward(cache.input, params["tf.in.w"], dx, grads["tf.in.w"], grads["tf.in.b"], nullptr);
}

}  // namespace tacseg::transformer
