#include "arch.hpp"

#include <string>

namespace tacseg::tcn {
namespace {

std::string block_name(int b) { return "tcn.b" + std::to_string(b); }

int dilation(int block) { return 1 << block; }

// Tap j reads frame t + (j - (kernel-1)/2) * dilation; out-of-range frames are zeros.
Mat im2col(const Mat& x, int steps, int batch, int kernel, int dil) {
    const Eigen::Index ch = x.cols();
    Mat col = Mat::Zero(x.rows(), kernel * ch);
    for (int j = 0; j < kernel; ++j) {
        const int off = (j - (kernel - 1) / 2) * dil;
        const int valid = steps - std::abs(off);
        if (valid <= 0) continue;
        const Eigen::Index n = static_cast<Eigen::Index>(valid) * batch;
        if (off >= 0)
            col.block(0, j * ch, n, ch) = x.middleRows(static_cast<Eigen::Index>(off) * batch, n);
        else
            col.block(static_cast<Eigen::Index>(-off) * batch, j * ch, n, ch) = x.topRows(n);
    }
    return col;
}

void col2im_add(const Mat& dcol, int steps, int batch, int kernel, int dil, Mat& dx) {
    const Eigen::Index ch = dx.cols();
    for (int j = 0; j < kernel; ++j) {
        const int off = (j - (kernel - 1) / 2) * dil;
        const int valid = steps - std::abs(off);
        if (valid <= 0) continue;
        const Eigen::Index n = static_cast<Eigen::Index>(valid) * batch;
        if (off >= 0)
            dx.middleRows(static_cast<Eigen::Index>(off) * batch, n) += dcol.block(0, j * ch, n, ch);
        else
            dx.topRows(n) += dcol.block(static_cast<Eigen::Index>(-off) * batch, j * ch, n, ch);
    }
}

}  // namespace

int feature_dim(const ModelConfig& cfg) { return cfg.tcn_channels; }

void init(ParamSet& params, const ModelConfig& cfg, Rng& rng) {
    const int ch = cfg.tcn_channels;
    params.add("tcn.in.w", uniform_fan_in(ch, cfg.input_dim, rng));
    params.add("tcn.in.b", Mat::Zero(1, ch));
    for (int b = 0; b < cfg.tcn_blocks; ++b) {
        const auto p = block_name(b);
        params.add(p + ".conv.w", uniform_fan_in(ch, cfg.tcn_kernel * ch, rng));
        params.add(p + ".conv.b", Mat::Zero(1, ch));
        params.add(p + ".ln.g", Mat::Ones(1, ch));
        params.add(p + ".ln.b", Mat::Zero(1, ch));
    }
}

// Block: y = x + GELU(LayerNorm(DilatedConv(x))).
Mat encode(const ParamSet& params, const ModelConfig& cfg, const SequenceBatch& in, TcnCache& cache) {
    cache.input = in.data;
    cache.blocks.assign(static_cast<std::size_t>(cfg.tcn_blocks), {});
    Mat x = layers::linear(in.data, params["tcn.in.w"], params["tcn.in.b"]);
    for (int b = 0; b < cfg.tcn_blocks; ++b) {
        const auto p = block_name(b);
        auto& bc = cache.blocks[static_cast<std::size_t>(b)];
        bc.xcol = im2col(x, in.steps, in.batch, cfg.tcn_kernel, dilation(b));
        const Mat conv = layers::linear(bc.xcol, params[p + ".conv.w"], params[p + ".conv.b"]);
        bc.ln_out = layers::layer_norm(conv, params[p + ".ln.g"], params[p + ".ln.b"], bc.ln);
        x += layers::gelu(bc.ln_out);
    }
    return x;
}

void encode_backward(const ParamSet& params, const ModelConfig& cfg, const TcnCache& cache, int steps, int batch,
                     const Mat& d_features, ParamSet& grads) {
    Mat dx = d_features;
    for (int b = cfg.tcn_blocks - 1; b >= 0; --b) {
        const auto p = block_name(b);
        const auto& bc = cache.blocks[static_cast<std::size_t>(b)];
        const Mat d_ln = layers::gelu_backward(bc.ln_out, dx);
        const Mat d_conv = layers::layer_norm_backward(d_ln, params[p + ".ln.g"], bc.ln, grads[p + ".ln.g"],
                                                       grads[p + ".ln.b"]);
        Mat d_col;
        layers::linear_backward(bc.xcol, params[p + ".conv.w"], d_conv, grads[p + ".conv.w"], grads[p + ".conv.b"],
                                &d_col);
        col2im_add(d_col, steps, batch, cfg.tcn_kernel, dilation(b), dx);  // residual path keeps dx
    }
    layers::linear_backward(cache.input, params["tcn.in.w"], dx, grads["tcn.in.w"], grads["tcn.in.b"], nullptr);
}

}  // namespace tacseg::tcn
