#pragma once

// Dense building blocks shared by the three sequence architectures. All
// operate row-wise on time-major packed batches.

#include "tacseg/matrix.hpp"

#include <cmath>

namespace tacseg::layers {

inline Mat linear(const Mat& x, const Mat& w, const Mat& b) {
    Mat y(x.rows(), w.rows());
    y.noalias() = x * w.transpose();
    y.rowwise() += b.row(0);
    return y;
}

/// Accumulates dW, db; writes dX when requested.
inline void linear_backward(const Mat& x, const Mat& w, const Mat& dy, Mat& dw, Mat& db, Mat* dx) {
    dw.noalias() += dy.transpose() * x;
    db.row(0) += dy.colwise().sum();
    if (dx) {
        dx->resize(dy.rows(), w.cols());
        dx->noalias() = dy * w;
    }
}

struct LayerNormCache {
    Mat xhat;
    Vec inv_std;
};

inline constexpr double kLayerNormEps = 1e-5;

inline Mat layer_norm(const Mat& x, const Mat& gamma, const Mat& beta, LayerNormCache& cache) {
    const auto n = static_cast<double>(x.cols());
    cache.xhat.resize(x.rows(), x.cols());
    cache.inv_std.resize(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).sum() / n;
        const double var = (x.row(r).array() - mean).square().sum() / n;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.inv_std(r) = inv;
        cache.xhat.row(r) = (x.row(r).array() - mean) * inv;
    }
    Mat y = cache.xhat.array().rowwise() * gamma.row(0).array();
    y.rowwise() += beta.row(0);
    return y;
}

inline Mat layer_norm_backward(const Mat& dy, const Mat& gamma, const LayerNormCache& cache, Mat& dgamma,
                               Mat& dbeta) {
    dgamma.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    dbeta.row(0) += dy.colwise().sum();
    const auto n = static_cast<double>(dy.cols());
    Mat dxhat = dy.array().rowwise() * gamma.row(0).array();
    Mat dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const double mean_d = dxhat.row(r).sum() / n;
        const double mean_dx = dxhat.row(r).dot(cache.xhat.row(r)) / n;
        dx.row(r) = cache.inv_std(r) * (dxhat.row(r).array() - mean_d - cache.xhat.row(r).array() * mean_dx);
    }
    return dx;
}

// Exact (erf) GELU.
inline Mat gelu(const Mat& x) {
    return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)); });
}

inline Mat gelu_backward(const Mat& x, const Mat& dy) {
    const double inv_sqrt_2pi = 0.5 * M_2_SQRTPI * M_SQRT1_2;
    Mat d = x.unaryExpr([inv_sqrt_2pi](double v) {
        const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
        return cdf + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
    });
    return d.cwiseProduct(dy);
}

/// Rows of sequence b (columns [col0, col0+ncols)) out of a time-major packed matrix.
inline Mat gather_sequence(const Mat& m, int steps, int batch, int b, Eigen::Index col0, Eigen::Index ncols) {
    Mat out(steps, ncols);
    for (int t = 0; t < steps; ++t) out.row(t) = m.block(static_cast<Eigen::Index>(t) * batch + b, col0, 1, ncols);
    return out;
}

inline void scatter_sequence(Mat& m, const Mat& seq, int batch, int b, Eigen::Index col0) {
    for (Eigen::Index t = 0; t < seq.rows(); ++t) m.block(t * batch + b, col0, 1, seq.cols()) = seq.row(t);
}

}  // namespace tacseg::layers
