#include "arch.hpp"

#include <string>

namespace tacseg::bilstm {
namespace {

std::string prefix(int layer, int dir) {
    return "lstm.l" + std::to_string(layer) + (dir == 0 ? ".fwd" : ".bwd");
}

Mat sigmoid(const Mat& x) {
    return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

// Runs one direction of one layer; gate layout per row is [i | f | g | o].
void run_direction(const Mat& x, const Mat& w_ih, const Mat& w_hh, const Mat& b, int steps, int batch, bool reverse,
                   LstmDirCache& c) {
    const Eigen::Index hid = w_hh.cols();
    const Eigen::Index rows = static_cast<Eigen::Index>(steps) * batch;
    c.gates = layers::linear(x, w_ih, b);
    c.cell.resize(rows, hid);
    c.tanh_cell.resize(rows, hid);
    c.hidden.resize(rows, hid);

    Mat h_prev = Mat::Zero(batch, hid);
    Mat c_prev = Mat::Zero(batch, hid);
    for (int s = 0; s < steps; ++s) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(reverse ? steps - 1 - s : s) * batch;
        auto g = c.gates.middleRows(r0, batch);
        g.noalias() += h_prev * w_hh.transpose();
        g.leftCols(2 * hid) = sigmoid(g.leftCols(2 * hid));
        g.middleCols(2 * hid, hid) = g.middleCols(2 * hid, hid).array().tanh().matrix();
        g.rightCols(hid) = sigmoid(g.rightCols(hid));

        auto cell = c.cell.middleRows(r0, batch);
        auto tc = c.tanh_cell.middleRows(r0, batch);
        auto h = c.hidden.middleRows(r0, batch);
        cell = g.middleCols(hid, hid).cwiseProduct(c_prev) + g.leftCols(hid).cwiseProduct(g.middleCols(2 * hid, hid));
        tc = cell.array().tanh().matrix();
        h = g.rightCols(hid).cwiseProduct(tc);
        h_prev = h;
        c_prev = cell;
    }
}

// Backpropagates dL/dh of one direction. Accumulates weight gradients and,
// when dx is non-null, adds the input gradient to *dx.
void backprop_direction(const Mat& x, const Mat& w_ih, const Mat& w_hh, const LstmDirCache& c, const Mat& dh_out,
                        int steps, int batch, bool reverse, Mat& dw_ih, Mat& dw_hh, Mat& db, Mat* dx) {
    const Eigen::Index hid = w_hh.cols();
    const Eigen::Index rows = static_cast<Eigen::Index>(steps) * batch;
    Mat dgates(rows, 4 * hid);
    Mat h_prev_all = Mat::Zero(rows, hid);

    Mat dh_next = Mat::Zero(batch, hid);
    Mat dc_next = Mat::Zero(batch, hid);
    Mat dc(batch, hid);
    for (int s = steps - 1; s >= 0; --s) {
        const int t = reverse ? steps - 1 - s : s;
        const int t_prev = reverse ? t + 1 : t - 1;
        const Eigen::Index r0 = static_cast<Eigen::Index>(t) * batch;
        const auto g = c.gates.middleRows(r0, batch);
        const auto i = g.leftCols(hid).array();
        const auto f = g.middleCols(hid, hid).array();
        const auto gg = g.middleCols(2 * hid, hid).array();
        const auto o = g.rightCols(hid).array();
        const auto tc = c.tanh_cell.middleRows(r0, batch).array();

        const Mat dh = dh_out.middleRows(r0, batch) + dh_next;
        dc = (dh.array() * o * (1.0 - tc.square()) + dc_next.array()).matrix();

        auto dg = dgates.middleRows(r0, batch);
        if (s > 0) {
            const Eigen::Index rp = static_cast<Eigen::Index>(t_prev) * batch;
            dg.middleCols(hid, hid) = (dc.array() * c.cell.middleRows(rp, batch).array() * f * (1.0 - f)).matrix();
            h_prev_all.middleRows(r0, batch) = c.hidden.middleRows(rp, batch);
        } else {
            dg.middleCols(hid, hid).setZero();
        }
        dg.leftCols(hid) = (dc.array() * gg * i * (1.0 - i)).matrix();
        dg.middleCols(2 * hid, hid) = (dc.array() * i * (1.0 - gg.square())).matrix();
        dg.rightCols(hid) = (dh.array() * tc * o * (1.0 - o)).matrix();

        dc_next = (dc.array() * f).matrix();
        dh_next.noalias() = dg * w_hh;
    }

    dw_ih.noalias() += dgates.transpose() * x;
    dw_hh.noalias() += dgates.transpose() * h_prev_all;
    db.row(0) += dgates.colwise().sum();
    if (dx) dx->noalias() += dgates * w_ih;
}

}  // namespace

int feature_dim(const ModelConfig& cfg) { return 2 * cfg.lstm_hidden; }

void init(ParamSet& params, const ModelConfig& cfg, Rng& rng) {
    const int hid = cfg.lstm_hidden;
    for (int l = 0; l < cfg.lstm_layers; ++l) {
        const int in = l == 0 ? cfg.input_dim : 2 * hid;
        for (int d = 0; d < 2; ++d) {
            const auto p = prefix(l, d);
            params.add(p + ".w_ih", uniform_fan_in(4 * hid, in, rng));
            params.add(p + ".w_hh", uniform_fan_in(4 * hid, hid, rng));
            Mat b = Mat::Zero(1, 4 * hid);
            b.middleCols(hid, hid).setOnes();  // forget gate
            params.add(p + ".b", std::move(b));
        }
    }
}

Mat encode(const ParamSet& params, const ModelConfig& cfg, const SequenceBatch& in, BiLstmCache& cache) {
    const int hid = cfg.lstm_hidden;
    cache.inputs.clear();
    cache.dirs.assign(static_cast<std::size_t>(cfg.lstm_layers), {});
    Mat x = in.data;
    for (int l = 0; l < cfg.lstm_layers; ++l) {
        auto& dirs = cache.dirs[static_cast<std::size_t>(l)];
        for (int d = 0; d < 2; ++d) {
            const auto p = prefix(l, d);
            run_direction(x, params[p + ".w_ih"], params[p + ".w_hh"], params[p + ".b"], in.steps, in.batch, d == 1,
                          dirs[static_cast<std::size_t>(d)]);
        }
        Mat out(x.rows(), 2 * hid);
        out << dirs[0].hidden, dirs[1].hidden;
        cache.inputs.push_back(std::move(x));
        x = std::move(out);
    }
    return x;
}

void encode_backward(const ParamSet& params, const ModelConfig& cfg, const BiLstmCache& cache, int steps, int batch,
                     const Mat& d_features, ParamSet& grads) {
    const int hid = cfg.lstm_hidden;
    Mat d_out = d_features;
    for (int l = cfg.lstm_layers - 1; l >= 0; --l) {
        const Mat& x = cache.inputs[static_cast<std::size_t>(l)];
        // the first layer's input is data, no gradient needed
        Mat dx;
        if (l > 0) dx = Mat::Zero(x.rows(), x.cols());
        for (int d = 0; d < 2; ++d) {
            const auto p = prefix(l, d);
            const Mat dh = d_out.middleCols(d * hid, hid);
            backprop_direction(x, params[p + ".w_ih"], params[p + ".w_hh"],
                               cache.dirs[static_cast<std::size_t>(l)][static_cast<std::size_t>(d)], dh, steps, batch,
                               d == 1, grads[p + ".w_ih"], grads[p + ".w_hh"], grads[p + ".b"], l > 0 ? &dx : nullptr);
        }
        d_out = std::move(dx);
    }
}

}  // namespace tacseg::bilstm
