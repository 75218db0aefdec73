#include "tacseg/model.hpp"
#include "tacseg/rng.hpp"

#include "../support/expect.hpp"
#include "../support/gradcheck.hpp"
#include "../support/tmpdir.hpp"

#include <doctest.h>

#include <fstream>

#include <cmath>

using namespace tacseg;
using tacseg::testing::small_config;

namespace {

Mat randn(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Mat m(r, c);
    for (auto& v : m.reshaped()) v = n(rng);
    return m;
}

const Arch kArchs[] = {Arch::BiLstm, Arch::Tcn, Arch::Transformer};

bool same_params(const SeqModel& a, const SeqModel& b) {
    const auto& ta = a.params().tensors();
    const auto& tb = b.params().tensors();
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (ta[i].name != tb[i].name || ta[i].value != tb[i].value) return false;
    return true;
}

}  // namespace

TEST_CASE("init_model") {
    for (Arch a : kArchs) {
        const auto cfg = small_config(a, 10, 5);
        CHECK(same_params(init_model(cfg, 3), init_model(cfg, 3)));
        CHECK_FALSE(same_params(init_model(cfg, 3), init_model(cfg, 4)));
    }
    ModelConfig def;
    const auto m = init_model(def, 1);
    CHECK(m.params()["cls.w"].rows() == 5);
    CHECK(m.params()["cls.w"].cols() == 2 * 128);

    ModelConfig bad;
    bad.arch = Arch::Transformer;
    bad.tf_heads = 3;
    CHECK_CODE(init_model(bad, 1), ConfigError);
    CHECK_CODE(arch_from_string("vgg"), ConfigError);
    CHECK(arch_from_string("tcn") == Arch::Tcn);
}

TEST_CASE("forward shape contract and determinism") {
    for (Arch a : kArchs) {
        CAPTURE(to_string(a));
        const auto m = init_model(small_config(a, 10, 5), 1);
        for (int t : {1, 2, 17, 50}) {
            const auto out = forward(m, randn(t, 10, 2), false, 0);
            CHECK(out.logits.rows() == t);
            CHECK(out.logits.cols() == 5);
            CHECK(out.logits.allFinite());
        }
        const Mat x = randn(20, 10, 3);
        CHECK(forward(m, x, false, 1).logits == forward(m, x, false, 2).logits);
        CHECK(forward(m, x, true, 1).logits != forward(m, x, true, 2).logits);
        CHECK_CODE(forward(m, randn(5, 11, 4), false, 0), DimMismatch);
    }
}

TEST_CASE("batched forward equals per-sequence forward") {
    for (Arch a : kArchs) {
        CAPTURE(to_string(a));
        const auto m = init_model(small_config(a, 6, 3), 5);
        const std::vector<Mat> seqs{randn(12, 6, 1), randn(12, 6, 2), randn(12, 6, 3)};
        const auto batch = SequenceBatch::pack(seqs);
        const Mat logits = forward(m, batch, false, 0).logits;
        for (int b = 0; b < 3; ++b) {
            const Mat single = forward(m, seqs[static_cast<std::size_t>(b)], false, 0).logits;
            CHECK((SequenceBatch::unpack(logits, 12, 3, b) - single).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("BiLSTM sees the future; no accidental time-equivariance") {
    const auto m = init_model(small_config(Arch::BiLstm, 6, 4), 7);
    Mat x = randn(20, 6, 8);
    Mat y = x;
    y.bottomRows(10) = -x.bottomRows(10);
    CHECK((forward(m, x, false, 0).logits.row(0) - forward(m, y, false, 0).logits.row(0)).cwiseAbs().maxCoeff() > 1e-9);

    for (Arch a : {Arch::BiLstm, Arch::Transformer}) {
        const auto mm = init_model(small_config(a, 6, 4), 9);
        const Mat fwd = forward(mm, x, false, 0).logits;
        const Mat rev = forward(mm, x.colwise().reverse(), false, 0).logits;
        CHECK((fwd - rev.colwise().reverse()).cwiseAbs().maxCoeff() > 1e-9);
    }
}

TEST_CASE("cross-entropy") {
    CHECK(ce_loss(Mat::Zero(3, 5), {0, 3, 4}) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
    Mat sat = Mat::Zero(2, 5);
    sat(0, 1) = 100;
    sat(1, 4) = 100;
    CHECK(ce_loss(sat, {1, 4}) < 1e-6);

    Mat l(2, 2);
    l << 1, 0, 0, 1;
    // oracle: both rows give -ln(e / (e + 1))
    const double oracle = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    CHECK(oracle == doctest::Approx(0.31326).epsilon(1e-5));
    CHECK(ce_loss(l, {0, 1}) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK_CODE(ce_loss(l, {0, 2}), LabelError);

    const Mat z = randn(4, 3, 10);
    const std::vector<int> y{2, 0, 1, 1};
    Mat closed = softmax_rows(z);
    for (int i = 0; i < 4; ++i) closed(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    closed /= 4.0;
    CHECK((ce_loss_grad(z, y) - closed).cwiseAbs().maxCoeff() < 1e-15);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(softmax_rows(z).row(i).sum() - 1.0) < 1e-12);
}

TEST_CASE("backward: zero upstream, stale cache, finite differences") {
    for (Arch a : kArchs) {
        CAPTURE(to_string(a));
        auto m = init_model(small_config(a, 7, 5), 11);
        const Mat x = randn(20, 7, 12);
        const auto fw = forward(m, x, true, 3);
        const auto g = backward(m, *fw.cache, Mat::Zero(20, 5));
        CHECK(g.same_layout(m.params()));
        for (const auto& t : g.tensors()) CHECK(t.value.isZero(0.0));

        std::vector<int> y(20);
        for (int i = 0; i < 20; ++i) y[static_cast<std::size_t>(i)] = (i * 3) % 5;
        const auto r = testing::gradient_check(m, x, y, 10, 1e-5, 1e-6, 13);
        CAPTURE(r.worst_tensor);
        CHECK(r.full_coverage);
        CHECK(r.max_rel_error < 1e-4);

        m.mutable_params();
        CHECK_CODE(backward(m, *fw.cache, Mat::Zero(20, 5)), CacheError);
        const auto other = init_model(small_config(a, 7, 5), 11);
        CHECK_CODE(backward(other, *forward(m, x, false, 0).cache, Mat::Zero(20, 5)), CacheError);
    }
}

TEST_CASE("adam") {
    ModelConfig cfg = small_config(Arch::Tcn, 4, 3);
    auto m = init_model(cfg, 1);
    const auto before = m;
    auto opt = OptimizerState::for_model(m, 1e-3);
    adam_step(m, opt, m.params().zeros_like());
    CHECK(same_params(m, before));
    CHECK(opt.step == 1);

    // one step with g = 1: m_hat = v_hat = 1, delta = -lr * 1 / (1 + eps)
    const double oracle = -1e-3 * 1.0 / (std::sqrt(1.0) + 1e-8);
    CHECK(oracle == doctest::Approx(-0.001).epsilon(1e-7));
    auto m2 = before;
    auto opt2 = OptimizerState::for_model(m2, 1e-3);
    ParamSet ones = m2.params().zeros_like();
    for (auto& t : ones.tensors()) t.value.setOnes();
    adam_step(m2, opt2, ones);
    for (std::size_t i = 0; i < m2.params().size(); ++i) {
        const Mat delta = m2.params().tensors()[i].value - before.params().tensors()[i].value;
        CHECK((delta.array() - oracle).abs().maxCoeff() < 1e-15);
    }

    auto m3 = before;
    auto opt3 = OptimizerState::for_model(m3, 1e-3);
    adam_step(m3, opt3, ones);
    CHECK(same_params(m2, m3));

    ParamSet wrong;
    wrong.add("x", Mat::Zero(1, 1));
    CHECK_CODE(adam_step(m3, opt3, wrong), DimMismatch);
}

TEST_CASE("checkpoint round trip and guards") {
    testing::TempDir dir("ckpt");
    Checkpoint ck;
    ck.model = init_model(small_config(Arch::BiLstm, kFusedDim, 5), 21);
    ck.norm.mean.fill(0.5);
    ck.norm.std.fill(2.0);
    ck.norm.mean[3] = 0.1;
    ck.vocabulary = {"a", "b", "c", "d", "e"};
    ck.modalities = ModalitySet::parse("tactile,ft");
    save_checkpoint(ck, dir / "m.tsck");
    const auto back = load_checkpoint(dir / "m.tsck");
    CHECK(back.model.config() == ck.model.config());
    CHECK(same_params(back.model, ck.model));
    CHECK(back.norm == ck.norm);
    CHECK(back.vocabulary == ck.vocabulary);
    CHECK(back.modalities == ck.modalities);
    CHECK(back.task == "skill");

    CHECK_CODE(load_checkpoint(dir / "m.tsck", Arch::Tcn), ConfigError);
    CHECK_CODE(require_vocabulary(back, {"none", "pull", "lock", "release"}), VocabularyMismatch);
    {
        std::ofstream os(dir / "bad.tsck", std::ios::binary);
        os << "TSCX garbage";
    }
    CHECK_CODE(load_checkpoint(dir / "bad.tsck"), FormatError);
}
