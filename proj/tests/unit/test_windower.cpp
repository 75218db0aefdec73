#include "tacseg/windows.hpp"

#include "../support/expect.hpp"

#include <doctest.h>

using namespace tacseg;

namespace {

// Starts {0, S, 2S, ...} up to T-W, plus the tail anchor.
std::vector<int> oracle_starts(int t, int w, int s) {
    if (t < w) return {0};
    std::vector<int> out;
    for (int x = 0; x + w <= t; x += s) out.push_back(x);
    if (out.back() != t - w) out.push_back(t - w);
    return out;
}

FusedSequence labeled(const std::vector<int>& labels) {
    FusedSequence s;
    s.features = Mat::Zero(static_cast<Eigen::Index>(labels.size()), 2);
    s.labels = labels;
    return s;
}

}  // namespace

TEST_CASE("plan_windows examples") {
    const auto p100 = plan_windows(100, 50, 10);
    CHECK(oracle_starts(100, 50, 10) == std::vector<int>{0, 10, 20, 30, 40, 50});
    CHECK(p100.starts == std::vector<int>{0, 10, 20, 30, 40, 50});
    CHECK(p100.size() == 6);
    CHECK(plan_windows(50).starts == std::vector<int>{0});
    CHECK(oracle_starts(55, 50, 10) == std::vector<int>{0, 5});
    CHECK(plan_windows(55).starts == std::vector<int>{0, 5});
    const auto shorty = plan_windows(12);
    CHECK(shorty.starts == std::vector<int>{0});
    CHECK(shorty.length() == 12);
    CHECK(plan_windows(55, 50, 10, false).starts == std::vector<int>{0});
}

TEST_CASE("plans match the oracle and cover every frame") {
    for (int t = 1; t <= 230; t += 3)
        for (int s : {1, 7, 10, 25}) {
            const auto p = plan_windows(t, 50, s);
            CHECK(p.starts == oracle_starts(t, 50, s));
            const auto cov = frame_coverage(p);
            REQUIRE(cov.size() == static_cast<std::size_t>(t));
            std::size_t total = 0;
            for (const auto& c : cov) {
                CHECK(!c.empty());
                total += c.size();
            }
            CHECK(total == p.size() * static_cast<std::size_t>(p.length()));
        }
}

TEST_CASE("frame_coverage: T=100 W=50 S=10") {
    const auto cov = frame_coverage(plan_windows(100));
    // oracle: count windows [s, s+50) stabbing the frame
    auto stab = [](int f) {
        int k = 0;
        for (int s : {0, 10, 20, 30, 40, 50}) k += (f >= s && f < s + 50) ? 1 : 0;
        return k;
    };
    CHECK(stab(0) == 1);
    CHECK(stab(50) == 5);
    CHECK(cov[0].size() == 1);
    CHECK(cov[50].size() == static_cast<std::size_t>(stab(50)));
    CHECK(cov[49].size() == 5);
    const auto once = frame_coverage(plan_windows(50));
    for (const auto& c : once) CHECK(c.size() == 1);
}

TEST_CASE("idle filter is strict") {
    auto window_with_idle = [](int idle) {
        std::vector<int> l(50, 1);
        for (int i = 0; i < idle; ++i) l[static_cast<std::size_t>(i)] = 0;
        return labeled(l);
    };
    const auto plan = plan_windows(50);
    const auto s41 = window_with_idle(41);
    CHECK(make_training_windows(s41, plan).empty());
    const auto s40 = window_with_idle(40);
    CHECK(make_training_windows(s40, plan).size() == 1);
    const auto s0 = window_with_idle(0);
    CHECK(make_training_windows(s0, plan).size() == 1);

    FusedSequence unlabeled;
    unlabeled.features = Mat::Zero(50, 2);
    CHECK_CODE(make_training_windows(unlabeled, plan), LabelsRequired);
}

TEST_CASE("training windows are a filtered subsequence of the plan") {
    std::vector<int> l(200, 0);
    for (int i = 120; i < 140; ++i) l[static_cast<std::size_t>(i)] = 2;
    const auto seq = labeled(l);
    const auto plan = plan_windows(200);
    const auto ws = make_training_windows(seq, plan);
    std::size_t k = 0;
    for (const auto& w : ws) {
        while (k < plan.size() && plan.starts[k] != w.start) ++k;
        REQUIRE(k < plan.size());
        int idle = 0;
        for (int i = 0; i < w.length; ++i) idle += w.label(i) == 0 ? 1 : 0;
        CHECK(idle * 5 <= w.length * 4);
    }
    // oracle: windows with >= 10 of the 20 action frames
    std::size_t expected = 0;
    for (int s : plan.starts) {
        int action = 0;
        for (int i = s; i < s + 50; ++i) action += l[static_cast<std::size_t>(i)] != 0 ? 1 : 0;
        expected += action >= 10 ? 1 : 0;
    }
    CHECK(ws.size() == expected);
}
