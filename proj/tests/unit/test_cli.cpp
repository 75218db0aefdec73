#include "cli.hpp"

#include "tacseg/matrix.hpp"
#include "tacseg/model.hpp"
#include "tacseg/recording.hpp"
#include "tacseg/wrench.hpp"

#include "../support/tmpdir.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using namespace tacseg;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

// Every file under root except run manifests (they carry wall-clock time).
std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().filename() != "run_manifest.json")
            out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(run({}) == cli::kUsageError);
    CHECK(run({"bogus"}) == cli::kUsageError);
    testing::TempDir dir("cli_usage");
    const auto out = (dir / "d").string();
    CHECK(run({"synth", "--demos", "2", "--out", out, "--train-frac", "0.9", "--val-frac", "0.2"}) == cli::kUsageError);
    CHECK(run({"train", "--data", out, "--out", out, "--arch", "vgg"}) == cli::kUsageError);
    CHECK(run({"train", "--data", out, "--out", out, "--modalities", "smell"}) == cli::kUsageError);
    CHECK(run({"synth", "--help"}) == cli::kOk);
}

TEST_CASE("synth is reproducible and writes the dataset layout") {
    testing::TempDir dir("cli_synth");
    const auto a = (dir / "a").string(), b = (dir / "b").string();
    REQUIRE(run({"synth", "--demos", "3", "--seed", "7", "--out", a}) == cli::kOk);
    REQUIRE(run({"synth", "--demos", "3", "--seed", "7", "--out", b}) == cli::kOk);
    CHECK(tree(a) == tree(b));
    CHECK(fs::exists(dir / "a" / "splits.json"));
    CHECK(fs::exists(dir / "a" / "run_manifest.json"));
    for (const char* name : {"demo_000", "demo_001", "demo_002"}) {
        CHECK(fs::exists(dir / "a" / name / "manifest.json"));
        CHECK(fs::exists(dir / "a" / name / "ground_truth.json"));
    }
    const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "run_manifest.json"));
    CHECK(manifest["seed"] == 7);
    CHECK(manifest.contains("duration_s"));
    CHECK(manifest["command"] == "synth");
}

TEST_CASE("synth -> ft-filter -> train -> eval -> infer") {
    testing::TempDir dir("cli_pipe");
    const auto data = (dir / "data").string(), clean = (dir / "clean").string();
    REQUIRE(run({"synth", "--demos", "4", "--seed", "3", "--out", data, "--train-frac", "0.5", "--val-frac", "0.25",
                 "--test-frac", "0.25"}) == cli::kOk);

    // oracle filtering leaves F/T outside the padded intervals untouched
    REQUIRE(run({"ft-filter", "--in", data, "--out", clean, "--oracle", "--seed", "1"}) == cli::kOk);
    const auto raw = synchronize(rebase(load_recording(dir / "data" / "demo_000")));
    const auto filtered = load_recording(dir / "clean" / "demo_000");
    const auto intervals = load_intervals_csv(dir / "clean" / "demo_000" / "trigger_intervals.csv");
    const auto mask = labels_from_intervals(intervals, static_cast<int>(raw.stream("ft").size()));
    const Mat& before = raw.stream("ft").values;
    const Mat& after = filtered.stream("ft").values;
    REQUIRE(before.rows() == after.rows());
    int inside = 0;
    for (Eigen::Index t = 0; t < before.rows(); ++t) {
        if (mask[static_cast<std::size_t>(t)] == 0)
            CHECK((before.row(t).array() == after.row(t).array()).all());
        else
            ++inside;
    }
    CHECK(inside > 0);

    const auto model_dir = (dir / "model").string();
    std::string log;
    REQUIRE(run({"train", "--data", clean, "--out", model_dir, "--arch", "tcn", "--epochs", "1", "--hidden", "8",
                 "--layers", "2", "--seed", "2"},
                &log) == cli::kOk);
    CHECK(fs::exists(dir / "model" / "model.tsck"));
    CHECK(!slurp(dir / "model" / "train_log.jsonl").empty());

    const auto eval_dir = (dir / "eval").string();
    REQUIRE(run({"eval", "--checkpoint", (dir / "model" / "model.tsck").string(), "--data", clean, "--out", eval_dir},
                &log) == cli::kOk);
    const auto metrics = nlohmann::json::parse(slurp(dir / "eval" / "metrics.json"));
    CHECK(metrics.contains("accuracy"));
    CHECK(metrics["per_class"].size() == 5);
    CHECK(fs::exists(dir / "eval" / "f1_table.csv"));

    const auto infer_dir = (dir / "infer").string();
    REQUIRE(run({"infer", "--checkpoint", (dir / "model" / "model.tsck").string(), "--in",
                 (dir / "clean" / "demo_003").string(), "--out", infer_dir}) == cli::kOk);
    CHECK(fs::exists(dir / "infer" / "probs.tsm"));
    CHECK(fs::exists(dir / "infer" / "labels.csv"));
    CHECK(fs::exists(dir / "infer" / "timeline.svg"));

    // a skill checkpoint cannot drive the trigger filter
    CHECK(run({"ft-filter", "--in", data, "--out", (dir / "x").string(), "--checkpoint",
               (dir / "model" / "model.tsck").string()},
              &log) == cli::kRuntimeError);
    CHECK(log.find("VocabularyMismatch") != std::string::npos);
    CHECK(run({"ft-filter", "--in", data, "--out", (dir / "y").string(), "--checkpoint",
               (dir / "nope.tsck").string()}) == cli::kRuntimeError);
}

TEST_CASE("eval on perfect predictions reports accuracy 1") {
    // relabel every frame as one class, then force the classifier onto it
    testing::TempDir dir("cli_perfect");
    const auto data = (dir / "data").string();
    REQUIRE(run({"synth", "--demos", "3", "--seed", "9", "--out", data, "--train-frac", "0.34", "--val-frac", "0.33",
                 "--test-frac", "0.33"}) == cli::kOk);
    for (const char* name : {"demo_000", "demo_001", "demo_002"}) {
        auto rec = load_recording(dir / "data" / name);
        std::fill(rec.labels->labels.begin(), rec.labels->labels.end(), 2);
        save_recording(rec, dir / "data" / name);
    }
    const auto model_dir = (dir / "model").string();
    REQUIRE(run({"train", "--data", data, "--out", model_dir, "--arch", "tcn", "--epochs", "1", "--hidden", "8",
                 "--layers", "1", "--seed", "1"}) == cli::kOk);
    const auto ckpt_path = dir / "model" / "model.tsck";
    auto ck = load_checkpoint(ckpt_path);
    auto& params = ck.model.mutable_params();
    params["cls.w"].setZero();
    params["cls.b"].setZero();
    params["cls.b"](0, 2) = 5.0;
    save_checkpoint(ck, ckpt_path);
    REQUIRE(run({"eval", "--checkpoint", ckpt_path.string(), "--data", data, "--out", (dir / "eval").string()}) ==
            cli::kOk);
    const auto metrics = nlohmann::json::parse(slurp(dir / "eval" / "metrics.json"));
    CHECK(metrics["accuracy"] == 1.0);
    CHECK(metrics["per_class"]["under_linear_force"]["f1"] == 1.0);
    CHECK(metrics["per_class"]["idle"]["f1"] == 1.0);
}

TEST_CASE("missing modality stream exits 1") {
    testing::TempDir dir("cli_mod");
    const auto data = (dir / "data").string();
    REQUIRE(run({"synth", "--demos", "2", "--seed", "4", "--out", data, "--train-frac", "0.5", "--val-frac", "0.5",
                 "--test-frac", "0"}) == cli::kOk);
    for (const char* name : {"demo_000", "demo_001"}) {
        auto rec = load_recording(dir / "data" / name);
        rec.streams.erase("camera");
        fs::remove_all(dir / "data" / name);
        save_recording(rec, dir / "data" / name);
    }
    CHECK(run({"train", "--data", data, "--out", (dir / "m").string(), "--modalities", "camera,tactile", "--epochs",
               "1"}) == cli::kRuntimeError);
}
