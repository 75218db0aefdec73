#include "tacseg/errors.hpp"
#include "tacseg/model.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <fstream>

namespace tacseg {
namespace {

constexpr std::array<char, 4> kMagic{'T', 'S', 'C', 'K'};
constexpr std::uint16_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) fail(ErrorCode::FormatError, "truncated checkpoint");
    return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    nlohmann::json j;
    j["config"] = to_json(ckpt.model.config());
    j["norm"] = to_json(ckpt.norm);
    j["vocabulary"] = ckpt.vocabulary;
    j["modalities"] = ckpt.modalities.str();
    j["task"] = ckpt.task;
    j["tensor_count"] = ckpt.model.params().size();
    const std::string text = j.dump();

    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) fail(ErrorCode::IoError, "cannot write " + tmp.string());
        os.write(kMagic.data(), kMagic.size());
        put(os, kVersion);
        put(os, static_cast<std::uint32_t>(text.size()));
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const auto& t : ckpt.model.params().tensors()) {
            put(os, static_cast<std::uint16_t>(t.name.size()));
            os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
            write_matrix(os, t.value, DType::F64);
        }
        if (!os) fail(ErrorCode::IoError, "failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<Arch> expected_arch) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::MissingFile, path.string());
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) fail(ErrorCode::FormatError, path.string() + ": not a TSCK checkpoint");
    const auto version = get<std::uint16_t>(is);
    if (version != kVersion)
        fail(ErrorCode::FormatError, path.string() + ": unsupported checkpoint version " + std::to_string(version));
    const auto len = get<std::uint32_t>(is);
    std::string text(len, '\0');
    is.read(text.data(), len);
    if (!is) fail(ErrorCode::FormatError, "truncated checkpoint header");

    Checkpoint ckpt;
    ModelConfig cfg;
    std::size_t count = 0;
    try {
        const auto j = nlohmann::json::parse(text);
        cfg = model_config_from_json(j.at("config"));
        ckpt.norm = norm_stats_from_json(j.at("norm"));
        ckpt.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
        ckpt.modalities = ModalitySet::parse(j.at("modalities").get<std::string>());
        ckpt.task = j.value("task", std::string("skill"));
        count = j.at("tensor_count").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
    if (expected_arch && *expected_arch != cfg.arch)
        fail(ErrorCode::ConfigError, "checkpoint holds a " + to_string(cfg.arch) + " model, " +
                                         to_string(*expected_arch) + " requested");
    if (static_cast<int>(ckpt.vocabulary.size()) != cfg.num_classes)
        fail(ErrorCode::FormatError, "vocabulary size differs from the model's class count");

    SeqModel model = init_model(cfg, 0);
    auto& params = model.mutable_params();
    if (count != params.size()) fail(ErrorCode::FormatError, "tensor count does not match the model layout");
    for (std::size_t i = 0; i < count; ++i) {
        const auto name_len = get<std::uint16_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) fail(ErrorCode::FormatError, "truncated tensor name");
        Mat value = read_matrix(is);
        auto& slot = params.tensors()[i];
        if (slot.name != name || slot.value.rows() != value.rows() || slot.value.cols() != value.cols())
            fail(ErrorCode::FormatError, "tensor '" + name + "' does not match the model layout");
        slot.value = std::move(value);
    }
    ckpt.model = std::move(model);
    return ckpt;
}

void require_vocabulary(const Checkpoint& ckpt, const std::vector<std::string>& vocabulary) {
    if (ckpt.vocabulary != vocabulary || ckpt.model.config().num_classes != static_cast<int>(vocabulary.size()))
        fail(ErrorCode::VocabularyMismatch, "checkpoint has " + std::to_string(ckpt.vocabulary.size()) +
                                                " classes, pipeline expects " + std::to_string(vocabulary.size()));
}

}  // namespace tacseg
