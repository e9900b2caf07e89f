#include "lil/checkpoint.hpp"

#include "lil/errors.hpp"

#include <fstream>
#include <sstream>

namespace lil {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "lil-checkpoint";
constexpr int kVersion = 1;

json layer_to_json(const DenseLayer& layer) {
    return json{{"rows", layer.weight.rows()},
                {"cols", layer.weight.cols()},
                {"weight", layer.weight.data()},
                {"bias", layer.bias.data()}};
}

template <typename T>
T field(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(where + "." + key, "missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(where + "." + key, e.what());
    }
}

DenseLayer layer_from_json(const json& j, const std::string& where) {
    const auto rows = field<std::size_t>(j, "rows", where);
    const auto cols = field<std::size_t>(j, "cols", where);
    auto weight = field<std::vector<double>>(j, "weight", where);
    auto bias = field<std::vector<double>>(j, "bias", where);
    if (weight.size() != rows * cols)
        throw FormatError(where + ".weight", "expected " + std::to_string(rows * cols) + " values");
    if (bias.size() != rows)
        throw FormatError(where + ".bias", "expected " + std::to_string(rows) + " values");
    return {Matrix(rows, cols, std::move(weight)), Matrix(1, rows, std::move(bias))};
}

}  // namespace

json train_config_to_json(const TrainConfig& cfg) {
    return json{{"alpha", cfg.weights.alpha},
                {"beta", cfg.weights.beta},
                {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"lr", cfg.adam.lr},
                {"beta1", cfg.adam.beta1},
                {"beta2", cfg.adam.beta2},
                {"eps", cfg.adam.eps},
                {"seed", cfg.seed},
                {"hierarchy_plan", cfg.hierarchy_plan},
                {"global_isometry", cfg.global_isometry}};
}

TrainConfig train_config_from_json(const json& j) {
    const std::string where = "training";
    TrainConfig cfg;
    cfg.weights.alpha = field<double>(j, "alpha", where);
    cfg.weights.beta = field<double>(j, "beta", where);
    cfg.epochs = field<std::size_t>(j, "epochs", where);
    cfg.batch_size = field<std::size_t>(j, "batch_size", where);
    cfg.adam.lr = field<double>(j, "lr", where);
    cfg.adam.beta1 = field<double>(j, "beta1", where);
    cfg.adam.beta2 = field<double>(j, "beta2", where);
    cfg.adam.eps = field<double>(j, "eps", where);
    cfg.seed = field<std::uint64_t>(j, "seed", where);
    cfg.hierarchy_plan = field<std::vector<std::size_t>>(j, "hierarchy_plan", where);
    cfg.global_isometry = field<bool>(j, "global_isometry", where);
    return cfg;
}

json checkpoint_to_json(const Checkpoint& ckpt) {
    json blocks = json::array();
    for (const LilBlock& block : ckpt.net.blocks) {
        json body = json::array();
        for (const DenseLayer& layer : block.body.layers) body.push_back(layer_to_json(layer));
        blocks.push_back(json{{"body", body}, {"head", layer_to_json(block.head)}});
    }
    return json{{"format", kFormat},
                {"version", kVersion},
                {"config",
                 {{"layer_widths", ckpt.net.config.layer_widths},
                  {"num_classes_per_level", ckpt.net.config.num_classes_per_level},
                  {"block_levels", ckpt.net.block_levels}}},
                {"blocks", blocks},
                {"seed", ckpt.seed},
                {"training", train_config_to_json(ckpt.train)},
                {"metadata", ckpt.metadata}};
}

Checkpoint checkpoint_from_json(const json& j) {
    if (field<std::string>(j, "format", "checkpoint") != kFormat)
        throw FormatError("checkpoint.format", "not a LIL checkpoint");
    if (field<int>(j, "version", "checkpoint") != kVersion)
        throw FormatError("checkpoint.version", "unsupported version");
    Checkpoint ckpt;
    const json config = field<json>(j, "config", "checkpoint");
    ckpt.net.config.layer_widths = field<std::vector<std::size_t>>(config, "layer_widths", "config");
    ckpt.net.config.num_classes_per_level =
        field<std::vector<std::size_t>>(config, "num_classes_per_level", "config");
    ckpt.net.block_levels = field<std::vector<std::size_t>>(config, "block_levels", "config");
    const auto blocks = field<json>(j, "blocks", "checkpoint");
    if (!blocks.is_array()) throw FormatError("checkpoint.blocks", "expected an array");
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const std::string where = "blocks[" + std::to_string(k) + "]";
        LilBlock block;
        const auto body = field<json>(blocks[k], "body", where);
        for (std::size_t l = 0; l < body.size(); ++l)
            block.body.layers.push_back(
                layer_from_json(body[l], where + ".body[" + std::to_string(l) + "]"));
        block.head = layer_from_json(field<json>(blocks[k], "head", where), where + ".head");
        ckpt.net.blocks.push_back(std::move(block));
    }
    try {
        ckpt.net.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError("checkpoint.blocks", e.what());
    }
    for (const LilBlock& block : ckpt.net.blocks)
        for (const Matrix* p : parameter_views(block))
            if (!p->all_finite()) throw FormatError("checkpoint.blocks", "non-finite parameter");
    ckpt.seed = field<std::uint64_t>(j, "seed", "checkpoint");
    ckpt.train = train_config_from_json(field<json>(j, "training", "checkpoint"));
    if (j.contains("metadata")) ckpt.metadata = j.at("metadata");
    return ckpt;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(path.filename().string(), e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_json_file(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json(read_json_file(path));
}

}  // namespace lil
