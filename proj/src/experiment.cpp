#include "lil/experiment.hpp"

#include "lil/checkpoint.hpp"
#include "lil/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace lil {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(where + "." + key + ": " + e.what());
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

void read_path(const json& j, const char* key, std::filesystem::path& out, const std::string& where,
               const std::filesystem::path& base) {
    std::string s;
    read(j, key, s, where);
    if (!s.empty()) out = resolve(base, s);
}

DatasetSpec parse_dataset(const json& j, const std::filesystem::path& base) {
    const std::string where = "dataset";
    if (!j.is_object() || !j.contains("kind")) throw std::invalid_argument("dataset.kind is required");
    DatasetSpec d;
    std::string kind;
    read(j, "kind", kind, where);
    if (kind == "rings") {
        reject_unknown(j, {"kind", "n_per_ring", "noise_variance", "seed"}, where);
        d.kind = DatasetSpec::Kind::Rings;
        read(j, "n_per_ring", d.n, where);
    } else if (kind == "torus") {
        reject_unknown(j, {"kind", "n", "major_radius", "minor_radius", "noise_variance", "seed"}, where);
        d.kind = DatasetSpec::Kind::Torus;
        d.n = 1600;
        d.noise_variance = 0.001;
        read(j, "n", d.n, where);
        read(j, "major_radius", d.major_radius, where);
        read(j, "minor_radius", d.minor_radius, where);
    } else if (kind == "csv") {
        reject_unknown(j, {"kind", "path"}, where);
        d.kind = DatasetSpec::Kind::Csv;
        read_path(j, "path", d.path, where, base);
        return d;
    } else if (kind == "mnist") {
        reject_unknown(j,
                       {"kind", "train_images", "train_labels", "test_images", "test_labels", "images",
                        "labels", "test_fraction", "max_train", "max_test", "seed"},
                       where);
        d.kind = DatasetSpec::Kind::Mnist;
        read_path(j, "train_images", d.train_images, where, base);
        read_path(j, "train_labels", d.train_labels, where, base);
        read_path(j, "test_images", d.test_images, where, base);
        read_path(j, "test_labels", d.test_labels, where, base);
        read_path(j, "images", d.images, where, base);
        read_path(j, "labels", d.labels, where, base);
        read(j, "test_fraction", d.test_fraction, where);
        read(j, "max_train", d.max_train, where);
        read(j, "max_test", d.max_test, where);
        read(j, "seed", d.seed, where);
        return d;
    } else {
        throw std::invalid_argument("dataset.kind must be rings, torus, csv or mnist, got '" + kind + "'");
    }
    read(j, "noise_variance", d.noise_variance, where);
    read(j, "seed", d.seed, where);
    return d;
}

TrainConfig parse_train(const json& j) {
    const std::string where = "train";
    reject_unknown(j,
                   {"alpha", "beta", "epochs", "batch_size", "lr", "beta1", "beta2", "eps", "seed",
                    "hierarchy_plan", "global_isometry"},
                   where);
    TrainConfig t;
    read(j, "alpha", t.weights.alpha, where);
    read(j, "beta", t.weights.beta, where);
    read(j, "epochs", t.epochs, where);
    read(j, "batch_size", t.batch_size, where);
    read(j, "lr", t.adam.lr, where);
    read(j, "beta1", t.adam.beta1, where);
    read(j, "beta2", t.adam.beta2, where);
    read(j, "eps", t.adam.eps, where);
    read(j, "seed", t.seed, where);
    read(j, "hierarchy_plan", t.hierarchy_plan, where);
    read(j, "global_isometry", t.global_isometry, where);
    return t;
}

AttackSpec parse_attack(const json& j) {
    const std::string where = "attack";
    reject_unknown(j, {"kind", "sweep", "ball", "steps", "loss", "max_samples", "batch_size"}, where);
    AttackSpec a;
    std::string kind = "fgsm";
    read(j, "kind", kind, where);
    a.kind = parse_attack_kind(kind);
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        if (!s.is_array() || s.size() != 3)
            throw std::invalid_argument("attack.sweep: expected [lo, hi, n]");
        a.sweep_lo = s[0].get<double>();
        a.sweep_hi = s[1].get<double>();
        a.sweep_n = s[2].get<std::size_t>();
    }
    read(j, "ball", a.ball, where);
    read(j, "steps", a.steps, where);
    std::string loss = "combined";
    read(j, "loss", loss, where);
    if (loss != "combined" && loss != "cse")
        throw std::invalid_argument("attack.loss must be 'combined' or 'cse'");
    a.combined_loss = loss == "combined";
    read(j, "max_samples", a.max_samples, where);
    read(j, "batch_size", a.batch_size, where);
    return a;
}

void keep_random_rows(LabeledDataset& ds, std::size_t keep, Rng& rng) {
    if (keep == 0 || keep >= ds.size()) return;
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    order.resize(keep);
    std::sort(order.begin(), order.end());
    ds = ds.select(order);
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
    if (a.dim() != b.dim() || a.levels() != b.levels())
        throw FormatError("dataset", "train and test files have different shapes");
    std::vector<double> values(a.points.data());
    values.insert(values.end(), b.points.data().begin(), b.points.data().end());
    LabeledDataset out;
    out.points = Matrix(a.size() + b.size(), a.dim(), std::move(values));
    out.labels = a.labels;
    for (std::size_t k = 0; k < b.levels(); ++k)
        out.labels[k].insert(out.labels[k].end(), b.labels[k].begin(), b.labels[k].end());
    out.split = a.split;
    out.split.insert(out.split.end(), b.split.begin(), b.split.end());
    return out;
}

}  // namespace

const char* to_string(DatasetSpec::Kind k) {
    switch (k) {
        case DatasetSpec::Kind::Rings: return "rings";
        case DatasetSpec::Kind::Torus: return "torus";
        case DatasetSpec::Kind::Csv: return "csv";
        case DatasetSpec::Kind::Mnist: return "mnist";
    }
    return "unknown";
}

void ExperimentConfig::validate() const {
    train.validate();
    if (hidden.empty()) throw std::invalid_argument("network.hidden: at least one hidden layer");
    for (std::size_t w : hidden)
        if (w == 0) throw std::invalid_argument("network.hidden: widths must be >= 1");
    for (double b : beta_sweep)
        if (!std::isfinite(b) || b < 0.0) throw std::invalid_argument("beta_sweep: values must be >= 0");
    switch (dataset.kind) {
        case DatasetSpec::Kind::Rings:
            if (dataset.n < 3) throw std::invalid_argument("dataset.n_per_ring must be >= 3");
            break;
        case DatasetSpec::Kind::Torus:
            if (dataset.n < 1) throw std::invalid_argument("dataset.n must be >= 1");
            if (!(dataset.minor_radius > 0.0 && dataset.major_radius > dataset.minor_radius))
                throw std::invalid_argument("dataset: need major_radius > minor_radius > 0");
            break;
        case DatasetSpec::Kind::Csv:
            if (dataset.path.empty()) throw std::invalid_argument("dataset.path is required");
            break;
        case DatasetSpec::Kind::Mnist: {
            const bool pair = !dataset.images.empty() && !dataset.labels.empty();
            const bool split = !dataset.train_images.empty() && !dataset.train_labels.empty();
            if (pair == split)
                throw std::invalid_argument(
                    "dataset: give either images+labels or train_images+train_labels (+test_*)");
            if (!(dataset.test_fraction >= 0.0 && dataset.test_fraction < 1.0))
                throw std::invalid_argument("dataset.test_fraction must be in [0, 1)");
            break;
        }
    }
    if (!(dataset.noise_variance >= 0.0)) throw std::invalid_argument("dataset.noise_variance must be >= 0");
    if (attack) {
        if (!(attack->sweep_lo > 0.0 && attack->sweep_hi >= attack->sweep_lo && attack->sweep_n >= 1))
            throw std::invalid_argument("attack.sweep: need 0 < lo <= hi and n >= 1");
        if (!(attack->ball >= 0.0)) throw std::invalid_argument("attack.ball must be >= 0");
        if (attack->batch_size < 1) throw std::invalid_argument("attack.batch_size must be >= 1");
    }
}

ExperimentConfig parse_experiment_config(const json& j, const std::filesystem::path& base_dir) {
    reject_unknown(j, {"dataset", "network", "train", "beta_sweep", "attack", "output_dir"}, "config");
    ExperimentConfig cfg;
    if (!j.contains("dataset")) throw std::invalid_argument("config: 'dataset' is required");
    cfg.dataset = parse_dataset(j.at("dataset"), base_dir);
    if (j.contains("network")) {
        reject_unknown(j.at("network"), {"hidden"}, "network");
        read(j.at("network"), "hidden", cfg.hidden, "network");
    }
    if (j.contains("train")) cfg.train = parse_train(j.at("train"));
    read(j, "beta_sweep", cfg.beta_sweep, "config");
    if (j.contains("attack")) cfg.attack = parse_attack(j.at("attack"));
    read_path(j, "output_dir", cfg.output_dir, "config", base_dir);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = read_json_file(path);
    } catch (const FormatError& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_experiment_config(j, path.parent_path());
}

LabeledDataset load_dataset(const DatasetSpec& spec) {
    Rng rng(spec.seed);
    switch (spec.kind) {
        case DatasetSpec::Kind::Rings:
            return gen_entangled_rings(spec.n, spec.noise_variance, rng);
        case DatasetSpec::Kind::Torus:
            return gen_torus(spec.n, spec.major_radius, spec.minor_radius, spec.noise_variance, rng);
        case DatasetSpec::Kind::Csv:
            return load_dataset_csv(spec.path);
        case DatasetSpec::Kind::Mnist: {
            if (!spec.images.empty()) {
                LabeledDataset ds = load_mnist_idx(spec.images, spec.labels);
                assign_random_split(ds, spec.test_fraction, rng);
                LabeledDataset train = ds.subset(Split::Train);
                LabeledDataset test = ds.subset(Split::Test);
                keep_random_rows(train, spec.max_train, rng);
                keep_random_rows(test, spec.max_test, rng);
                return concat(train, test);
            }
            LabeledDataset train = load_mnist_idx(spec.train_images, spec.train_labels, Split::Train);
            keep_random_rows(train, spec.max_train, rng);
            if (spec.test_images.empty()) return train;
            LabeledDataset test = load_mnist_idx(spec.test_images, spec.test_labels, Split::Test);
            keep_random_rows(test, spec.max_test, rng);
            return concat(train, test);
        }
    }
    throw std::invalid_argument("unknown dataset kind");
}

NetworkConfig network_config_for(const ExperimentConfig& cfg, const LabeledDataset& ds) {
    NetworkConfig net;
    net.layer_widths.push_back(ds.dim());
    net.layer_widths.insert(net.layer_widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    for (std::size_t k = 0; k < ds.levels(); ++k) net.num_classes_per_level.push_back(ds.num_classes(k));
    return net;
}

}  // namespace lil
