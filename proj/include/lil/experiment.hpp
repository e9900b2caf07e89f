#pragma once

#include "lil/attacks.hpp"
#include "lil/datasets.hpp"
#include "lil/network.hpp"
#include "lil/trainer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lil {

/// Where the data for an experiment comes from.
struct DatasetSpec {
    enum class Kind { Rings, Torus, Csv, Mnist };
    Kind kind = Kind::Rings;

    // rings / torus
    std::size_t n = 400;  // points per ring, or torus points
    double noise_variance = 1e-4;
    double major_radius = 2.0;
    double minor_radius = 1.0;
    std::uint64_t seed = 0;

    // csv
    std::filesystem::path path;

    // mnist: either train_* and test_* files, or images/labels split by
    // test_fraction.
    std::filesystem::path train_images, train_labels, test_images, test_labels;
    std::filesystem::path images, labels;
    double test_fraction = 0.1;
    /// 0 keeps everything; otherwise a seeded subsample of this many rows.
    std::size_t max_train = 0;
    std::size_t max_test = 0;

    /// Inputs are bounded pixel intensities in [0, 1].
    bool bounded_inputs() const { return kind == Kind::Mnist; }
};

const char* to_string(DatasetSpec::Kind k);

struct AttackSpec {
    AttackKind kind = AttackKind::Fgsm;
    double sweep_lo = 0.01;
    double sweep_hi = 1.0;
    std::size_t sweep_n = 20;
    double ball = 0.5;
    std::size_t steps = 10;
    bool combined_loss = true;
    std::size_t max_samples = 0;
    std::size_t batch_size = 100;
};

/// A complete experiment: data, architecture, training and attack settings.
/// Parsed from JSON; unknown keys are rejected at every level.
struct ExperimentConfig {
    DatasetSpec dataset;
    /// Hidden widths of every block; the input width comes from the data.
    std::vector<std::size_t> hidden{20, 20, 20, 20};
    TrainConfig train;
    std::vector<double> beta_sweep;
    std::optional<AttackSpec> attack;
    std::filesystem::path output_dir;

    void validate() const;
};

/// Relative paths inside the config resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Materializes the dataset with train/test tags.
LabeledDataset load_dataset(const DatasetSpec& spec);

/// Network for the experiment's data and hierarchy plan.
NetworkConfig network_config_for(const ExperimentConfig& cfg, const LabeledDataset& ds);

}  // namespace lil
