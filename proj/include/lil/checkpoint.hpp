#pragma once

#include "lil/network.hpp"
#include "lil/trainer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace lil {

/// A trained network with the settings it was trained under.
struct Checkpoint {
    StackedLilNetwork net;
    std::uint64_t seed = 0;
    TrainConfig train;
    /// Free-form provenance (dataset kind, accuracies, ...). Must not hold
    /// anything time-dependent so that checkpoints are reproducible.
    nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
/// Throws FormatError naming the offending field.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Serialized with a trailing newline and 2-space indent.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace lil
