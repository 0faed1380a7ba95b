#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eisgrpo/simenv.hpp"
#include "eisgrpo/trainer.hpp"

namespace eisgrpo {

struct RunPaths {
    std::string dataset_in;
    std::string run_dir;
    std::string checkpoint_in;
    std::string judgments_in;
};

/// Everything a command needs. Serialized as one flat JSON object with
/// dotted keys ("train.G", "env.noise_sigma", ...). The single top-level
/// `seed` feeds both the environment and the trainer.
struct RunConfig {
    std::uint64_t seed = 0;
    EnvConfig env;
    std::size_t num_train = 2000;
    std::size_t num_eval = 500;
    std::size_t answers_per_question = 20;
    TrainConfig train;
    RunPaths paths;
    std::size_t ablate_seeds = 5;
    bool ablate_g_sweep = false;

    /// Copies `seed` into env and train.
    void sync_seeds();
    void validate() const;
};

enum class FieldKind { Unsigned, Real, Text, Flag, Mode };

struct ConfigField {
    std::string key;
    FieldKind kind;
    std::string help;
    std::function<nlohmann::json(const RunConfig&)> get;
    std::function<void(RunConfig&, const nlohmann::json&)> set;
};

/// Every configurable key, in echo order.
const std::vector<ConfigField>& config_fields();

nlohmann::json to_flat_json(const RunConfig& cfg);

/// Applies a flat-key JSON object; unknown keys and ill-typed values throw
/// ConfigError naming the field.
void apply_json(RunConfig& cfg, const nlohmann::json& flat);

/// Applies one command-line value, parsed according to the field kind.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

RunConfig load_config_file(const std::string& path);

/// Echo of the train section (stored in checkpoint headers).
nlohmann::json train_config_json(const TrainConfig& t);

}  // namespace eisgrpo
