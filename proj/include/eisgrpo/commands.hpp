#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "eisgrpo/advantage.hpp"
#include "eisgrpo/config.hpp"
#include "eisgrpo/core.hpp"
#include "eisgrpo/trainer.hpp"

namespace eisgrpo {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumeric = 2;
inline constexpr int kExitFixtureMismatch = 3;

struct CommandContext {
    std::ostream& out;
    std::ostream& err;
    unsigned threads = 1;
    bool verbose = false;
    bool json_output = false;
};

// Dataset directory layout.
inline constexpr const char* kTrainSamplesFile = "train.jsonl";
inline constexpr const char* kTrainRecordsFile = "train_presented.jsonl";
inline constexpr const char* kEvalSamplesFile = "eval.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

struct GeneratedDataset {
    std::vector<PairwiseSample> train;
    std::vector<PresentedInstance> train_records;  // single-ordering export at env.p_first
    std::vector<PairwiseSample> eval;
};

GeneratedDataset generate_dataset(const RunConfig& cfg, unsigned threads);

struct LoadedDataset {
    TrainData train;
    std::vector<PairwiseSample> eval;
};

LoadedDataset load_dataset_dir(const std::string& dir);

/// Writes run_dir/config.json with the effective flat config.
void echo_config(const RunConfig& cfg);

int cmd_dataset_gen(const RunConfig& cfg, CommandContext& ctx);
int cmd_train(const RunConfig& cfg, CommandContext& ctx);
int cmd_ablate(const RunConfig& cfg, CommandContext& ctx);
int cmd_eval(const RunConfig& cfg, CommandContext& ctx);

/// One training strategy of the ablation (mode plus its batch geometry).
struct StrategySpec {
    std::string name;
    TrainMode mode = TrainMode::Eis;
    std::size_t G = 32;
    std::size_t rollout_batch_scale = 1;
    std::size_t steps_scale = 1;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    double initial_consistency = 0.0;
    double final_consistency = 0.0;
    double initial_consistent_accuracy = 0.0;
    double final_consistent_accuracy = 0.0;
};

struct StrategyResult {
    StrategySpec spec;
    std::vector<SeedOutcome> seeds;

    [[nodiscard]] double median_final_consistency() const;
    [[nodiscard]] double median_final_consistent_accuracy() const;
    [[nodiscard]] double median_consistency_gain() const;
};

std::vector<StrategySpec> ablation_strategies();
std::vector<StrategySpec> group_size_sweep();

/// Trains `spec` once per seed in [base.seed, base.seed + num_seeds).
/// When run_dir is non-empty each run writes its artifacts under
/// run_dir/<name>/seed_<k>.
StrategyResult run_strategy(const StrategySpec& spec, const TrainConfig& base, std::size_t num_seeds,
                            const LoadedDataset& data, unsigned threads, const std::string& run_dir = "");

std::string ablation_table(const std::vector<StrategyResult>& rows);

// Fixture check of the three advantage estimators on the two-subgroup
// reward example (12 x 1.5 + 4 x 1.0 | 12 x 0.0 + 4 x 1.0).
struct AdvantageEstimators {
    std::function<std::vector<double>(std::span<const double>)> grpo = grpo_advantages;
    std::function<SubgroupAdvantages(const SubgroupRewards&)> global_only = global_only_advantages;
    std::function<SubgroupAdvantages(const SubgroupRewards&)> eis = eis_advantages;
};

int cmd_advcheck(CommandContext& ctx, const AdvantageEstimators& estimators = {});

struct GradcheckReport {
    std::size_t trials = 0;
    double max_rel_error_policy = 0.0;     // weighted log-prob + KL objective
    double max_rel_error_objective = 0.0;  // clipped group loss
    [[nodiscard]] double max_rel_error() const {
        return max_rel_error_policy > max_rel_error_objective ? max_rel_error_policy : max_rel_error_objective;
    }
};

inline constexpr double kGradcheckTolerance = 1e-4;
inline constexpr double kGradcheckStep = 1e-5;

GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t trials);
int cmd_gradcheck(std::uint64_t seed, std::size_t trials, CommandContext& ctx);

}  // namespace eisgrpo
