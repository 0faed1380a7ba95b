#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eisgrpo/core.hpp"
#include "eisgrpo/objective.hpp"
#include "eisgrpo/policy.hpp"
#include "eisgrpo/rng.hpp"

namespace eisgrpo {

enum class TrainMode { Eis, GrpoBalanced, GrpoDuplicated, GlobalOnly };

std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

struct TrainConfig {
    TrainMode mode = TrainMode::Eis;
    std::size_t G = 32;
    std::size_t L = 2;  // forced to 1 for the grpo_* modes
    std::size_t rollout_batch = 64;
    std::size_t train_batch = 32;
    double lr = 1e-3;
    ObjectiveConfig objective;
    std::size_t steps = 300;  // rollout batches; each yields rollout_batch / train_batch updates
    std::uint64_t seed = 0;
    std::size_t eval_interval = 25;
    std::size_t checkpoint_interval = 0;  // 0: final checkpoint only
    std::size_t hidden = 32;
    std::size_t max_len = 4;
    double init_scale = 1.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    [[nodiscard]] std::size_t effective_L() const;
    void validate() const;
};

/// Training data: samples plus the ordering each one was recorded in
/// (1 = better response first). Single-ordering modes train on the recorded
/// ordering; the others derive their orderings from the sample itself.
struct TrainData {
    std::vector<PairwiseSample> samples;
    std::vector<int> recorded_ell;

    static TrainData from_samples(std::vector<PairwiseSample> samples);
    static TrainData from_records(std::vector<PairwiseSample> samples, std::span<const PresentedInstance> records);
};

struct MetricsRecord {
    std::size_t step = 0;
    std::optional<double> mean_reward;  // absent before the first rollout batch
    std::optional<double> mean_output_length;
    double mean_kl_to_ref = 0.0;
    double probe_consistency = 0.0;
    double probe_consistent_accuracy = 0.0;
};

std::string metrics_json_line(const MetricsRecord& r);

/// Transformed instances of one sample in subgroup order for the mode.
std::vector<InstancePtr> subgroup_instances(const PairwiseSample& sample, TrainMode mode, std::size_t L,
                                            int recorded_ell);

/// Samples G / L rollouts from each instance with the behavior parameters.
/// Rollout (l, i) draws from key.with({l, i}).
GroupBatch collect_group(const PolicyParams& params_old, std::span<const InstancePtr> instances, std::size_t G,
                         const StreamKey& key);

/// Convenience form: orderings chosen from the config's mode and L.
GroupBatch collect_group(const PolicyParams& params_old, const PairwiseSample& sample, const TrainConfig& cfg,
                         const StreamKey& key, int recorded_ell = 1);

/// Fills batch.advantages with the estimator matching the mode.
void fill_advantages(GroupBatch& batch, TrainMode mode);

/// Adam with bias correction; minimizes the loss it is handed gradients of.
class Adam {
public:
    Adam(std::size_t n, double lr, double beta1, double beta2, double eps);
    void step(std::span<double> params, std::span<const double> grad);
    [[nodiscard]] std::size_t steps_taken() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
    double beta1_pow_ = 1.0;
    double beta2_pow_ = 1.0;
};

struct TrainHooks {
    std::function<void(const MetricsRecord&)> on_metrics;
    std::function<void(std::size_t step, const PolicyParams&)> on_checkpoint;
    // Called with a JSON dump of the offending minibatch before a numeric abort.
    std::function<void(const std::string&)> on_numeric_failure;
};

struct TrainResult {
    PolicyParams initial;
    PolicyParams final_params;
    std::vector<MetricsRecord> metrics;
};

/// Averaged loss and gradient over a list of groups, summed in index order.
GroupLossResult minibatch_loss_and_grad(const PolicyParams& params, const PolicyParams& ref,
                                        std::span<const GroupBatch> groups, const ObjectiveConfig& cfg,
                                        unsigned threads);

TrainResult train(const TrainConfig& cfg, const TrainData& train_data, std::span<const PairwiseSample> eval_samples,
                  unsigned threads = 1, const TrainHooks& hooks = {},
                  const std::optional<PolicyParams>& init = std::nullopt);

/// Runs train() and writes {metrics.jsonl, checkpoints/, final.ckpt} under
/// run_dir. config.json is written by the caller before any work starts.
TrainResult run_training(const TrainConfig& cfg, const TrainData& train_data,
                         std::span<const PairwiseSample> eval_samples, const std::string& run_dir,
                         const std::string& config_echo_json, unsigned threads = 1,
                         const std::optional<PolicyParams>& init = std::nullopt, bool verbose = false);

}  // namespace eisgrpo
