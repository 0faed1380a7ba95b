#pragma once

#include <span>
#include <vector>

namespace eisgrpo {

/// Mean and population standard deviation of a reward list.
struct RewardStats {
    double mean = 0.0;
    double std = 0.0;
};

/// Standardization denominators below this contribute a zero term.
inline constexpr double kMinRewardStd = 1e-8;

RewardStats reward_stats(std::span<const double> rewards);

using SubgroupRewards = std::vector<std::vector<double>>;
using SubgroupAdvantages = std::vector<std::vector<double>>;

/// Per-group standardization (R_i - mean) / std. Requires at least two
/// rewards; a zero-variance group yields all zeros.
std::vector<double> grpo_advantages(std::span<const double> rewards);

/// Standardization against the mean and std pooled over every subgroup.
SubgroupAdvantages global_only_advantages(const SubgroupRewards& subgroup_rewards);

/// Pooled (global) standardized term plus within-subgroup (local)
/// standardized term. Each term applies the zero-variance rule on its own.
SubgroupAdvantages eis_advantages(const SubgroupRewards& subgroup_rewards);

}  // namespace eisgrpo
