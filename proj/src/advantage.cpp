#include "eisgrpo/advantage.hpp"

#include <cmath>
#include <string>

#include "eisgrpo/errors.hpp"

namespace eisgrpo {

namespace {

double standardized(double r, const RewardStats& s) { return s.std < kMinRewardStd ? 0.0 : (r - s.mean) / s.std; }

std::vector<double> flatten(const SubgroupRewards& groups) {
    std::vector<double> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    return all;
}

void check_subgroups(const SubgroupRewards& groups, std::size_t min_per_subgroup) {
    if (groups.empty()) throw DegenerateGroup("no subgroups");
    std::size_t total = 0;
    for (std::size_t l = 0; l < groups.size(); ++l) {
        if (groups[l].size() < min_per_subgroup) {
            throw DegenerateGroup("subgroup " + std::to_string(l) + " has " + std::to_string(groups[l].size()) +
                                  " rewards, need at least " + std::to_string(min_per_subgroup));
        }
        total += groups[l].size();
    }
    if (total < 2) throw DegenerateGroup("group needs at least 2 rewards in total");
}

}  // namespace

RewardStats reward_stats(std::span<const double> rewards) {
    if (rewards.empty()) throw DegenerateGroup("reward statistics of an empty list");
    const double n = static_cast<double>(rewards.size());
    double sum = 0.0;
    for (double r : rewards) sum += r;
    const double mean = sum / n;
    double ss = 0.0;
    for (double r : rewards) ss += (r - mean) * (r - mean);
    return {mean, std::sqrt(ss / n)};
}

std::vector<double> grpo_advantages(std::span<const double> rewards) {
    if (rewards.size() < 2) throw DegenerateGroup("GRPO group needs at least 2 rewards");
    const RewardStats s = reward_stats(rewards);
    std::vector<double> out;
    out.reserve(rewards.size());
    for (double r : rewards) out.push_back(standardized(r, s));
    return out;
}

SubgroupAdvantages global_only_advantages(const SubgroupRewards& subgroup_rewards) {
    check_subgroups(subgroup_rewards, 1);
    const RewardStats global = reward_stats(flatten(subgroup_rewards));
    SubgroupAdvantages out(subgroup_rewards.size());
    for (std::size_t l = 0; l < subgroup_rewards.size(); ++l) {
        out[l].reserve(subgroup_rewards[l].size());
        for (double r : subgroup_rewards[l]) out[l].push_back(standardized(r, global));
    }
    return out;
}

SubgroupAdvantages eis_advantages(const SubgroupRewards& subgroup_rewards) {
    check_subgroups(subgroup_rewards, 2);
    const RewardStats global = reward_stats(flatten(subgroup_rewards));
    SubgroupAdvantages out(subgroup_rewards.size());
    for (std::size_t l = 0; l < subgroup_rewards.size(); ++l) {
        const RewardStats local = reward_stats(subgroup_rewards[l]);
        out[l].reserve(subgroup_rewards[l].size());
        for (double r : subgroup_rewards[l]) out[l].push_back(standardized(r, global) + standardized(r, local));
    }
    return out;
}

}  // namespace eisgrpo
