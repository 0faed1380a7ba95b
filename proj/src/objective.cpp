#include "eisgrpo/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eisgrpo/errors.hpp"

namespace eisgrpo {

void ObjectiveConfig::validate() const {
    if (!(clip_epsilon > 0.0)) throw ConfigError("objective.clip_epsilon must be > 0");
    if (!(kl_beta >= 0.0)) throw ConfigError("objective.kl_beta must be >= 0");
}

double clip(double x, double epsilon) { return std::min(1.0 + epsilon, std::max(1.0 - epsilon, x)); }

GroupLossResult group_loss_and_grad(const PolicyParams& params, const PolicyParams& ref, const GroupBatch& batch,
                                    const ObjectiveConfig& cfg) {
    cfg.validate();
    if (!batch.has_advantages()) throw ContractError("group " + batch.sample_id + " has no advantages");
    const std::size_t group_size = batch.group_size();
    if (group_size == 0) throw ContractError("group " + batch.sample_id + " has no rollouts");

    GroupLossResult res;
    res.grad = ParamGrad(params.shape);
    const double inv_g = 1.0 / static_cast<double>(group_size);
    std::size_t clipped = 0;
    double kl_sum = 0.0;
    std::vector<double> coeffs;
    std::vector<double> kl_coeffs;
    std::vector<double> dh(params.shape.hidden);

    for (std::size_t l = 0; l < batch.subgroups.size(); ++l) {
        const auto& subgroup = batch.subgroups[l];
        if (subgroup.empty()) continue;
        // Every rollout in a subgroup is conditioned on the same transformed
        // instance, so the encoder runs once per subgroup.
        const InstancePtr& inst = subgroup.front().instance;
        const auto h = encode(params, inst->features);
        const auto rh = encode(ref, inst->features);
        std::fill(dh.begin(), dh.end(), 0.0);

        for (std::size_t i = 0; i < subgroup.size(); ++i) {
            const Rollout& ro = subgroup[i];
            if (ro.instance != inst && ro.instance->features != inst->features) {
                throw ContractError("group " + batch.sample_id + " subgroup " + std::to_string(l) +
                                    " mixes instances");
            }
            if (ro.old_logprobs.size() != ro.tokens.size()) {
                throw ContractError("rollout " + batch.sample_id + "/" + std::to_string(l) + "/" +
                                    std::to_string(i) + " is missing behavior log-probabilities");
            }
            const double adv = batch.advantages[l][i];
            const SequenceTrace tr = trace_sequence(params, ref, h, rh, ro.tokens);
            const std::size_t n = tr.steps.size();
            const double w = inv_g / static_cast<double>(n);
            coeffs.assign(n, 0.0);
            kl_coeffs.assign(n, w * cfg.kl_beta);
            double term = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                const double ratio = std::exp(tr.logprob(t) - ro.old_logprobs[t]);
                const double unclipped = ratio * adv;
                double surrogate = unclipped;
                bool use_unclipped = true;
                if (cfg.clip_enabled) {
                    const double clipped_val = clip(ratio, cfg.clip_epsilon) * adv;
                    if (clipped_val < unclipped) {
                        surrogate = clipped_val;
                        use_unclipped = false;
                    }
                }
                // d/dθ of -(w · r_t Â) = -(w · r_t Â) · d log π(o_t).
                if (use_unclipped) {
                    coeffs[t] = -w * unclipped;
                } else {
                    ++clipped;
                }
                term += surrogate - cfg.kl_beta * tr.steps[t].kl;
                kl_sum += tr.steps[t].kl;
            }
            const double contrib = -w * term;
            if (!std::isfinite(contrib)) {
                throw NumericError("non-finite loss term in rollout " + batch.sample_id + "/" + std::to_string(l) +
                                   "/" + std::to_string(i));
            }
            res.loss += contrib;
            res.tokens += n;
            accumulate_head_grad(params, h, tr, coeffs, kl_coeffs, res.grad, dh);
        }
        accumulate_encoder_grad(inst->features, h, dh, res.grad);
    }
    if (!all_finite(res.grad.values)) throw NumericError("non-finite gradient in group " + batch.sample_id);
    res.mean_kl = res.tokens ? kl_sum / static_cast<double>(res.tokens) : 0.0;
    res.clipped_fraction = res.tokens ? static_cast<double>(clipped) / static_cast<double>(res.tokens) : 0.0;
    return res;
}

}  // namespace eisgrpo
