#pragma once

#include "eisgrpo/core.hpp"
#include "eisgrpo/policy.hpp"

namespace eisgrpo {

struct ObjectiveConfig {
    double clip_epsilon = 0.2;
    double kl_beta = 1e-4;
    // Off only for diagnostics: evaluates the plain ratio-weighted surrogate.
    bool clip_enabled = true;

    void validate() const;
};

/// min(1 + epsilon, max(1 - epsilon, x)).
double clip(double x, double epsilon);

struct GroupLossResult {
    double loss = 0.0;
    ParamGrad grad;
    double mean_kl = 0.0;         // per-token KL to the reference, averaged over tokens
    double clipped_fraction = 0.0;  // tokens whose clipped branch was realized
    std::size_t tokens = 0;
};

/// Clipped surrogate with KL penalty for one group:
///   loss = -(1/G) Σ_ℓ Σ_i (1/|o|) Σ_t [min(r_t Â, clip(r_t) Â) - β KL_t(π_θ ∥ π_ref)]
/// with r_t = exp(log π_θ(o_t | T_ℓ(q), o_<t) - old_logprob_t). The gradient
/// follows the realized branch of the min; π_ref is held constant.
GroupLossResult group_loss_and_grad(const PolicyParams& params, const PolicyParams& ref, const GroupBatch& batch,
                                    const ObjectiveConfig& cfg);

}  // namespace eisgrpo
