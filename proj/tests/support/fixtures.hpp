#pragma once

// Hand-built policies and samples shared by the unit and acceptance suites.

#include <string>
#include <vector>

#include "eisgrpo/core.hpp"
#include "eisgrpo/policy.hpp"
#include "eisgrpo/simenv.hpp"

namespace eisgrpo::testing {

inline double& head_w(PolicyParams& p, Token out, std::size_t input) {
    return p.head_weight()[code(out) * p.shape.head_inputs() + input];
}

/// Always emits [VA, EOS], whatever the input.
inline PolicyParams always_a_policy(const PolicyShape& shape) {
    PolicyParams p(shape);
    const std::size_t h = shape.hidden;
    head_w(p, Token::VerdictA, h + kBosSlot) = 10.0;
    head_w(p, Token::Eos, h + code(Token::VerdictA)) = 10.0;
    head_w(p, Token::Eos, h + code(Token::VerdictB)) = 10.0;
    return p;
}

/// Emits the slot whose quality coordinate (response feature 0) is larger,
/// then EOS. Exact on noiseless samples.
inline PolicyParams quality_policy(std::size_t d_q, std::size_t d_r, std::size_t hidden = 4) {
    const PolicyShape shape{d_q + 2 * d_r, hidden, 4};
    PolicyParams p(shape);
    auto w = p.encoder_weight();
    w[0 * shape.input_dim + d_q] = 5.0;
    w[0 * shape.input_dim + d_q + d_r] = -5.0;
    head_w(p, Token::VerdictA, 0) = 5.0;
    head_w(p, Token::VerdictB, 0) = -5.0;
    head_w(p, Token::VerdictA, hidden + kBosSlot) = 3.0;
    head_w(p, Token::VerdictB, hidden + kBosSlot) = 3.0;
    head_w(p, Token::Eos, hidden + code(Token::VerdictA)) = 50.0;
    head_w(p, Token::Eos, hidden + code(Token::VerdictB)) = 50.0;
    return p;
}

inline std::vector<PairwiseSample> noiseless_samples(std::size_t n, std::uint64_t seed, const std::string& prefix = "s") {
    EnvConfig cfg;
    cfg.noise_sigma = 0.0;
    Rng rng = make_stream(seed, "fixture-samples");
    std::vector<PairwiseSample> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(gen_sample(rng, cfg, prefix + std::to_string(i)));
    return out;
}

}  // namespace eisgrpo::testing
