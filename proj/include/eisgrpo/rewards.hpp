#pragma once

#include <span>

#include "eisgrpo/core.hpp"
#include "eisgrpo/vocab.hpp"

namespace eisgrpo {

enum class Verdict { A, B, Unparseable };

// Well-formed outputs match THINK* (VA | VB) EOS with nothing after EOS.
Verdict parse_verdict(std::span<const Token> tokens);

[[nodiscard]] bool well_formed(std::span<const Token> tokens);

inline constexpr double kFormatRewardGood = 0.5;
inline constexpr double kFormatRewardBad = -0.5;

double format_reward(std::span<const Token> tokens);
double judgment_reward(std::span<const Token> tokens, Label gold);

struct RewardBreakdown {
    double judgment = 0.0;
    double format = 0.0;
    double total = 0.0;
};

RewardBreakdown score_output(std::span<const Token> tokens, Label gold);

/// judgment + format; always one of -0.5, 0.5, 1.5.
double total_reward(std::span<const Token> tokens, Label gold);

}  // namespace eisgrpo
