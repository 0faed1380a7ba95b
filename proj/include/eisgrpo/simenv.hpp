#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eisgrpo/core.hpp"
#include "eisgrpo/rng.hpp"

namespace eisgrpo {

struct EnvConfig {
    std::size_t d_q = 4;
    std::size_t d_r = 4;
    double quality_gap = 1.0;
    double noise_sigma = 0.5;
    double p_first = 0.8;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Surrogate answer lengths: round(exp(N(log_mean, log_sigma))), at least 1.
struct LengthProfile {
    double log_mean = 5.0;
    double log_sigma = 0.6;
};

struct AnswererSpec {
    double skill = 0.5;
    LengthProfile length_profile;

    void validate() const;
};

/// Response features are quality * e_0 + noise_sigma * N(0, I): the first
/// response coordinate is the quality axis.
std::vector<double> embed_response(double quality, const EnvConfig& cfg, Rng& rng);

/// Draws one pair: the better response sits quality_gap / 2 above a shared
/// base quality and the worse one quality_gap / 2 below.
PairwiseSample gen_sample(Rng& rng, const EnvConfig& cfg, const std::string& id = "s0");

struct Question {
    std::string id;
    std::vector<double> x;
    double difficulty = 0.0;  // shifts every answerer's log-odds of success down
};

std::vector<Question> gen_questions(std::size_t count, const EnvConfig& cfg, const std::string& prefix = "q");

/// One drawn answer inside the pairing pipeline.
struct Answer {
    bool correct = false;
    int length = 1;
};

/// Index pair (correct_index, incorrect_index) minimizing the length gap,
/// ties broken by the lexicographically smallest index pair. Returns
/// nothing when either outcome class is empty.
struct PairChoice {
    std::size_t correct_index = 0;
    std::size_t incorrect_index = 0;
    int length_gap = 0;
};
std::optional<PairChoice> select_length_matched(std::span<const Answer> answers);

/// For each question draws n answers (answer k comes from answerer k mod
/// pool size), drops questions whose outcomes are all equal, and keeps the
/// length-matched correct/incorrect pair. Output order follows question
/// order and is independent of `threads`.
std::vector<PairwiseSample> build_pairs(std::span<const Question> questions, std::span<const AnswererSpec> answerers,
                                        std::size_t n, const EnvConfig& cfg, unsigned threads = 1);

std::vector<AnswererSpec> default_answerer_pool();

/// Emits each sample in one ordering, better-first with probability p_first,
/// or both orderings when `duplicate` is set.
std::vector<PresentedInstance> export_biased_single_ordering(std::span<const PairwiseSample> samples, double p_first,
                                                             Rng& rng, bool duplicate = false);

}  // namespace eisgrpo
