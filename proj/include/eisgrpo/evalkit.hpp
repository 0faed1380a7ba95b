#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "eisgrpo/core.hpp"
#include "eisgrpo/policy.hpp"
#include "eisgrpo/rewards.hpp"
#include "eisgrpo/rng.hpp"

namespace eisgrpo {

/// Verdicts as they appear in judge outputs. The toy policy never emits Tie;
/// external judges may.
enum class JudgeVerdict { A, B, Tie, Unparseable };

JudgeVerdict to_judge_verdict(Verdict v);
std::string to_string(JudgeVerdict v);
JudgeVerdict judge_verdict_from_string(const std::string& s);

struct PairResult {
    std::string sample_id;
    JudgeVerdict order1 = JudgeVerdict::Unparseable;
    JudgeVerdict order2 = JudgeVerdict::Unparseable;
    Label gold1 = Label::A;
    Label gold2 = Label::B;
};

/// Greedy decoding under both orderings.
PairResult judge_both_orders(const PolicyParams& params, const PairwiseSample& sample);
std::vector<PairResult> judge_all(const PolicyParams& params, std::span<const PairwiseSample> samples,
                                  unsigned threads = 1);

/// Fraction of pairs where the same substantive response is chosen in both
/// orders. Tie or Unparseable in either run counts as inconsistent.
double consistency(std::span<const PairResult> results);

/// Fraction of pairs judged correctly in both orders. A Tie counts as
/// correct when the other run is a correct non-tie verdict.
double consistent_accuracy(std::span<const PairResult> results);

/// Plain accuracy of one order (1 or 2); Tie and Unparseable are wrong.
double order_accuracy(std::span<const PairResult> results, int order);

/// Plurality over A/B votes after dropping Unparseable entries; exact ties
/// are broken uniformly at random from `rng`. All-Unparseable input returns
/// Unparseable.
Verdict majority_vote(std::span<const Verdict> verdicts, Rng& rng);

/// Inference-compute ratio (M_b T_b) / (M_p T_p) under the 2MT FLOP
/// approximation, rounded to nearest and floored at 1.
std::int64_t flop_ratio(double baseline_params, double baseline_tokens, double primary_params, double primary_tokens);

struct MetricsReport {
    std::size_t scored = 0;
    double consistency = 0.0;
    double consistent_accuracy = 0.0;
    double accuracy_order1 = 0.0;
    double accuracy_order2 = 0.0;
    std::vector<std::string> skipped;  // samples missing one of the orders
};

MetricsReport summarize(std::span<const PairResult> results);

/// Scores a judgments file: one JSON object per line with
/// {sample_id, order: 1|2, verdict: "A"|"B"|"Tie"|"Unparseable", gold: "A"|"B"}.
MetricsReport score_external(std::istream& in);
MetricsReport score_external_file(const std::string& path);

std::string report_json(const MetricsReport& r);
std::string report_table(const MetricsReport& r);

}  // namespace eisgrpo
