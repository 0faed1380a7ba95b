#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "eisgrpo/vocab.hpp"

namespace eisgrpo {

/// Gold or predicted slot for a two-response comparison.
enum class Label { A, B };

constexpr char label_char(Label l) { return l == Label::A ? 'A' : 'B'; }
constexpr Label other(Label l) { return l == Label::A ? Label::B : Label::A; }

/// One pairwise judgment problem. `y1` is always the better response.
struct PairwiseSample {
    std::string id;
    std::vector<double> x;
    std::vector<double> y1;
    std::vector<double> y2;
    int len1 = 1;
    int len2 = 1;
    std::string source;
};

/// A sample shown under one ordering. `features` is x, then slot A, then slot B.
struct PresentedInstance {
    std::string sample_id;
    int ell = 1;
    std::size_t question_dim = 0;
    std::size_t response_dim = 0;
    std::vector<double> features;
    Label gold = Label::A;

    [[nodiscard]] std::span<const double> question() const { return {features.data(), question_dim}; }
    [[nodiscard]] std::span<const double> slot_a() const {
        return {features.data() + question_dim, response_dim};
    }
    [[nodiscard]] std::span<const double> slot_b() const {
        return {features.data() + question_dim + response_dim, response_dim};
    }
};

using InstancePtr = std::shared_ptr<const PresentedInstance>;

struct Rollout {
    InstancePtr instance;
    std::vector<Token> tokens;
    std::vector<double> old_logprobs;
    double r_judgment = 0.0;
    double r_format = 0.0;
    double reward = 0.0;
};

/// All rollouts for one question, split into L subgroups. `advantages` has
/// the same shape as `subgroups` once filled.
struct GroupBatch {
    std::string sample_id;
    std::vector<std::vector<Rollout>> subgroups;
    std::vector<std::vector<double>> advantages;

    [[nodiscard]] std::size_t group_size() const;
    [[nodiscard]] bool has_advantages() const;
    [[nodiscard]] std::vector<std::vector<double>> rewards() const;
};

/// Number of equivalent orderings for the pairwise task.
inline constexpr int kPairOrderings = 2;

/// ell = 1 presents (A = y1, B = y2) with gold A; ell = 2 presents
/// (A = y2, B = y1) with gold B. Throws InvalidTransform otherwise.
PresentedInstance apply_transform(const PairwiseSample& sample, int ell);

/// Swaps the two response slots and the gold label.
PresentedInstance swap_order(const PresentedInstance& instance);

/// [apply_transform(s, 1), apply_transform(s, 2)].
std::vector<PresentedInstance> make_orderings(const PairwiseSample& sample);

// Multiple-choice reordering, the general form of the answer-remapping
// transform.
struct MultipleChoiceSample {
    std::string question;
    std::vector<std::string> options;
    std::size_t correct = 0;
};

struct MultipleChoiceInstance {
    std::string question;
    std::vector<std::string> options;
    std::size_t gold = 0;

    [[nodiscard]] char gold_letter() const { return static_cast<char>('A' + gold); }
};

/// New slot k shows old option perm[k]; gold follows the correct option.
/// Throws InvalidTransform when perm is not a bijection on the slots.
MultipleChoiceInstance permute_choices(const MultipleChoiceSample& sample, std::span<const std::size_t> perm);

}  // namespace eisgrpo
