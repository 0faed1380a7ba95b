#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "eisgrpo/core.hpp"
#include "eisgrpo/rng.hpp"
#include "eisgrpo/vocab.hpp"

namespace eisgrpo {

struct PolicyShape {
    std::size_t input_dim = 12;
    std::size_t hidden = 32;
    std::size_t max_len = 4;

    // Head input: hidden vector plus a one-hot of the previous token.
    [[nodiscard]] std::size_t head_inputs() const { return hidden + kVocabSize; }
    [[nodiscard]] std::size_t encoder_weight_size() const { return hidden * input_dim; }
    [[nodiscard]] std::size_t head_weight_size() const { return kVocabSize * head_inputs(); }
    [[nodiscard]] std::size_t param_count() const {
        return encoder_weight_size() + hidden + head_weight_size() + kVocabSize;
    }

    bool operator==(const PolicyShape&) const = default;
};

/// The previous-token slot fed to the head at step 1. EOS can never precede
/// another token inside a sequence, so its one-hot slot doubles as BOS.
inline constexpr std::size_t kBosSlot = code(Token::Eos);

/// Flat parameter storage in fixed order:
///   encoder weight (hidden x input_dim, row-major), encoder bias (hidden),
///   head weight (vocab x (hidden + vocab), row-major), head bias (vocab).
/// The same order is used in checkpoints.
template <typename Tag>
struct ParamVector {
    PolicyShape shape;
    std::vector<double> values;

    ParamVector() = default;
    explicit ParamVector(const PolicyShape& s) : shape(s), values(s.param_count(), 0.0) {}

    [[nodiscard]] std::span<double> encoder_weight() { return slice(0, shape.encoder_weight_size()); }
    [[nodiscard]] std::span<double> encoder_bias() { return slice(encoder_bias_offset(), shape.hidden); }
    [[nodiscard]] std::span<double> head_weight() { return slice(head_weight_offset(), shape.head_weight_size()); }
    [[nodiscard]] std::span<double> head_bias() { return slice(head_bias_offset(), kVocabSize); }
    [[nodiscard]] std::span<const double> encoder_weight() const { return slice(0, shape.encoder_weight_size()); }
    [[nodiscard]] std::span<const double> encoder_bias() const { return slice(encoder_bias_offset(), shape.hidden); }
    [[nodiscard]] std::span<const double> head_weight() const {
        return slice(head_weight_offset(), shape.head_weight_size());
    }
    [[nodiscard]] std::span<const double> head_bias() const { return slice(head_bias_offset(), kVocabSize); }

    bool operator==(const ParamVector&) const = default;

private:
    [[nodiscard]] std::size_t encoder_bias_offset() const { return shape.encoder_weight_size(); }
    [[nodiscard]] std::size_t head_weight_offset() const { return encoder_bias_offset() + shape.hidden; }
    [[nodiscard]] std::size_t head_bias_offset() const { return head_weight_offset() + shape.head_weight_size(); }
    std::span<double> slice(std::size_t off, std::size_t n) { return {values.data() + off, n}; }
    std::span<const double> slice(std::size_t off, std::size_t n) const { return {values.data() + off, n}; }
};

struct ParamsTag {};
struct GradTag {};
using PolicyParams = ParamVector<ParamsTag>;
using ParamGrad = ParamVector<GradTag>;

using TokenProbs = std::array<double, kVocabSize>;

/// Encoder weights ~ N(0, init_scale^2 / input_dim); head weights and all
/// biases zero, so the initial token distribution is uniform everywhere.
PolicyParams init_params(const PolicyShape& shape, std::uint64_t seed, double init_scale = 1.0);

[[nodiscard]] bool all_finite(std::span<const double> values);

/// tanh(W x + b) for the instance features.
std::vector<double> encode(const PolicyParams& params, std::span<const double> features);

/// Log-probabilities over the vocabulary at one decoding state.
TokenProbs step_logprobs(const PolicyParams& params, std::span<const double> hidden, std::size_t prev_slot);

/// Probability vector over the vocabulary after `prefix`. Throws
/// ContractError when the prefix already has max_len tokens.
TokenProbs token_distribution(const PolicyParams& params, const PresentedInstance& instance,
                              std::span<const Token> prefix);

/// Samples at temperature 1 until EOS or max_len and scores the result
/// against instance->gold.
Rollout sample_rollout(const PolicyParams& params, const InstancePtr& instance, Rng& rng);

/// Same as above with the encoder output precomputed for the instance.
Rollout sample_rollout(const PolicyParams& params, const InstancePtr& instance, std::span<const double> hidden,
                       Rng& rng);

/// Argmax decoding; ties go to the lowest token code.
std::vector<Token> greedy_decode(const PolicyParams& params, const PresentedInstance& instance);

std::vector<double> sequence_logprobs(const PolicyParams& params, const PresentedInstance& instance,
                                      std::span<const Token> tokens);

/// Exact KL(p || q) between two categorical distributions given as log-probs.
double categorical_kl(const TokenProbs& logp, const TokenProbs& logq);

/// Per-step quantities of one token sequence under the current and the
/// reference policy, kept so the gradient pass reuses the forward values.
struct SequenceTrace {
    struct Step {
        std::size_t prev_slot = kBosSlot;
        std::size_t token = 0;
        TokenProbs logp{};
        TokenProbs ref_logp{};
        double kl = 0.0;
    };
    std::vector<Step> steps;

    [[nodiscard]] double logprob(std::size_t t) const { return steps[t].logp[steps[t].token]; }
};

SequenceTrace trace_sequence(const PolicyParams& params, const PolicyParams& ref, std::span<const double> hidden,
                             std::span<const double> ref_hidden, std::span<const Token> tokens);

/// Adds d/dθ of Σ_t coeffs[t]·log π(o_t) + kl_coeffs[t]·KL_t to the head
/// parameters of `grad` and to `dhidden` (gradient w.r.t. the encoder output).
void accumulate_head_grad(const PolicyParams& params, std::span<const double> hidden, const SequenceTrace& trace,
                          std::span<const double> coeffs, std::span<const double> kl_coeffs, ParamGrad& grad,
                          std::span<double> dhidden);

/// Backpropagates `dhidden` through tanh and the encoder affine map.
void accumulate_encoder_grad(std::span<const double> features, std::span<const double> hidden,
                             std::span<const double> dhidden, ParamGrad& grad);

/// Exact gradient of Σ_t [coeffs_t · log π_θ(o_t|·) + kl_coeffs_t · KL_t(π_θ ∥ π_ref)].
ParamGrad weighted_objective_grad(const PolicyParams& params, const PresentedInstance& instance,
                                  std::span<const Token> tokens, std::span<const double> coeffs,
                                  std::span<const double> kl_coeffs, const PolicyParams& ref);

/// Value of the scalar differentiated by weighted_objective_grad.
double weighted_objective_value(const PolicyParams& params, const PresentedInstance& instance,
                                std::span<const Token> tokens, std::span<const double> coeffs,
                                std::span<const double> kl_coeffs, const PolicyParams& ref);

// Checkpoints: line 1 is a JSON header {d_in, h, L_max, vocab, seed, ...};
// lines 2..5 are JSON arrays holding encoder weight, encoder bias, head
// weight and head bias in that order.
struct CheckpointHeader {
    PolicyShape shape;
    std::uint64_t seed = 0;
    std::string extra_json = "{}";  // free-form object echoed under "extra"
};

void write_checkpoint(std::ostream& out, const PolicyParams& params, const CheckpointHeader& header);
PolicyParams read_checkpoint(std::istream& in, CheckpointHeader* header = nullptr);
void save_checkpoint(const std::string& path, const PolicyParams& params, const CheckpointHeader& header);
PolicyParams load_checkpoint(const std::string& path, CheckpointHeader* header = nullptr);

}  // namespace eisgrpo
