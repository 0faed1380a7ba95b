#include "eisgrpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "eisgrpo/errors.hpp"
#include "eisgrpo/rewards.hpp"

namespace eisgrpo {

namespace {

TokenProbs log_softmax(const TokenProbs& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    const double lse = m + std::log(s);
    TokenProbs out{};
    for (std::size_t k = 0; k < kVocabSize; ++k) out[k] = z[k] - lse;
    return out;
}

void check_features(const PolicyParams& params, std::span<const double> features) {
    if (features.size() != params.shape.input_dim) {
        throw ContractError("instance has " + std::to_string(features.size()) + " features, policy expects " +
                            std::to_string(params.shape.input_dim));
    }
}

void check_length(const PolicyParams& params, std::size_t n) {
    if (n == 0 || n > params.shape.max_len) {
        throw ContractError("token sequence length " + std::to_string(n) + " outside [1, " +
                            std::to_string(params.shape.max_len) + "]");
    }
}

std::size_t sample_categorical(const TokenProbs& logp, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < kVocabSize; ++k) {
        cum += std::exp(logp[k]);
        if (u < cum) return k;
    }
    return kVocabSize - 1;
}

}  // namespace

PolicyParams init_params(const PolicyShape& shape, std::uint64_t seed, double init_scale) {
    PolicyParams p(shape);
    Rng rng = make_stream(seed, "policy-init");
    std::normal_distribution<double> enc(0.0, init_scale / std::sqrt(static_cast<double>(shape.input_dim)));
    for (double& w : p.encoder_weight()) w = enc(rng);
    // Head starts at zero: the untrained judge emits uniformly random tokens.
    return p;
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> encode(const PolicyParams& params, std::span<const double> features) {
    check_features(params, features);
    const auto& s = params.shape;
    const auto w = params.encoder_weight();
    const auto b = params.encoder_bias();
    std::vector<double> h(s.hidden);
    for (std::size_t i = 0; i < s.hidden; ++i) {
        double a = b[i];
        const double* row = w.data() + i * s.input_dim;
        for (std::size_t j = 0; j < s.input_dim; ++j) a += row[j] * features[j];
        h[i] = std::tanh(a);
    }
    return h;
}

TokenProbs step_logprobs(const PolicyParams& params, std::span<const double> hidden, std::size_t prev_slot) {
    const auto& s = params.shape;
    const auto w = params.head_weight();
    const auto b = params.head_bias();
    const std::size_t width = s.head_inputs();
    TokenProbs z{};
    for (std::size_t k = 0; k < kVocabSize; ++k) {
        const double* row = w.data() + k * width;
        double a = b[k];
        for (std::size_t j = 0; j < s.hidden; ++j) a += row[j] * hidden[j];
        a += row[s.hidden + prev_slot];
        z[k] = a;
    }
    return log_softmax(z);
}

TokenProbs token_distribution(const PolicyParams& params, const PresentedInstance& instance,
                              std::span<const Token> prefix) {
    if (prefix.size() >= params.shape.max_len) {
        throw ContractError("prefix of length " + std::to_string(prefix.size()) + " leaves no room below max_len " +
                            std::to_string(params.shape.max_len));
    }
    const auto h = encode(params, instance.features);
    const std::size_t prev = prefix.empty() ? kBosSlot : code(prefix.back());
    TokenProbs p = step_logprobs(params, h, prev);
    for (double& v : p) v = std::exp(v);
    return p;
}

Rollout sample_rollout(const PolicyParams& params, const InstancePtr& instance, Rng& rng) {
    const auto h = encode(params, instance->features);
    return sample_rollout(params, instance, h, rng);
}

Rollout sample_rollout(const PolicyParams& params, const InstancePtr& instance, std::span<const double> hidden,
                       Rng& rng) {
    Rollout r;
    r.instance = instance;
    std::size_t prev = kBosSlot;
    while (r.tokens.size() < params.shape.max_len) {
        const TokenProbs lp = step_logprobs(params, hidden, prev);
        const std::size_t k = sample_categorical(lp, rng);
        r.tokens.push_back(static_cast<Token>(k));
        r.old_logprobs.push_back(lp[k]);
        prev = k;
        if (static_cast<Token>(k) == Token::Eos) break;
    }
    const RewardBreakdown rb = score_output(r.tokens, instance->gold);
    r.r_judgment = rb.judgment;
    r.r_format = rb.format;
    r.reward = rb.total;
    return r;
}

std::vector<Token> greedy_decode(const PolicyParams& params, const PresentedInstance& instance) {
    const auto h = encode(params, instance.features);
    std::vector<Token> out;
    std::size_t prev = kBosSlot;
    while (out.size() < params.shape.max_len) {
        const TokenProbs lp = step_logprobs(params, h, prev);
        const auto k = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
        out.push_back(static_cast<Token>(k));
        prev = k;
        if (static_cast<Token>(k) == Token::Eos) break;
    }
    return out;
}

std::vector<double> sequence_logprobs(const PolicyParams& params, const PresentedInstance& instance,
                                      std::span<const Token> tokens) {
    check_length(params, tokens.size());
    const auto h = encode(params, instance.features);
    std::vector<double> out;
    out.reserve(tokens.size());
    std::size_t prev = kBosSlot;
    for (Token t : tokens) {
        const TokenProbs lp = step_logprobs(params, h, prev);
        out.push_back(lp[code(t)]);
        prev = code(t);
    }
    return out;
}

double categorical_kl(const TokenProbs& logp, const TokenProbs& logq) {
    double kl = 0.0;
    for (std::size_t k = 0; k < kVocabSize; ++k) kl += std::exp(logp[k]) * (logp[k] - logq[k]);
    return kl;
}

SequenceTrace trace_sequence(const PolicyParams& params, const PolicyParams& ref, std::span<const double> hidden,
                             std::span<const double> ref_hidden, std::span<const Token> tokens) {
    check_length(params, tokens.size());
    SequenceTrace tr;
    tr.steps.reserve(tokens.size());
    std::size_t prev = kBosSlot;
    for (Token t : tokens) {
        SequenceTrace::Step st;
        st.prev_slot = prev;
        st.token = code(t);
        st.logp = step_logprobs(params, hidden, prev);
        st.ref_logp = step_logprobs(ref, ref_hidden, prev);
        st.kl = categorical_kl(st.logp, st.ref_logp);
        tr.steps.push_back(st);
        prev = code(t);
    }
    return tr;
}

void accumulate_head_grad(const PolicyParams& params, std::span<const double> hidden, const SequenceTrace& trace,
                          std::span<const double> coeffs, std::span<const double> kl_coeffs, ParamGrad& grad,
                          std::span<double> dhidden) {
    const std::size_t n = trace.steps.size();
    if (coeffs.size() != n || kl_coeffs.size() != n) {
        throw ContractError("coefficient lists must have one entry per token");
    }
    const auto& s = params.shape;
    const std::size_t width = s.head_inputs();
    const auto w = params.head_weight();
    auto gw = grad.head_weight();
    auto gb = grad.head_bias();
    for (std::size_t t = 0; t < n; ++t) {
        const auto& st = trace.steps[t];
        if (coeffs[t] == 0.0 && kl_coeffs[t] == 0.0) continue;
        // dz_k of c·log p_o + k·KL(p || q).
        TokenProbs dz{};
        for (std::size_t k = 0; k < kVocabSize; ++k) {
            const double p = std::exp(st.logp[k]);
            dz[k] = coeffs[t] * ((k == st.token ? 1.0 : 0.0) - p) +
                    kl_coeffs[t] * p * (st.logp[k] - st.ref_logp[k] - st.kl);
        }
        for (std::size_t k = 0; k < kVocabSize; ++k) {
            if (dz[k] == 0.0) continue;
            double* grow = gw.data() + k * width;
            const double* wrow = w.data() + k * width;
            for (std::size_t j = 0; j < s.hidden; ++j) {
                grow[j] += dz[k] * hidden[j];
                dhidden[j] += dz[k] * wrow[j];
            }
            grow[s.hidden + st.prev_slot] += dz[k];
            gb[k] += dz[k];
        }
    }
}

void accumulate_encoder_grad(std::span<const double> features, std::span<const double> hidden,
                             std::span<const double> dhidden, ParamGrad& grad) {
    const std::size_t in = features.size();
    auto gw = grad.encoder_weight();
    auto gb = grad.encoder_bias();
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        const double da = dhidden[i] * (1.0 - hidden[i] * hidden[i]);
        if (da == 0.0) continue;
        gb[i] += da;
        double* row = gw.data() + i * in;
        for (std::size_t j = 0; j < in; ++j) row[j] += da * features[j];
    }
}

ParamGrad weighted_objective_grad(const PolicyParams& params, const PresentedInstance& instance,
                                  std::span<const Token> tokens, std::span<const double> coeffs,
                                  std::span<const double> kl_coeffs, const PolicyParams& ref) {
    if (coeffs.size() != tokens.size() || kl_coeffs.size() != tokens.size()) {
        throw ContractError("coefficient lists must have one entry per token");
    }
    const auto h = encode(params, instance.features);
    const auto rh = encode(ref, instance.features);
    const SequenceTrace tr = trace_sequence(params, ref, h, rh, tokens);
    ParamGrad g(params.shape);
    std::vector<double> dh(params.shape.hidden, 0.0);
    accumulate_head_grad(params, h, tr, coeffs, kl_coeffs, g, dh);
    accumulate_encoder_grad(instance.features, h, dh, g);
    return g;
}

double weighted_objective_value(const PolicyParams& params, const PresentedInstance& instance,
                                std::span<const Token> tokens, std::span<const double> coeffs,
                                std::span<const double> kl_coeffs, const PolicyParams& ref) {
    if (coeffs.size() != tokens.size() || kl_coeffs.size() != tokens.size()) {
        throw ContractError("coefficient lists must have one entry per token");
    }
    const auto h = encode(params, instance.features);
    const auto rh = encode(ref, instance.features);
    const SequenceTrace tr = trace_sequence(params, ref, h, rh, tokens);
    double v = 0.0;
    for (std::size_t t = 0; t < tr.steps.size(); ++t) v += coeffs[t] * tr.logprob(t) + kl_coeffs[t] * tr.steps[t].kl;
    return v;
}

void write_checkpoint(std::ostream& out, const PolicyParams& params, const CheckpointHeader& header) {
    using nlohmann::json;
    json vocab = json::object();
    for (Token t : kAllTokens) vocab[std::string(token_name(t))] = code(t);
    json h = {{"format", "eisgrpo-policy-v1"},
              {"d_in", params.shape.input_dim},
              {"h", params.shape.hidden},
              {"L_max", params.shape.max_len},
              {"vocab", vocab},
              {"seed", header.seed},
              {"order", {"encoder_weight", "encoder_bias", "head_weight", "head_bias"}},
              {"extra", json::parse(header.extra_json)}};
    out << h.dump() << '\n';
    const auto dump = [&](std::span<const double> v) { out << json(std::vector<double>(v.begin(), v.end())).dump() << '\n'; };
    dump(params.encoder_weight());
    dump(params.encoder_bias());
    dump(params.head_weight());
    dump(params.head_bias());
}

PolicyParams read_checkpoint(std::istream& in, CheckpointHeader* header) {
    using nlohmann::json;
    std::string line;
    if (!std::getline(in, line)) throw IoError("checkpoint is empty");
    json h;
    try {
        h = json::parse(line);
    } catch (const json::exception& e) {
        throw IoError(std::string("bad checkpoint header: ") + e.what());
    }
    PolicyShape shape;
    shape.input_dim = h.at("d_in").get<std::size_t>();
    shape.hidden = h.at("h").get<std::size_t>();
    shape.max_len = h.at("L_max").get<std::size_t>();
    for (Token t : kAllTokens) {
        if (h.at("vocab").at(std::string(token_name(t))).get<std::size_t>() != code(t)) {
            throw IoError("checkpoint vocabulary codes do not match");
        }
    }
    PolicyParams p(shape);
    const auto read_into = [&](std::span<double> dst, const char* what) {
        if (!std::getline(in, line)) throw IoError(std::string("checkpoint truncated before ") + what);
        const auto v = json::parse(line).get<std::vector<double>>();
        if (v.size() != dst.size()) throw IoError(std::string("checkpoint array size mismatch for ") + what);
        std::copy(v.begin(), v.end(), dst.begin());
    };
    read_into(p.encoder_weight(), "encoder_weight");
    read_into(p.encoder_bias(), "encoder_bias");
    read_into(p.head_weight(), "head_weight");
    read_into(p.head_bias(), "head_bias");
    if (header) {
        header->shape = shape;
        header->seed = h.value("seed", std::uint64_t{0});
        header->extra_json = h.contains("extra") ? h["extra"].dump() : "{}";
    }
    return p;
}

void save_checkpoint(const std::string& path, const PolicyParams& params, const CheckpointHeader& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path);
    write_checkpoint(out, params, header);
    if (!out) throw IoError("failed writing checkpoint " + path);
}

PolicyParams load_checkpoint(const std::string& path, CheckpointHeader* header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    return read_checkpoint(in, header);
}

}  // namespace eisgrpo
