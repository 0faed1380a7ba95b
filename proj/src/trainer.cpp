#include "eisgrpo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "eisgrpo/advantage.hpp"
#include "eisgrpo/errors.hpp"
#include "eisgrpo/evalkit.hpp"
#include "eisgrpo/parallel.hpp"

namespace eisgrpo {

using nlohmann::json;

std::string to_string(TrainMode m) {
    switch (m) {
        case TrainMode::Eis: return "eis";
        case TrainMode::GrpoBalanced: return "grpo_balanced";
        case TrainMode::GrpoDuplicated: return "grpo_duplicated";
        case TrainMode::GlobalOnly: return "global_only";
    }
    return "?";
}

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "eis") return TrainMode::Eis;
    if (s == "grpo_balanced") return TrainMode::GrpoBalanced;
    if (s == "grpo_duplicated") return TrainMode::GrpoDuplicated;
    if (s == "global_only") return TrainMode::GlobalOnly;
    throw ConfigError("train.mode must be one of eis, grpo_balanced, grpo_duplicated, global_only; got \"" + s +
                      "\"");
}

namespace {

bool single_ordering(TrainMode m) { return m == TrainMode::GrpoBalanced || m == TrainMode::GrpoDuplicated; }

}  // namespace

std::size_t TrainConfig::effective_L() const { return single_ordering(mode) ? 1 : L; }

void TrainConfig::validate() const {
    const std::size_t l = effective_L();
    if (l < 1 || l > static_cast<std::size_t>(kPairOrderings)) {
        throw ConfigError("train.L must be 1 or 2 for the pairwise task");
    }
    if (G < 2) throw ConfigError("train.G must be >= 2");
    if (G % l != 0) throw ConfigError("train.G must be divisible by train.L");
    if (mode == TrainMode::Eis && G / l < 2) throw ConfigError("eis mode needs at least 2 rollouts per subgroup");
    if (rollout_batch == 0 || train_batch == 0) throw ConfigError("train.rollout_batch and train.train_batch must be > 0");
    if (rollout_batch % train_batch != 0) throw ConfigError("train.train_batch must divide train.rollout_batch");
    if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0");
    if (eval_interval == 0) throw ConfigError("train.eval_interval must be > 0");
    if (hidden == 0) throw ConfigError("train.hidden must be > 0");
    if (max_len < 2) throw ConfigError("train.max_len must be >= 2 to fit a verdict and EOS");
    if (!(init_scale >= 0.0)) throw ConfigError("train.init_scale must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0)) {
        throw ConfigError("Adam betas must lie in [0, 1) and eps must be > 0");
    }
    objective.validate();
}

TrainData TrainData::from_samples(std::vector<PairwiseSample> samples) {
    TrainData d;
    d.recorded_ell.assign(samples.size(), 1);
    d.samples = std::move(samples);
    return d;
}

TrainData TrainData::from_records(std::vector<PairwiseSample> samples, std::span<const PresentedInstance> records) {
    TrainData d = from_samples(std::move(samples));
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < d.samples.size(); ++i) index.emplace(d.samples[i].id, i);
    for (const auto& r : records) {
        auto it = index.find(r.sample_id);
        if (it == index.end()) throw ContractError("recorded ordering for unknown sample " + r.sample_id);
        if (r.ell != 1 && r.ell != 2) throw InvalidTransform("recorded ordering must be 1 or 2");
        d.recorded_ell[it->second] = r.ell;
    }
    return d;
}

std::string metrics_json_line(const MetricsRecord& r) {
    json j = {{"step", r.step},
              {"mean_reward", r.mean_reward ? json(*r.mean_reward) : json(nullptr)},
              {"mean_output_length", r.mean_output_length ? json(*r.mean_output_length) : json(nullptr)},
              {"mean_kl_to_ref", r.mean_kl_to_ref},
              {"probe_consistency", r.probe_consistency},
              {"probe_consistent_accuracy", r.probe_consistent_accuracy}};
    return j.dump();
}

std::vector<InstancePtr> subgroup_instances(const PairwiseSample& sample, TrainMode mode, std::size_t L,
                                            int recorded_ell) {
    if (single_ordering(mode) || L == 1) {
        return {std::make_shared<const PresentedInstance>(apply_transform(sample, recorded_ell))};
    }
    if (L != 2) throw ConfigError("pairwise task supports L = 1 or L = 2");
    std::vector<InstancePtr> out;
    for (auto& inst : make_orderings(sample)) out.push_back(std::make_shared<const PresentedInstance>(std::move(inst)));
    return out;
}

GroupBatch collect_group(const PolicyParams& params_old, std::span<const InstancePtr> instances, std::size_t G,
                         const StreamKey& key) {
    if (instances.empty() || G % instances.size() != 0) {
        throw ContractError("group size must be a positive multiple of the subgroup count");
    }
    const std::size_t per = G / instances.size();
    GroupBatch batch;
    batch.sample_id = instances.front()->sample_id;
    batch.subgroups.resize(instances.size());
    for (std::size_t l = 0; l < instances.size(); ++l) {
        const auto h = encode(params_old, instances[l]->features);
        auto& sg = batch.subgroups[l];
        sg.reserve(per);
        for (std::size_t i = 0; i < per; ++i) {
            Rng rng = key.with({l, i}).make();
            sg.push_back(sample_rollout(params_old, instances[l], h, rng));
        }
    }
    return batch;
}

GroupBatch collect_group(const PolicyParams& params_old, const PairwiseSample& sample, const TrainConfig& cfg,
                         const StreamKey& key, int recorded_ell) {
    const auto insts = subgroup_instances(sample, cfg.mode, cfg.effective_L(), recorded_ell);
    return collect_group(params_old, insts, cfg.G, key);
}

void fill_advantages(GroupBatch& batch, TrainMode mode) {
    const auto rewards = batch.rewards();
    switch (mode) {
        case TrainMode::Eis: batch.advantages = eis_advantages(rewards); break;
        case TrainMode::GlobalOnly: batch.advantages = global_only_advantages(rewards); break;
        case TrainMode::GrpoBalanced:
        case TrainMode::GrpoDuplicated:
            batch.advantages.clear();
            for (const auto& sg : rewards) batch.advantages.push_back(grpo_advantages(sg));
            break;
    }
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw ContractError("Adam size mismatch");
    ++t_;
    beta1_pow_ *= beta1_;
    beta2_pow_ *= beta2_;
    const double c1 = 1.0 - beta1_pow_;
    const double c2 = 1.0 - beta2_pow_;
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

GroupLossResult minibatch_loss_and_grad(const PolicyParams& params, const PolicyParams& ref,
                                        std::span<const GroupBatch> groups, const ObjectiveConfig& cfg,
                                        unsigned threads) {
    if (groups.empty()) throw ContractError("empty minibatch");
    std::vector<GroupLossResult> parts(groups.size());
    parallel_for(groups.size(), threads,
                 [&](std::size_t i) { parts[i] = group_loss_and_grad(params, ref, groups[i], cfg); });
    GroupLossResult total;
    total.grad = ParamGrad(params.shape);
    double kl_weighted = 0.0;
    double clip_weighted = 0.0;
    const double inv = 1.0 / static_cast<double>(groups.size());
    for (const auto& p : parts) {
        total.loss += p.loss;
        for (std::size_t k = 0; k < total.grad.values.size(); ++k) total.grad.values[k] += p.grad.values[k];
        kl_weighted += p.mean_kl * static_cast<double>(p.tokens);
        clip_weighted += p.clipped_fraction * static_cast<double>(p.tokens);
        total.tokens += p.tokens;
    }
    total.loss *= inv;
    for (double& g : total.grad.values) g *= inv;
    if (total.tokens) {
        total.mean_kl = kl_weighted / static_cast<double>(total.tokens);
        total.clipped_fraction = clip_weighted / static_cast<double>(total.tokens);
    }
    return total;
}

namespace {

struct Record {
    std::size_t sample = 0;
    int ell = 1;
};

std::vector<Record> build_records(const TrainConfig& cfg, const TrainData& data) {
    std::vector<Record> recs;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        if (cfg.mode == TrainMode::GrpoDuplicated) {
            recs.push_back({i, 1});
            recs.push_back({i, 2});
        } else {
            recs.push_back({i, data.recorded_ell[i]});
        }
    }
    return recs;
}

std::string dump_groups(std::span<const GroupBatch> groups, std::size_t step, const std::string& what) {
    json j;
    j["step"] = step;
    j["error"] = what;
    j["groups"] = json::array();
    for (const auto& g : groups) {
        json jg;
        jg["sample_id"] = g.sample_id;
        jg["rewards"] = g.rewards();
        jg["advantages"] = g.advantages;
        json ro = json::array();
        for (const auto& sg : g.subgroups) {
            json jsg = json::array();
            for (const auto& r : sg) {
                std::vector<int> toks;
                for (Token t : r.tokens) toks.push_back(static_cast<int>(code(t)));
                jsg.push_back({{"tokens", toks}, {"old_logprobs", r.old_logprobs}});
            }
            ro.push_back(jsg);
        }
        jg["rollouts"] = ro;
        j["groups"].push_back(jg);
    }
    return j.dump(2);
}

MetricsRecord probe(const PolicyParams& params, std::span<const PairwiseSample> eval_samples, unsigned threads) {
    MetricsRecord m;
    if (eval_samples.empty()) return m;
    const auto results = judge_all(params, eval_samples, threads);
    m.probe_consistency = consistency(results);
    m.probe_consistent_accuracy = consistent_accuracy(results);
    return m;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const TrainData& train_data, std::span<const PairwiseSample> eval_samples,
                  unsigned threads, const TrainHooks& hooks, const std::optional<PolicyParams>& init) {
    cfg.validate();
    if (train_data.samples.empty()) throw ContractError("training dataset is empty");
    if (train_data.recorded_ell.size() != train_data.samples.size()) {
        throw ContractError("recorded orderings do not match the sample count");
    }
    const auto& first = train_data.samples.front();
    PolicyShape shape{first.x.size() + 2 * first.y1.size(), cfg.hidden, cfg.max_len};

    TrainResult result;
    if (init) {
        if (init->shape != shape) throw ConfigError("initial checkpoint shape does not match the dataset/config");
        result.initial = *init;
    } else {
        result.initial = init_params(shape, cfg.seed, cfg.init_scale);
    }
    PolicyParams params = result.initial;
    const PolicyParams ref = result.initial;  // reference policy stays at the step-0 snapshot
    Adam adam(params.values.size(), cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

    const auto records = build_records(cfg, train_data);
    std::vector<std::vector<InstancePtr>> record_instances(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        record_instances[r] = subgroup_instances(train_data.samples[records[r].sample], cfg.mode, cfg.effective_L(),
                                                 records[r].ell);
    }

    const auto emit = [&](MetricsRecord m) {
        result.metrics.push_back(m);
        if (hooks.on_metrics) hooks.on_metrics(m);
    };
    {
        MetricsRecord m0 = probe(params, eval_samples, threads);
        m0.step = 0;
        emit(m0);
    }

    const StreamKey rollout_key(cfg.seed, "rollout");
    const StreamKey shuffle_key(cfg.seed, "shuffle");
    std::vector<std::size_t> order(records.size());
    std::size_t cursor = records.size();
    std::size_t epoch = 0;

    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        std::vector<std::size_t> picked(cfg.rollout_batch);
        for (auto& p : picked) {
            if (cursor == order.size()) {
                std::iota(order.begin(), order.end(), std::size_t{0});
                Rng rng = shuffle_key.with(epoch++).make();
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            p = order[cursor++];
        }

        // Behavior snapshot: every ratio in this rollout batch is taken
        // against these log-probabilities.
        const PolicyParams params_old = params;
        std::vector<GroupBatch> groups(picked.size());
        parallel_for(picked.size(), threads, [&](std::size_t i) {
            const std::size_t rec = picked[i];
            groups[i] = collect_group(params_old, record_instances[rec], cfg.G, rollout_key.with({step, rec}));
            fill_advantages(groups[i], cfg.mode);
        });

        double reward_sum = 0.0;
        double length_sum = 0.0;
        std::size_t n_rollouts = 0;
        for (const auto& g : groups) {
            for (const auto& sg : g.subgroups) {
                for (const auto& r : sg) {
                    reward_sum += r.reward;
                    length_sum += static_cast<double>(r.tokens.size());
                    ++n_rollouts;
                }
            }
        }

        double kl_tokens = 0.0;
        std::size_t tokens = 0;
        for (std::size_t off = 0; off < groups.size(); off += cfg.train_batch) {
            const std::span<const GroupBatch> mb(groups.data() + off, cfg.train_batch);
            GroupLossResult lg;
            try {
                lg = minibatch_loss_and_grad(params, ref, mb, cfg.objective, threads);
                if (!std::isfinite(lg.loss)) throw NumericError("non-finite minibatch loss at step " + std::to_string(step));
            } catch (const NumericError& e) {
                if (hooks.on_numeric_failure) hooks.on_numeric_failure(dump_groups(mb, step, e.what()));
                throw;
            }
            adam.step(params.values, lg.grad.values);
            kl_tokens += lg.mean_kl * static_cast<double>(lg.tokens);
            tokens += lg.tokens;
        }
        if (!all_finite(params.values)) throw NumericError("parameters became non-finite at step " + std::to_string(step));

        if (step % cfg.eval_interval == 0 || step == cfg.steps) {
            MetricsRecord m = probe(params, eval_samples, threads);
            m.step = step;
            m.mean_reward = reward_sum / static_cast<double>(n_rollouts);
            m.mean_output_length = length_sum / static_cast<double>(n_rollouts);
            m.mean_kl_to_ref = tokens ? kl_tokens / static_cast<double>(tokens) : 0.0;
            emit(m);
        }
        if (cfg.checkpoint_interval && step % cfg.checkpoint_interval == 0 && hooks.on_checkpoint) {
            hooks.on_checkpoint(step, params);
        }
    }
    result.final_params = std::move(params);
    return result;
}

TrainResult run_training(const TrainConfig& cfg, const TrainData& train_data,
                         std::span<const PairwiseSample> eval_samples, const std::string& run_dir,
                         const std::string& config_echo_json, unsigned threads,
                         const std::optional<PolicyParams>& init, bool verbose) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(run_dir) / "checkpoints");
    std::ofstream metrics_out(fs::path(run_dir) / "metrics.jsonl", std::ios::binary);
    if (!metrics_out) throw IoError("cannot write metrics to " + run_dir);

    CheckpointHeader header;
    header.seed = cfg.seed;
    header.extra_json = json{{"train_config", json::parse(config_echo_json)}}.dump();

    TrainHooks hooks;
    hooks.on_metrics = [&](const MetricsRecord& m) {
        metrics_out << metrics_json_line(m) << '\n';
        metrics_out.flush();
        if (verbose) {
            std::fprintf(stderr, "[%s] step %5zu  reward %s  consistency %.4f  cons.acc %.4f  kl %.3g\n",
                         to_string(cfg.mode).c_str(), m.step,
                         m.mean_reward ? std::to_string(*m.mean_reward).c_str() : "   -    ", m.probe_consistency,
                         m.probe_consistent_accuracy, m.mean_kl_to_ref);
        }
    };
    hooks.on_checkpoint = [&](std::size_t step, const PolicyParams& p) {
        char name[48];
        std::snprintf(name, sizeof name, "step_%06zu.ckpt", step);
        save_checkpoint((fs::path(run_dir) / "checkpoints" / name).string(), p, header);
    };
    hooks.on_numeric_failure = [&](const std::string& dump) {
        std::ofstream d(fs::path(run_dir) / "numeric_failure.json", std::ios::binary);
        d << dump << '\n';
    };
    TrainResult res = train(cfg, train_data, eval_samples, threads, hooks, init);
    save_checkpoint((fs::path(run_dir) / "final.ckpt").string(), res.final_params, header);
    return res;
}

}  // namespace eisgrpo
