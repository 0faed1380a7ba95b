#include "eisgrpo/config.hpp"

#include <fstream>
#include <limits>

#include "eisgrpo/errors.hpp"

namespace eisgrpo {

using nlohmann::json;

void RunConfig::sync_seeds() {
    env.seed = seed;
    train.seed = seed;
}

void RunConfig::validate() const {
    env.validate();
    train.validate();
    if (num_train == 0) throw ConfigError("data.num_train must be > 0");
    if (num_eval == 0) throw ConfigError("data.num_eval must be > 0");
    if (answers_per_question < 2) throw ConfigError("data.answers_per_question must be >= 2");
    if (ablate_seeds == 0) throw ConfigError("ablate.seeds must be > 0");
}

namespace {

std::uint64_t as_unsigned(const std::string& key, const json& v) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(key + ": expected a non-negative integer, got " + v.dump());
}

double as_real(const std::string& key, const json& v) {
    if (v.is_number()) return v.get<double>();
    throw ConfigError(key + ": expected a number, got " + v.dump());
}

std::string as_text(const std::string& key, const json& v) {
    if (v.is_string()) return v.get<std::string>();
    throw ConfigError(key + ": expected a string, got " + v.dump());
}

bool as_flag(const std::string& key, const json& v) {
    if (v.is_boolean()) return v.get<bool>();
    throw ConfigError(key + ": expected true or false, got " + v.dump());
}

template <typename Member>
ConfigField unsigned_field(std::string key, std::string help, Member member) {
    return {key, FieldKind::Unsigned, std::move(help), [member](const RunConfig& c) { return json(member(c)); },
            [member, key](RunConfig& c, const json& v) {
                using T = std::remove_reference_t<decltype(member(c))>;
                member(c) = static_cast<T>(as_unsigned(key, v));
            }};
}

template <typename Member>
ConfigField real_field(std::string key, std::string help, Member member) {
    return {key, FieldKind::Real, std::move(help), [member](const RunConfig& c) { return json(member(c)); },
            [member, key](RunConfig& c, const json& v) { member(c) = as_real(key, v); }};
}

template <typename Member>
ConfigField text_field(std::string key, std::string help, Member member) {
    return {key, FieldKind::Text, std::move(help), [member](const RunConfig& c) { return json(member(c)); },
            [member, key](RunConfig& c, const json& v) { member(c) = as_text(key, v); }};
}

template <typename Member>
ConfigField flag_field(std::string key, std::string help, Member member) {
    return {key, FieldKind::Flag, std::move(help), [member](const RunConfig& c) { return json(member(c)); },
            [member, key](RunConfig& c, const json& v) { member(c) = as_flag(key, v); }};
}

std::vector<ConfigField> make_fields() {
    std::vector<ConfigField> f;
    f.push_back(unsigned_field("seed", "top-level seed for every random stream", [](auto& c) -> auto& { return c.seed; }));

    f.push_back(unsigned_field("env.d_q", "question feature dimension", [](auto& c) -> auto& { return c.env.d_q; }));
    f.push_back(unsigned_field("env.d_r", "response feature dimension", [](auto& c) -> auto& { return c.env.d_r; }));
    f.push_back(real_field("env.quality_gap", "latent quality gap between responses", [](auto& c) -> auto& { return c.env.quality_gap; }));
    f.push_back(real_field("env.noise_sigma", "feature observation noise", [](auto& c) -> auto& { return c.env.noise_sigma; }));
    f.push_back(real_field("env.p_first", "probability the better response is recorded first", [](auto& c) -> auto& { return c.env.p_first; }));

    f.push_back(unsigned_field("data.num_train", "training questions before filtering", [](auto& c) -> auto& { return c.num_train; }));
    f.push_back(unsigned_field("data.num_eval", "evaluation questions before filtering", [](auto& c) -> auto& { return c.num_eval; }));
    f.push_back(unsigned_field("data.answers_per_question", "answers drawn per question", [](auto& c) -> auto& { return c.answers_per_question; }));

    f.push_back({"train.mode", FieldKind::Mode, "eis | grpo_balanced | grpo_duplicated | global_only",
                 [](const RunConfig& c) { return json(to_string(c.train.mode)); },
                 [](RunConfig& c, const json& v) { c.train.mode = train_mode_from_string(as_text("train.mode", v)); }});
    f.push_back(unsigned_field("train.G", "rollouts per question", [](auto& c) -> auto& { return c.train.G; }));
    f.push_back(unsigned_field("train.L", "subgroups per question (eis, global_only)", [](auto& c) -> auto& { return c.train.L; }));
    f.push_back(unsigned_field("train.rollout_batch", "questions per rollout batch", [](auto& c) -> auto& { return c.train.rollout_batch; }));
    f.push_back(unsigned_field("train.train_batch", "questions per optimizer update", [](auto& c) -> auto& { return c.train.train_batch; }));
    f.push_back(real_field("train.lr", "Adam step size", [](auto& c) -> auto& { return c.train.lr; }));
    f.push_back(unsigned_field("train.steps", "rollout batches to train for", [](auto& c) -> auto& { return c.train.steps; }));
    f.push_back(unsigned_field("train.eval_interval", "rollout batches between probe evaluations", [](auto& c) -> auto& { return c.train.eval_interval; }));
    f.push_back(unsigned_field("train.checkpoint_interval", "rollout batches between checkpoints (0: final only)", [](auto& c) -> auto& { return c.train.checkpoint_interval; }));
    f.push_back(unsigned_field("train.hidden", "encoder width", [](auto& c) -> auto& { return c.train.hidden; }));
    f.push_back(unsigned_field("train.max_len", "maximum output tokens", [](auto& c) -> auto& { return c.train.max_len; }));
    f.push_back(real_field("train.init_scale", "encoder init scale", [](auto& c) -> auto& { return c.train.init_scale; }));

    f.push_back(real_field("objective.clip_epsilon", "ratio clipping range", [](auto& c) -> auto& { return c.train.objective.clip_epsilon; }));
    f.push_back(real_field("objective.kl_beta", "KL penalty weight", [](auto& c) -> auto& { return c.train.objective.kl_beta; }));

    f.push_back(text_field("paths.dataset_in", "dataset directory", [](auto& c) -> auto& { return c.paths.dataset_in; }));
    f.push_back(text_field("paths.run_dir", "output directory", [](auto& c) -> auto& { return c.paths.run_dir; }));
    f.push_back(text_field("paths.checkpoint_in", "policy checkpoint to start from or evaluate", [](auto& c) -> auto& { return c.paths.checkpoint_in; }));
    f.push_back(text_field("paths.judgments_in", "external judgments JSONL to score", [](auto& c) -> auto& { return c.paths.judgments_in; }));

    f.push_back(unsigned_field("ablate.seeds", "training seeds per ablation row", [](auto& c) -> auto& { return c.ablate_seeds; }));
    f.push_back(flag_field("ablate.g_sweep", "also sweep G over {16, 24, 32, 64} in eis mode", [](auto& c) -> auto& { return c.ablate_g_sweep; }));
    return f;
}

const ConfigField& find_field(const std::string& key) {
    for (const auto& f : config_fields()) {
        if (f.key == key) return f;
    }
    throw ConfigError("unknown config key \"" + key + "\"");
}

}  // namespace

const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = make_fields();
    return fields;
}

json to_flat_json(const RunConfig& cfg) {
    json j = json::object();
    for (const auto& f : config_fields()) j[f.key] = f.get(cfg);
    return j;
}

void apply_json(RunConfig& cfg, const json& flat) {
    if (!flat.is_object()) throw ConfigError("config must be a JSON object of dotted keys");
    for (const auto& [key, value] : flat.items()) find_field(key).set(cfg, value);
    cfg.sync_seeds();
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    const ConfigField& f = find_field(key);
    json v;
    switch (f.kind) {
        case FieldKind::Text:
        case FieldKind::Mode: v = value; break;
        case FieldKind::Flag:
            if (value == "true" || value == "1") v = true;
            else if (value == "false" || value == "0") v = false;
            else throw ConfigError(key + ": expected true or false, got \"" + value + "\"");
            break;
        case FieldKind::Unsigned:
        case FieldKind::Real:
            try {
                v = json::parse(value);
            } catch (const json::exception&) {
                throw ConfigError(key + ": expected a number, got \"" + value + "\"");
            }
            break;
    }
    f.set(cfg, v);
    cfg.sync_seeds();
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    RunConfig cfg;
    apply_json(cfg, j);
    return cfg;
}

json train_config_json(const TrainConfig& t) {
    return {{"mode", to_string(t.mode)},
            {"G", t.G},
            {"L", t.effective_L()},
            {"rollout_batch", t.rollout_batch},
            {"train_batch", t.train_batch},
            {"lr", t.lr},
            {"clip_epsilon", t.objective.clip_epsilon},
            {"kl_beta", t.objective.kl_beta},
            {"steps", t.steps},
            {"seed", t.seed},
            {"eval_interval", t.eval_interval},
            {"hidden", t.hidden},
            {"max_len", t.max_len},
            {"init_scale", t.init_scale},
            {"adam", {{"beta1", t.adam_beta1}, {"beta2", t.adam_beta2}, {"eps", t.adam_eps}}}};
}

}  // namespace eisgrpo
