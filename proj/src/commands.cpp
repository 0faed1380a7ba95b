#include "eisgrpo/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "eisgrpo/dataset_io.hpp"
#include "eisgrpo/errors.hpp"
#include "eisgrpo/evalkit.hpp"
#include "eisgrpo/objective.hpp"
#include "eisgrpo/policy.hpp"
#include "eisgrpo/simenv.hpp"

namespace eisgrpo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text << '\n';
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v, int prec = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

}  // namespace

GeneratedDataset generate_dataset(const RunConfig& cfg, unsigned threads) {
    cfg.validate();
    const auto pool = default_answerer_pool();
    GeneratedDataset ds;
    const auto train_q = gen_questions(cfg.num_train, cfg.env, "train-q");
    const auto eval_q = gen_questions(cfg.num_eval, cfg.env, "eval-q");
    ds.train = build_pairs(train_q, pool, cfg.answers_per_question, cfg.env, threads);
    ds.eval = build_pairs(eval_q, pool, cfg.answers_per_question, cfg.env, threads);
    for (auto& s : ds.train) s.source = "train";
    for (auto& s : ds.eval) s.source = "eval";
    Rng rng = make_stream(cfg.seed, "export", {});
    ds.train_records = export_biased_single_ordering(ds.train, cfg.env.p_first, rng);
    return ds;
}

LoadedDataset load_dataset_dir(const std::string& dir) {
    if (dir.empty()) throw ConfigError("paths.dataset_in is not set");
    const fs::path root(dir);
    if (!fs::is_directory(root)) throw IoError("dataset directory not found: " + dir);
    LoadedDataset d;
    auto samples = load_samples((root / kTrainSamplesFile).string());
    const fs::path records = root / kTrainRecordsFile;
    if (fs::exists(records)) {
        const auto recs = load_instances(records.string());
        d.train = TrainData::from_records(std::move(samples), recs);
    } else {
        d.train = TrainData::from_samples(std::move(samples));
    }
    d.eval = load_samples((root / kEvalSamplesFile).string());
    return d;
}

void echo_config(const RunConfig& cfg) {
    if (cfg.paths.run_dir.empty()) throw ConfigError("paths.run_dir is not set");
    fs::create_directories(cfg.paths.run_dir);
    write_text(fs::path(cfg.paths.run_dir) / "config.json", to_flat_json(cfg).dump(2));
}

int cmd_dataset_gen(const RunConfig& cfg, CommandContext& ctx) {
    cfg.validate();
    echo_config(cfg);
    const auto ds = generate_dataset(cfg, ctx.threads);
    const fs::path root(cfg.paths.run_dir);
    save_samples((root / kTrainSamplesFile).string(), ds.train);
    save_samples((root / kEvalSamplesFile).string(), ds.eval);
    save_instances((root / kTrainRecordsFile).string(), ds.train_records);

    std::size_t better_first = 0;
    for (const auto& r : ds.train_records) better_first += r.ell == 1;
    const json manifest = {
        {"seed", cfg.seed},
        {"env",
         {{"d_q", cfg.env.d_q},
          {"d_r", cfg.env.d_r},
          {"quality_gap", cfg.env.quality_gap},
          {"noise_sigma", cfg.env.noise_sigma},
          {"p_first", cfg.env.p_first}}},
        {"answers_per_question", cfg.answers_per_question},
        {"train_questions", cfg.num_train},
        {"eval_questions", cfg.num_eval},
        {"train_pairs", ds.train.size()},
        {"eval_pairs", ds.eval.size()},
        {"train_records_better_first", better_first},
        {"files", {kTrainSamplesFile, kTrainRecordsFile, kEvalSamplesFile}},
    };
    write_text(root / kManifestFile, manifest.dump(2));
    ctx.out << "wrote " << ds.train.size() << " train pairs (" << better_first << " recorded better-first) and "
            << ds.eval.size() << " eval pairs to " << cfg.paths.run_dir << '\n';
    return kExitOk;
}

int cmd_train(const RunConfig& cfg, CommandContext& ctx) {
    cfg.validate();
    echo_config(cfg);
    const auto data = load_dataset_dir(cfg.paths.dataset_in);
    std::optional<PolicyParams> init;
    if (!cfg.paths.checkpoint_in.empty()) init = load_checkpoint(cfg.paths.checkpoint_in);
    const auto res = run_training(cfg.train, data.train, data.eval, cfg.paths.run_dir,
                                  train_config_json(cfg.train).dump(), ctx.threads, init, ctx.verbose);
    const auto& last = res.metrics.back();
    ctx.out << "step " << last.step << "  consistency " << fmt(last.probe_consistency) << "  consistent accuracy "
            << fmt(last.probe_consistent_accuracy) << "\nartifacts in " << cfg.paths.run_dir << '\n';
    return kExitOk;
}

double StrategyResult::median_final_consistency() const {
    std::vector<double> v;
    for (const auto& s : seeds) v.push_back(s.final_consistency);
    return median(v);
}

double StrategyResult::median_final_consistent_accuracy() const {
    std::vector<double> v;
    for (const auto& s : seeds) v.push_back(s.final_consistent_accuracy);
    return median(v);
}

double StrategyResult::median_consistency_gain() const {
    std::vector<double> v;
    for (const auto& s : seeds) v.push_back(s.final_consistency - s.initial_consistency);
    return median(v);
}

std::vector<StrategySpec> ablation_strategies() {
    return {
        {"grpo_balanced_G32", TrainMode::GrpoBalanced, 32, 1, 1},
        // Half the rollouts per record, twice the records: same rollouts per update.
        {"grpo_duplicated_G16", TrainMode::GrpoDuplicated, 16, 2, 1},
        // Full G on both orderings: each record is seen half as often per step.
        {"grpo_duplicated_G32", TrainMode::GrpoDuplicated, 32, 1, 2},
        {"global_only_G32", TrainMode::GlobalOnly, 32, 1, 1},
        {"eis_G32", TrainMode::Eis, 32, 1, 1},
    };
}

std::vector<StrategySpec> group_size_sweep() {
    std::vector<StrategySpec> out;
    for (std::size_t g : {16, 24, 32, 64}) out.push_back({"eis_G" + std::to_string(g), TrainMode::Eis, g, 1, 1});
    return out;
}

StrategyResult run_strategy(const StrategySpec& spec, const TrainConfig& base, std::size_t num_seeds,
                            const LoadedDataset& data, unsigned threads, const std::string& run_dir) {
    StrategyResult result{spec, {}};
    TrainConfig cfg = base;
    cfg.mode = spec.mode;
    cfg.G = spec.G;
    cfg.rollout_batch = base.rollout_batch * spec.rollout_batch_scale;
    cfg.train_batch = base.train_batch * spec.rollout_batch_scale;
    cfg.steps = base.steps * spec.steps_scale;
    for (std::size_t k = 0; k < num_seeds; ++k) {
        cfg.seed = base.seed + k;
        TrainResult res;
        if (run_dir.empty()) {
            res = train(cfg, data.train, data.eval, threads);
        } else {
            const fs::path dir = fs::path(run_dir) / spec.name / ("seed_" + std::to_string(cfg.seed));
            fs::create_directories(dir);
            const std::string echo = train_config_json(cfg).dump();
            write_text(dir / "config.json", json::parse(echo).dump(2));
            res = run_training(cfg, data.train, data.eval, dir.string(), echo, threads);
        }
        SeedOutcome o;
        o.seed = cfg.seed;
        o.initial_consistency = res.metrics.front().probe_consistency;
        o.initial_consistent_accuracy = res.metrics.front().probe_consistent_accuracy;
        o.final_consistency = res.metrics.back().probe_consistency;
        o.final_consistent_accuracy = res.metrics.back().probe_consistent_accuracy;
        result.seeds.push_back(o);
    }
    return result;
}

std::string ablation_table(const std::vector<StrategyResult>& rows) {
    std::ostringstream os;
    std::size_t name_w = 8;
    for (const auto& r : rows) name_w = std::max(name_w, r.spec.name.size());
    os << std::left << std::setw(static_cast<int>(name_w)) << "strategy" << "  metric     ";
    const std::size_t n_seeds = rows.empty() ? 0 : rows.front().seeds.size();
    for (std::size_t k = 0; k < n_seeds; ++k) os << "  seed" << std::setw(3) << k;
    os << "   median\n";
    for (const auto& r : rows) {
        for (int which = 0; which < 2; ++which) {
            os << std::left << std::setw(static_cast<int>(name_w)) << (which == 0 ? r.spec.name : "")
               << (which == 0 ? "  consistency" : "  cons.acc   ");
            for (const auto& s : r.seeds) {
                os << "  " << std::right << std::setw(7)
                   << fmt(which == 0 ? s.final_consistency : s.final_consistent_accuracy);
            }
            os << "  " << std::setw(7)
               << fmt(which == 0 ? r.median_final_consistency() : r.median_final_consistent_accuracy()) << '\n';
        }
    }
    return os.str();
}

int cmd_ablate(const RunConfig& cfg, CommandContext& ctx) {
    cfg.validate();
    echo_config(cfg);
    const auto data = load_dataset_dir(cfg.paths.dataset_in);
    auto specs = ablation_strategies();
    if (cfg.ablate_g_sweep) {
        for (auto& s : group_size_sweep()) {
            if (s.G != 32) specs.push_back(s);  // G = 32 is already the eis row
        }
    }
    std::vector<StrategyResult> rows;
    json out = json::array();
    for (const auto& spec : specs) {
        if (ctx.verbose) ctx.err << "running " << spec.name << '\n';
        rows.push_back(run_strategy(spec, cfg.train, cfg.ablate_seeds, data, ctx.threads, cfg.paths.run_dir));
        const auto& r = rows.back();
        json seeds = json::array();
        for (const auto& s : r.seeds) {
            seeds.push_back({{"seed", s.seed},
                             {"initial_consistency", s.initial_consistency},
                             {"final_consistency", s.final_consistency},
                             {"initial_consistent_accuracy", s.initial_consistent_accuracy},
                             {"final_consistent_accuracy", s.final_consistent_accuracy}});
        }
        out.push_back({{"strategy", spec.name},
                       {"mode", to_string(spec.mode)},
                       {"G", spec.G},
                       {"seeds", seeds},
                       {"median_consistency", r.median_final_consistency()},
                       {"median_consistent_accuracy", r.median_final_consistent_accuracy()}});
    }
    write_text(fs::path(cfg.paths.run_dir) / "ablation.json", out.dump(2));
    ctx.out << ablation_table(rows);
    return kExitOk;
}

int cmd_eval(const RunConfig& cfg, CommandContext& ctx) {
    MetricsReport report;
    if (!cfg.paths.judgments_in.empty()) {
        report = score_external_file(cfg.paths.judgments_in);
    } else {
        if (cfg.paths.checkpoint_in.empty()) {
            throw ConfigError("eval needs paths.checkpoint_in (or paths.judgments_in for external judgments)");
        }
        if (cfg.paths.dataset_in.empty()) throw ConfigError("paths.dataset_in is not set");
        const fs::path in(cfg.paths.dataset_in);
        const auto samples = fs::is_directory(in) ? load_samples((in / kEvalSamplesFile).string())
                                                  : load_samples(in.string());
        const auto params = load_checkpoint(cfg.paths.checkpoint_in);
        const auto results = judge_all(params, samples, ctx.threads);
        report = summarize(results);
    }
    if (!cfg.paths.run_dir.empty()) {
        echo_config(cfg);
        write_text(fs::path(cfg.paths.run_dir) / "eval_report.json", report_json(report));
    }
    ctx.out << (ctx.json_output ? report_json(report) + "\n" : report_table(report));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Advantage fixture

namespace {

struct FixtureRow {
    std::string estimator;
    char subgroup;
    double reward;
    double expected;
    std::string note;
};

std::vector<FixtureRow> fixture_rows() {
    return {
        {"grpo", 'A', 1.5, 0.577, ""},
        {"grpo", 'A', 1.0, -1.732, ""},
        {"grpo", 'B', 1.0, 1.732, ""},
        {"grpo", 'B', 0.0, -0.577, ""},
        {"global_only", 'A', 1.5, 1.044, ""},
        {"global_only", 'A', 1.0, 0.285, ""},
        {"global_only", 'B', 1.0, 0.285,
         "pooled statistics give the same value as A's 1.0; 1.732 is the separate-group value"},
        {"global_only", 'B', 0.0, -1.234, ""},
        {"eis", 'A', 1.5, 1.621, ""},
        {"eis", 'A', 1.0, -1.447, ""},
        {"eis", 'B', 1.0, 2.017, ""},
        {"eis", 'B', 0.0, -1.811, ""},
    };
}

double lookup(const std::vector<double>& rewards, const std::vector<double>& adv, double reward) {
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        if (rewards[i] == reward) return adv.at(i);
    }
    throw ContractError("fixture reward not found");
}

}  // namespace

int cmd_advcheck(CommandContext& ctx, const AdvantageEstimators& est) {
    std::vector<double> a(12, 1.5), b(12, 0.0);
    a.insert(a.end(), 4, 1.0);
    b.insert(b.end(), 4, 1.0);
    const SubgroupRewards groups{a, b};

    const SubgroupAdvantages grpo{est.grpo(a), est.grpo(b)};
    const SubgroupAdvantages global = est.global_only(groups);
    const SubgroupAdvantages eis = est.eis(groups);

    constexpr double kTol = 1e-3;
    bool ok = true;
    ctx.out << "estimator    subgroup  reward  expected   computed  status\n";
    for (const auto& row : fixture_rows()) {
        const SubgroupAdvantages& adv = row.estimator == "grpo" ? grpo : row.estimator == "eis" ? eis : global;
        const std::size_t g = row.subgroup == 'A' ? 0 : 1;
        const double got = lookup(groups[g], adv.at(g), row.reward);
        const bool pass = std::isfinite(got) && std::abs(got - row.expected) <= kTol;
        ok = ok && pass;
        char line[160];
        std::snprintf(line, sizeof line, "%-12s %-8c  %6.1f  %8.3f  %9.4f  %s", row.estimator.c_str(), row.subgroup,
                      row.reward, row.expected, got, pass ? "ok" : "MISMATCH");
        ctx.out << line;
        if (!row.note.empty()) ctx.out << "  (" << row.note << ")";
        ctx.out << '\n';
    }
    ctx.out << (ok ? "all fixture values match\n" : "fixture mismatch\n");
    return ok ? kExitOk : kExitFixtureMismatch;
}

// ---------------------------------------------------------------------------
// Gradient check

namespace {

double rel_error(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); }

struct RandomProblem {
    PolicyParams params;
    PolicyParams ref;
    InstancePtr instance;
};

RandomProblem random_problem(Rng& rng) {
    std::uniform_int_distribution<std::size_t> dim(1, 3), width(2, 5);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t dq = dim(rng), dr = dim(rng);
    const PolicyShape shape{dq + 2 * dr, width(rng), 4};
    RandomProblem p{PolicyParams(shape), PolicyParams(shape), nullptr};
    for (auto& v : p.params.values) v = 0.7 * normal(rng);
    p.ref = p.params;
    for (auto& v : p.ref.values) v += 0.3 * normal(rng);
    auto inst = std::make_shared<PresentedInstance>();
    inst->sample_id = "gradcheck";
    inst->question_dim = dq;
    inst->response_dim = dr;
    inst->features.resize(shape.input_dim);
    for (auto& f : inst->features) f = normal(rng);
    p.instance = inst;
    return p;
}

std::vector<Token> random_tokens(Rng& rng, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<int> tok(0, kVocabSize - 1);
    std::vector<Token> t(len(rng));
    for (auto& x : t) x = *token_from_code(static_cast<std::size_t>(tok(rng)));
    return t;
}

template <typename F>
double max_fd_error(PolicyParams params, std::span<const double> analytic, F&& value) {
    double worst = 0.0;
    for (std::size_t k = 0; k < params.values.size(); ++k) {
        const double orig = params.values[k];
        params.values[k] = orig + kGradcheckStep;
        const double up = value(params);
        params.values[k] = orig - kGradcheckStep;
        const double down = value(params);
        params.values[k] = orig;
        worst = std::max(worst, rel_error(analytic[k], (up - down) / (2.0 * kGradcheckStep)));
    }
    return worst;
}

// True when every token ratio stays clear of the clip boundaries, so the
// loss is smooth within a finite-difference step.
bool away_from_kinks(const PolicyParams& params, const GroupBatch& batch, double eps) {
    for (const auto& sg : batch.subgroups) {
        for (const auto& r : sg) {
            const auto lp = sequence_logprobs(params, *r.instance, r.tokens);
            for (std::size_t t = 0; t < lp.size(); ++t) {
                const double ratio = std::exp(lp[t] - r.old_logprobs[t]);
                if (std::abs(ratio - (1.0 + eps)) < 1e-3 || std::abs(ratio - (1.0 - eps)) < 1e-3) return false;
            }
        }
    }
    return true;
}

}  // namespace

GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t trials) {
    GradcheckReport rep;
    rep.trials = trials;
    const StreamKey key(seed, "gradcheck");
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng = key.with(trial).make();
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        // Weighted log-prob + KL objective on a single sequence.
        {
            RandomProblem p = random_problem(rng);
            const auto tokens = random_tokens(rng, p.params.shape.max_len);
            std::vector<double> coeffs(tokens.size()), kl(tokens.size());
            for (auto& c : coeffs) c = 2.0 * unif(rng) - 1.0;
            for (auto& c : kl) c = unif(rng);
            const auto g = weighted_objective_grad(p.params, *p.instance, tokens, coeffs, kl, p.ref);
            rep.max_rel_error_policy =
                std::max(rep.max_rel_error_policy, max_fd_error(p.params, g.values, [&](const PolicyParams& q) {
                             return weighted_objective_value(q, *p.instance, tokens, coeffs, kl, p.ref);
                         }));
        }

        // Clipped group loss over two orderings with a perturbed behavior policy.
        {
            ObjectiveConfig oc;
            oc.kl_beta = 0.1;
            for (int attempt = 0; attempt < 20; ++attempt) {
                RandomProblem p = random_problem(rng);
                PolicyParams old = p.params;
                for (auto& v : old.values) v += 0.15 * normal(rng);
                PresentedInstance swapped = swap_order(*p.instance);
                const std::vector<InstancePtr> insts{p.instance, std::make_shared<PresentedInstance>(swapped)};
                GroupBatch batch;
                batch.sample_id = "gradcheck";
                for (const auto& inst : insts) {
                    std::vector<Rollout> sg;
                    std::vector<double> adv;
                    for (int i = 0; i < 3; ++i) {
                        Rollout r;
                        r.instance = inst;
                        r.tokens = random_tokens(rng, p.params.shape.max_len);
                        r.old_logprobs = sequence_logprobs(old, *inst, r.tokens);
                        sg.push_back(std::move(r));
                        adv.push_back(normal(rng));
                    }
                    batch.subgroups.push_back(std::move(sg));
                    batch.advantages.push_back(std::move(adv));
                }
                if (!away_from_kinks(p.params, batch, oc.clip_epsilon)) continue;
                const auto res = group_loss_and_grad(p.params, p.ref, batch, oc);
                rep.max_rel_error_objective =
                    std::max(rep.max_rel_error_objective, max_fd_error(p.params, res.grad.values, [&](const PolicyParams& q) {
                                 return group_loss_and_grad(q, p.ref, batch, oc).loss;
                             }));
                break;
            }
        }
    }
    return rep;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t trials, CommandContext& ctx) {
    if (trials == 0) throw ConfigError("gradcheck needs at least one trial");
    const auto rep = run_gradcheck(seed, trials);
    char line[200];
    std::snprintf(line, sizeof line,
                  "trials %zu  max relative error: log-prob/KL objective %.3e, clipped group loss %.3e  (tolerance %.0e)\n",
                  rep.trials, rep.max_rel_error_policy, rep.max_rel_error_objective, kGradcheckTolerance);
    ctx.out << line;
    const bool ok = std::isfinite(rep.max_rel_error()) && rep.max_rel_error() <= kGradcheckTolerance;
    ctx.out << (ok ? "gradient check passed\n" : "gradient check FAILED\n");
    return ok ? kExitOk : kExitNumeric;
}

}  // namespace eisgrpo
