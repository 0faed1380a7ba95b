#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "../support/fixtures.hpp"
#include "eisgrpo/advantage.hpp"
#include "eisgrpo/errors.hpp"
#include "eisgrpo/rewards.hpp"
#include "eisgrpo/trainer.hpp"

using namespace eisgrpo;
namespace fs = std::filesystem;

namespace {

std::vector<PairwiseSample> toy_samples(std::size_t n, std::uint64_t seed) {
    EnvConfig cfg;
    Rng rng = make_stream(seed, "trainer-test");
    std::vector<PairwiseSample> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(gen_sample(rng, cfg, "t" + std::to_string(i)));
    return out;
}

TrainConfig small_config(TrainMode mode) {
    TrainConfig c;
    c.mode = mode;
    c.G = 8;
    c.rollout_batch = 8;
    c.train_batch = 4;
    c.steps = 6;
    c.eval_interval = 3;
    c.hidden = 6;
    c.seed = 3;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("eisgrpo_trainer_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_SUITE("trainer") {
    TEST_CASE("group shapes per mode") {
        const auto s = toy_samples(1, 1).front();
        const auto p = init_params({12, 6, 4}, 0);
        const StreamKey key(0, "shape-test");

        TrainConfig eis;
        const auto g = collect_group(p, s, eis, key);
        REQUIRE(g.subgroups.size() == 2);
        CHECK(g.subgroups[0].size() == 16);
        CHECK(g.subgroups[1].size() == 16);
        CHECK(g.subgroups[0][0].instance->gold == Label::A);
        CHECK(g.subgroups[1][0].instance->gold == Label::B);

        TrainConfig bal;
        bal.mode = TrainMode::GrpoBalanced;
        const auto b = collect_group(p, s, bal, key, 2);
        REQUIRE(b.subgroups.size() == 1);
        CHECK(b.subgroups[0].size() == 32);
        CHECK(b.subgroups[0][0].instance->gold == Label::B);

        TrainConfig dup = bal;
        dup.mode = TrainMode::GrpoDuplicated;
        dup.G = 16;
        const auto d = collect_group(p, s, dup, key);
        REQUIRE(d.subgroups.size() == 1);
        CHECK(d.subgroups[0].size() == 16);

        for (const auto& sg : g.subgroups) {
            for (const auto& r : sg) CHECK(r.reward == total_reward(r.tokens, r.instance->gold));
        }
    }

    TEST_CASE("advantages are filled with the estimator for the mode") {
        const auto s = toy_samples(1, 2).front();
        const auto p = init_params({12, 6, 4}, 0);
        TrainConfig cfg;
        auto g = collect_group(p, s, cfg, StreamKey(1, "adv-test"));
        // Overwrite rewards with the two-subgroup fixture.
        for (std::size_t i = 0; i < 16; ++i) {
            g.subgroups[0][i].reward = i < 12 ? 1.5 : 1.0;
            g.subgroups[1][i].reward = i < 12 ? 0.0 : 1.0;
        }
        fill_advantages(g, TrainMode::Eis);
        CHECK(std::abs(g.advantages[0][0] - 1.621) < 1e-3);
        CHECK(std::abs(g.advantages[1][15] - 2.017) < 1e-3);
        fill_advantages(g, TrainMode::GlobalOnly);
        CHECK(std::abs(g.advantages[1][15] - 0.285) < 1e-3);

        for (auto& sg : g.subgroups) {
            for (auto& r : sg) r.reward = 0.5;
        }
        fill_advantages(g, TrainMode::Eis);
        for (const auto& sg : g.advantages) {
            for (double a : sg) CHECK(a == 0.0);
        }
    }

    TEST_CASE("zero steps leave the initialization untouched") {
        auto cfg = small_config(TrainMode::Eis);
        cfg.steps = 0;
        const auto data = TrainData::from_samples(toy_samples(20, 3));
        const auto res = train(cfg, data, toy_samples(5, 4));
        CHECK(res.final_params == res.initial);
        CHECK(res.final_params == init_params(res.initial.shape, cfg.seed, cfg.init_scale));
        REQUIRE(res.metrics.size() == 1);
        CHECK(res.metrics[0].step == 0);
        CHECK_FALSE(res.metrics[0].mean_reward.has_value());
    }

    TEST_CASE("training is reproducible and independent of the worker count") {
        for (auto mode : {TrainMode::Eis, TrainMode::GrpoDuplicated, TrainMode::GlobalOnly}) {
            const auto cfg = small_config(mode);
            const auto data = TrainData::from_samples(toy_samples(30, 5));
            const auto eval = toy_samples(10, 6);
            const auto a = train(cfg, data, eval, 1);
            const auto b = train(cfg, data, eval, 1);
            const auto c = train(cfg, data, eval, 4);
            CHECK(a.final_params == b.final_params);
            CHECK(a.final_params == c.final_params);
            CHECK(a.final_params != a.initial);
            REQUIRE(a.metrics.size() == c.metrics.size());
            for (std::size_t i = 0; i < a.metrics.size(); ++i) {
                CHECK(metrics_json_line(a.metrics[i]) == metrics_json_line(c.metrics[i]));
            }
        }
    }

    TEST_CASE("metrics are logged at every interval and at the end") {
        auto cfg = small_config(TrainMode::Eis);
        cfg.steps = 7;
        const auto res = train(cfg, TrainData::from_samples(toy_samples(20, 7)), toy_samples(5, 8));
        std::vector<std::size_t> steps;
        for (const auto& m : res.metrics) steps.push_back(m.step);
        CHECK(steps == std::vector<std::size_t>{0, 3, 6, 7});
        for (std::size_t i = 1; i < res.metrics.size(); ++i) {
            CHECK(res.metrics[i].mean_reward.has_value());
            CHECK(res.metrics[i].mean_kl_to_ref >= 0.0);
        }
    }

    TEST_CASE("single subgroup: eis gradient is exactly twice the per-group one") {
        const auto samples = toy_samples(6, 9);
        const auto p = init_params({12, 6, 4}, 2);
        TrainConfig cfg;
        cfg.G = 8;
        std::vector<GroupBatch> grpo, eis;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            auto inst = subgroup_instances(samples[i], TrainMode::Eis, 1, i % 2 ? 2 : 1);
            auto g = collect_group(p, inst, cfg.G, StreamKey(4, "prop-test").with(i));
            auto h = g;
            fill_advantages(g, TrainMode::GrpoBalanced);
            fill_advantages(h, TrainMode::Eis);
            grpo.push_back(std::move(g));
            eis.push_back(std::move(h));
        }
        const auto a = minibatch_loss_and_grad(p, p, grpo, cfg.objective, 1);
        const auto b = minibatch_loss_and_grad(p, p, eis, cfg.objective, 1);
        double norm = 0.0;
        for (double v : a.grad.values) norm = std::max(norm, std::abs(v));
        REQUIRE(norm > 0.0);
        for (std::size_t k = 0; k < a.grad.values.size(); ++k) {
            CHECK(std::abs(b.grad.values[k] - 2.0 * a.grad.values[k]) <= 1e-9 * std::max(1.0, norm));
        }
    }

    TEST_CASE("recorded orderings come from the exported records") {
        auto samples = toy_samples(4, 10);
        std::vector<PresentedInstance> recs{apply_transform(samples[1], 2), apply_transform(samples[3], 2)};
        const auto d = TrainData::from_records(samples, recs);
        CHECK(d.recorded_ell == std::vector<int>{1, 2, 1, 2});
        PresentedInstance stray = recs[0];
        stray.sample_id = "nope";
        CHECK_THROWS_AS(TrainData::from_records(samples, std::vector{stray}), ContractError);
    }

    TEST_CASE("invalid configurations name the offending field") {
        TrainConfig c;
        c.G = 7;
        CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("train.G"), ConfigError);
        c = {};
        c.train_batch = 24;
        CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("train_batch"), ConfigError);
        c = {};
        c.lr = 0.0;
        CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("train.lr"), ConfigError);
        c = {};
        c.L = 3;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c.mode = TrainMode::GrpoBalanced;  // L is forced to 1
        CHECK_NOTHROW(c.validate());
        CHECK_THROWS_AS(train_mode_from_string("ppo"), ConfigError);
    }

    TEST_CASE("adam matches the textbook update") {
        Adam adam(2, 0.1, 0.9, 0.999, 1e-8);
        std::vector<double> x{1.0, -2.0};
        const std::vector<double> g{0.5, -4.0};
        adam.step(x, g);
        // First step: m_hat = g and v_hat = g^2, so each coordinate moves by about lr * sign(g).
        const double x0 = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
        CHECK(x[0] == doctest::Approx(x0).epsilon(1e-12));
        CHECK(x[1] == doctest::Approx(-2.0 + 0.1 * 4.0 / (4.0 + 1e-8)).epsilon(1e-12));
        adam.step(x, std::vector<double>{0.5, 0.0});
        const double m = 0.9 * 0.05 + 0.05, v = 0.999 * 0.00025 + 0.00025;
        const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
        CHECK(x[0] == doctest::Approx(x0 - 0.1 * mh / (std::sqrt(vh) + 1e-8)).epsilon(1e-12));
        CHECK(adam.steps_taken() == 2);
    }

    TEST_CASE("run directory layout and replay") {
        const auto dir = scratch("layout");
        auto cfg = small_config(TrainMode::Eis);
        cfg.checkpoint_interval = 2;
        const auto data = TrainData::from_samples(toy_samples(20, 11));
        const auto eval = toy_samples(5, 12);
        run_training(cfg, data, eval, (dir / "a").string(), "{}", 1);
        run_training(cfg, data, eval, (dir / "b").string(), "{}", 2);
        CHECK(fs::exists(dir / "a" / "final.ckpt"));
        CHECK(fs::exists(dir / "a" / "checkpoints" / "step_000002.ckpt"));
        CHECK(fs::exists(dir / "a" / "checkpoints" / "step_000006.ckpt"));
        CHECK(slurp(dir / "a" / "metrics.jsonl") == slurp(dir / "b" / "metrics.jsonl"));
        CHECK(slurp(dir / "a" / "final.ckpt") == slurp(dir / "b" / "final.ckpt"));
        fs::remove_all(dir);
    }

    TEST_CASE("non-finite parameters abort with a batch dump") {
        const auto dir = scratch("nan");
        auto cfg = small_config(TrainMode::Eis);
        const auto data = TrainData::from_samples(toy_samples(20, 13));
        auto init = init_params({12, cfg.hidden, 4}, cfg.seed);
        init.encoder_weight()[0] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(run_training(cfg, data, {}, dir.string(), "{}", 1, init), NumericError);
        CHECK(fs::exists(dir / "numeric_failure.json"));
        fs::remove_all(dir);
    }
}
