#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "eisgrpo/config.hpp"
#include "eisgrpo/errors.hpp"

using namespace eisgrpo;
using nlohmann::json;

TEST_SUITE("config") {
    TEST_CASE("defaults") {
        RunConfig c;
        CHECK(c.train.G == 32);
        CHECK(c.train.L == 2);
        CHECK(c.train.rollout_batch == 64);
        CHECK(c.train.train_batch == 32);
        CHECK(c.train.lr == 1e-3);
        CHECK(c.train.objective.clip_epsilon == 0.2);
        CHECK(c.train.objective.kl_beta == 1e-4);
        CHECK(c.env.d_q == 4);
        CHECK(c.env.noise_sigma == 0.5);
        CHECK(c.env.p_first == 0.8);
        CHECK(c.num_train == 2000);
        CHECK(c.num_eval == 500);
        CHECK(c.answers_per_question == 20);
        CHECK_NOTHROW(c.validate());
    }

    TEST_CASE("flat json round trip covers every key") {
        RunConfig c;
        c.seed = 9;
        c.train.mode = TrainMode::GlobalOnly;
        c.train.G = 16;
        c.env.noise_sigma = 0.25;
        c.paths.run_dir = "out";
        c.ablate_g_sweep = true;
        c.sync_seeds();
        const json j = to_flat_json(c);
        CHECK(j.size() == config_fields().size());
        RunConfig d;
        apply_json(d, j);
        CHECK(to_flat_json(d) == j);
        CHECK(d.train.seed == 9);
        CHECK(d.env.seed == 9);
        CHECK(d.train.mode == TrainMode::GlobalOnly);
    }

    TEST_CASE("command-line values override file values") {
        const auto path = std::filesystem::temp_directory_path() / "eisgrpo_config_test.json";
        {
            std::ofstream out(path);
            out << R"({"train.G": 16, "train.lr": 0.01, "seed": 4})";
        }
        RunConfig c = load_config_file(path.string());
        CHECK(c.train.G == 16);
        CHECK(c.train.seed == 4);
        apply_override(c, "train.G", "24");
        apply_override(c, "train.mode", "grpo_duplicated");
        apply_override(c, "ablate.g_sweep", "true");
        apply_override(c, "seed", "11");
        CHECK(c.train.G == 24);
        CHECK(c.train.lr == 0.01);
        CHECK(c.train.mode == TrainMode::GrpoDuplicated);
        CHECK(c.ablate_g_sweep);
        CHECK(c.env.seed == 11);
        std::filesystem::remove(path);
    }

    TEST_CASE("bad keys and values name the field") {
        RunConfig c;
        CHECK_THROWS_WITH_AS(apply_override(c, "train.gamma", "1"), doctest::Contains("train.gamma"), ConfigError);
        CHECK_THROWS_WITH_AS(apply_override(c, "train.G", "many"), doctest::Contains("train.G"), ConfigError);
        CHECK_THROWS_WITH_AS(apply_json(c, json{{"train.G", -3}}), doctest::Contains("train.G"), ConfigError);
        CHECK_THROWS_WITH_AS(apply_json(c, json{{"env.noise_sigma", "high"}}), doctest::Contains("env.noise_sigma"),
                             ConfigError);
        CHECK_THROWS_AS(apply_override(c, "train.mode", "ppo"), ConfigError);
        CHECK_THROWS_AS(apply_json(c, json::array()), ConfigError);
        CHECK_THROWS_AS(load_config_file("/nonexistent/eisgrpo.json"), ConfigError);

        c.env.p_first = 1.5;
        CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("p_first"), ConfigError);
    }
}
