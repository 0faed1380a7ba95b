// eisgrpo command-line driver.
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "eisgrpo/commands.hpp"
#include "eisgrpo/config.hpp"
#include "eisgrpo/errors.hpp"

using namespace eisgrpo;

int main(int argc, char** argv) {
    CLI::App app{"Order-invariant pairwise judge training on a synthetic environment"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    unsigned threads = 0;
    bool verbose = false;
    app.add_option("--config", config_path, "JSON config file with dotted keys")->check(CLI::ExistingFile);
    app.add_option("--threads", threads, "worker threads (default: hardware concurrency)");
    app.add_flag("-v,--verbose", verbose, "progress output on stderr");

    // One flag per config key; command-line values win over the file.
    std::map<std::string, std::string> overrides;
    std::map<std::string, CLI::Option*> override_opts;
    for (const auto& f : config_fields()) {
        override_opts[f.key] = app.add_option("--" + f.key, overrides[f.key], f.help)->group("Config overrides");
    }

    auto* gen = app.add_subcommand("dataset-gen", "generate train/eval pair datasets into paths.run_dir");
    auto* trn = app.add_subcommand("train", "train a policy on paths.dataset_in, writing to paths.run_dir");
    auto* abl = app.add_subcommand("ablate", "train every strategy over several seeds and tabulate probe metrics");
    auto* adv = app.add_subcommand("advcheck", "check the advantage estimators against the two-subgroup fixture");
    auto* grd = app.add_subcommand("gradcheck", "compare analytic gradients with central differences");
    auto* evl = app.add_subcommand("eval", "score a checkpoint (or an external judgments file) for consistency");

    std::size_t trials = 100;
    grd->add_option("--trials", trials, "random configurations to check")->capture_default_str();
    bool json_output = false;
    evl->add_flag("--json", json_output, "print the report as JSON instead of a table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    CommandContext ctx{std::cout, std::cerr};
    ctx.threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    ctx.verbose = verbose;
    ctx.json_output = json_output;

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config_file(config_path);
        for (const auto& [key, opt] : override_opts) {
            if (opt->count() > 0) apply_override(cfg, key, overrides[key]);
        }
        cfg.sync_seeds();

        if (*gen) return cmd_dataset_gen(cfg, ctx);
        if (*trn) return cmd_train(cfg, ctx);
        if (*abl) return cmd_ablate(cfg, ctx);
        if (*adv) return cmd_advcheck(ctx);
        if (*grd) return cmd_gradcheck(cfg.seed, trials, ctx);
        if (*evl) return cmd_eval(cfg, ctx);
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitValidation;
}
