#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stgt/commands.hpp"
#include "stgt/config.hpp"
#include "stgt/errors.hpp"

namespace {

stgt::RunConfig assemble_config(const std::string& config_path,
                                const std::vector<std::string>& sets, uint64_t seed,
                                bool seed_given) {
    stgt::RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    if (seed_given) {
        // One knob reseeds the whole pipeline; --set still wins for any
        // individual stream.
        const std::string s = std::to_string(seed);
        cfg.set("synth.seed", s);
        cfg.set("ingest.seed", s);
        cfg.set("train.seed", s);
    }
    for (const std::string& pair : sets) cfg.set_pair(pair);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"transaction-fraud graph model: generate, train, evaluate, ablate"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    uint64_t seed = 0;
    app.add_option("--config", config_path, "key = value configuration file")
        ->configurable(false);
    app.add_option("--set", sets, "override one key (key=value); repeatable");
    auto* seed_opt =
        app.add_option("--seed", seed, "reseed data generation, graph build, and training");
    app.fallthrough();

    auto* generate = app.add_subcommand("generate", "write a synthetic labeled dataset");
    std::string gen_out = "synth.csv";
    generate->add_option("--out", gen_out, "output CSV path");

    auto* train = app.add_subcommand("train", "train on a dataset and save a checkpoint");
    std::string train_data, train_out = "run";
    train->add_option("data", train_data, "dataset CSV (schema file beside it)")->required();
    train->add_option("--out", train_out, "artifact directory");

    auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a dataset's test rows");
    std::string eval_checkpoint, eval_data, eval_out = "metrics.json";
    evaluate->add_option("checkpoint", eval_checkpoint, "checkpoint JSON from train")->required();
    evaluate->add_option("data", eval_data, "dataset CSV (schema file beside it)")->required();
    evaluate->add_option("--out", eval_out, "metrics JSON path");

    auto* ablate = app.add_subcommand("ablate", "train and score the four model variants");
    std::string ablate_data, ablate_out = "ablation";
    ablate->add_option("data", ablate_data, "dataset CSV (schema file beside it)")->required();
    ablate->add_option("--out", ablate_out, "artifact directory");

    try {
        app.parse(argc, argv);
        stgt::RunConfig cfg = assemble_config(config_path, sets, seed, seed_opt->count() > 0);
        if (generate->parsed()) stgt::cmd_generate(cfg, gen_out);
        if (train->parsed()) stgt::cmd_train(cfg, train_data, train_out);
        if (evaluate->parsed()) stgt::cmd_evaluate(cfg, eval_checkpoint, eval_data, eval_out);
        if (ablate->parsed()) stgt::cmd_ablate(cfg, ablate_data, ablate_out);
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const stgt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const stgt::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const stgt::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
