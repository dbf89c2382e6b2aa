// Command-line front end: train a communication topology, evaluate a trained
// plan, or inspect its artifacts.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <commdrop/commands.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Communication-topology training with node and edge dropout"};
    app.require_subcommand(1);

    commdrop::TrainOptions train_opts;
    commdrop::EvaluateOptions eval_opts;
    commdrop::InspectOptions inspect_opts;

    std::optional<uint64_t> seed;
    std::optional<std::string> output;
    std::optional<int> parallelism;

    CLI::App* train = app.add_subcommand("train", "Train matrices and write a dropout plan");
    train->add_option("--config", train_opts.config_path, "Run configuration JSON")->required();
    train->add_option("--seed", seed, "Override the config seed");
    train->add_option("--output", output,
                      "Exact run directory (default: output_dir/<timestamp>-<config_hash>)");
    train->add_option("--parallelism", parallelism, "Concurrent rollouts");

    CLI::App* evaluate = app.add_subcommand("evaluate", "Score a plan on evaluation instances");
    evaluate->add_option("--config", eval_opts.config_path, "Run configuration JSON")->required();
    evaluate->add_option("--plan", eval_opts.plan_path, "plan.json produced by train")->required();
    evaluate->add_option("--seed", seed, "Override the config seed");
    evaluate->add_option("--dataset", eval_opts.dataset,
                         "Evaluate on this JSONL file instead of the config dataset's eval split");
    evaluate->add_option("--output", output, "Directory for records/report (default: plan's)");
    evaluate->add_option("--parallelism", parallelism, "Concurrent rollouts");
    evaluate->add_flag("--force", eval_opts.force, "Evaluate despite a config_hash mismatch");

    CLI::App* inspect = app.add_subcommand("inspect", "Validate and describe a plan");
    inspect->add_option("--plan", inspect_opts.plan_path, "plan.json to inspect")->required();

    CLI11_PARSE(app, argc, argv);

    if (train->parsed()) {
        train_opts.seed = seed;
        train_opts.output = output;
        train_opts.parallelism = parallelism;
        return commdrop::cmd_train(train_opts, std::cout, std::cerr);
    }
    if (evaluate->parsed()) {
        eval_opts.seed = seed;
        eval_opts.output = output;
        eval_opts.parallelism = parallelism;
        return commdrop::cmd_evaluate(eval_opts, std::cout, std::cerr);
    }
    return commdrop::cmd_inspect(inspect_opts, std::cout, std::cerr);
}
