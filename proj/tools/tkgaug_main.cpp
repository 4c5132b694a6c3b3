// Command-line front end for the augmentation pipeline.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tkgaug/core.hpp"
#include "tkgaug/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> output_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON configuration file")->required();
    cmd->add_option("--seed", args.seed, "override the configured random seed");
    cmd->add_option("--threads", args.threads, "worker thread count (0 = all cores)");
    cmd->add_option("--output-dir", args.output_dir, "override the configured output directory");
}

tkgaug::PipelineConfig make_config(const CommonArgs& args) {
    tkgaug::PipelineConfig c = tkgaug::load_config(args.config_path);
    if (args.seed) c.seed = *args.seed;
    if (args.threads) c.threads = *args.threads;
    if (args.output_dir) c.output_dir = *args.output_dir;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal knowledge-graph augmentation pipeline"};
    app.require_subcommand(1);

    CommonArgs ingest_args, augment_args, train_args, eval_args, recovery_args;
    bool no_augment = false;
    std::string checkpoint;

    CLI::App* ingest = app.add_subcommand("ingest", "canonicalize a raw dataset");
    add_common(ingest, ingest_args);

    CLI::App* augment = app.add_subcommand("augment", "generate and score candidate facts");
    add_common(augment, augment_args);

    CLI::App* train = app.add_subcommand("train", "train embeddings (two-stage or baseline)");
    add_common(train, train_args);
    train->add_flag("--no-augment", no_augment, "skip augmented data; single-stage baseline");

    CLI::App* eval = app.add_subcommand("eval", "rank test facts against a checkpoint");
    add_common(eval, eval_args);
    eval->add_option("--checkpoint", checkpoint, "model file (default: <output-dir>/model.bin)");

    CLI::App* recovery = app.add_subcommand("recovery", "holdout recovery-rate experiment");
    add_common(recovery, recovery_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            std::string summary = tkgaug::run_ingest(make_config(ingest_args));
            std::cout << summary << "\n";
        } else if (augment->parsed()) {
            tkgaug::AugmentOutcome o = tkgaug::run_augment(make_config(augment_args));
            std::cout << "candidates=" << o.candidates << " relation=" << o.from_relation
                      << " entity=" << o.from_entity << " time=" << o.from_time
                      << " false-negatives=" << o.false_negatives
                      << " hard-negatives=" << o.hard_negatives << "\n";
            if (o.candidates == 0)
                std::cerr << "warning: no candidates produced; filters may be too strict for "
                             "this dataset\n";
        } else if (train->parsed()) {
            tkgaug::PipelineConfig c = make_config(train_args);
            if (no_augment) c.no_augment = true;
            tkgaug::TrainOutcome o = tkgaug::run_train(c);
            std::cout << "best-valid-mrr=" << tkgaug::format_double(o.best_valid_mrr)
                      << " best-epoch=" << o.best_epoch << "\n";
        } else if (eval->parsed()) {
            std::optional<std::filesystem::path> ckpt;
            if (!checkpoint.empty()) ckpt = checkpoint;
            tkgaug::EvalOutcome o = tkgaug::run_eval(make_config(eval_args), ckpt);
            std::cout << "mrr=" << o.printed_mrr;
            for (const auto& [k, v] : o.report.hits)
                std::cout << " hits@" << k << "=" << tkgaug::format_double(v);
            std::cout << "\n";
        } else if (recovery->parsed()) {
            tkgaug::RecoveryOutcome o = tkgaug::run_recovery(make_config(recovery_args));
            std::cout << "removed=" << o.removed
                      << " best-rate=" << tkgaug::format_double(o.best_rate)
                      << " top_m=" << o.best_params.top_m
                      << " relation_window=" << o.best_params.relation_window
                      << " time_window=" << o.best_params.time_window << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
