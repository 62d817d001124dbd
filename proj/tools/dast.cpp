#include <iostream>

#include <CLI11.hpp>

#include "dast/cli.hpp"

namespace {

void add_model_flags(CLI::App* cmd, dast::DastConfig& model, std::string& variant) {
    cmd->add_option("--variant", variant, "full, vanilla, no-time or series")
        ->check(CLI::IsMember({"full", "vanilla", "no-time", "series"}));
    cmd->add_option("--d-model", model.d_model, "embedding width");
    cmd->add_option("--heads", model.heads, "attention heads");
    cmd->add_option("--enc-blocks", model.n_encoder_blocks, "encoder blocks per branch");
    cmd->add_option("--dec-blocks", model.n_decoder_blocks, "decoder blocks");
    cmd->add_flag("--split-heads", model.split_heads,
                  "use d_model/h head width instead of full-width heads");
}

void add_train_flags(CLI::App* cmd, dast::TrainConfig& train, std::string& optimizer) {
    cmd->add_option("--seed", train.seed, "rng seed");
    cmd->add_option("--epochs", train.epochs, "training epochs");
    cmd->add_option("--batch", train.batch_size, "mini-batch size");
    cmd->add_option("--lr", train.learning_rate, "learning rate");
    cmd->add_option("--dropout", train.dropout, "dropout rate");
    cmd->add_option("--threads", train.threads, "evaluation threads (1 keeps runs deterministic)");
    cmd->add_option("--optimizer", optimizer, "radam or adam")
        ->check(CLI::IsMember({"radam", "adam"}));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DAST remaining-useful-life predictor"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a TOML file; flags override it")
        ->configurable(false);

    dast::cli::PreprocessOptions pre;
    auto* pre_cmd = app.add_subcommand("preprocess", "build a preprocessed dataset cache")->configurable();
    pre_cmd->add_option("--dataset", pre.dataset_dir, "directory with C-MAPSS text files")
        ->required();
    pre_cmd->add_option("--subset", pre.subset, "FD001..FD004 or PHM08");
    pre_cmd->add_option("--window", pre.window, "sliding window length T_w");
    pre_cmd->add_option("--rul-max", pre.rul_max, "RUL label cap");
    pre_cmd->add_option("--out", pre.out_dir, "output directory");

    dast::cli::TrainOptions tr;
    std::string tr_variant = "full", tr_optimizer = "radam";
    auto* tr_cmd = app.add_subcommand("train", "train a model on a cached dataset")->configurable();
    tr_cmd->add_option("--cache", tr.cache_path, "dataset cache file")->required();
    auto* tr_window = tr_cmd->add_option("--window", tr.model.window,
                                         "expected window length (must match the cache)");
    add_model_flags(tr_cmd, tr.model, tr_variant);
    add_train_flags(tr_cmd, tr.train, tr_optimizer);
    tr_cmd->add_option("--out", tr.out_dir, "output directory");

    dast::cli::EvaluateOptions ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split")->configurable();
    ev_cmd->add_option("--checkpoint", ev.checkpoint_path, "model checkpoint")->required();
    ev_cmd->add_option("--cache", ev.cache_path, "dataset cache file")->required();
    ev_cmd->add_option("--threads", ev.threads, "evaluation threads");
    ev_cmd->add_option("--out", ev.out_dir, "output directory");

    dast::cli::ExportAttentionOptions ex;
    auto* ex_cmd = app.add_subcommand("export-attention", "export averaged attention weights")->configurable();
    ex_cmd->add_option("--checkpoint", ex.checkpoint_path, "model checkpoint")->required();
    ex_cmd->add_option("--cache", ex.cache_path, "dataset cache file")->required();
    ex_cmd->add_option("--unit", ex.unit_id, "engine unit id")->required();
    ex_cmd->add_option("--cycle-begin", ex.cycle_begin, "first window end-cycle (0 = all)");
    ex_cmd->add_option("--cycle-end", ex.cycle_end, "last window end-cycle (0 = all)");
    ex_cmd->add_option("--out", ex.out_dir, "output directory");

    dast::cli::AblateOptions ab;
    std::string ab_variant = "full", ab_optimizer = "radam";
    auto* ab_cmd = app.add_subcommand("ablate", "train and evaluate all four variants")->configurable();
    ab_cmd->add_option("--cache", ab.cache_path, "dataset cache file")->required();
    ab_cmd->add_option("--seeds", ab.seed_count, "number of seeds per variant");
    add_model_flags(ab_cmd, ab.base, ab_variant);
    add_train_flags(ab_cmd, ab.train, ab_optimizer);
    ab_cmd->add_option("--out", ab.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pre_cmd->parsed()) {
            auto r = dast::cli::cmd_preprocess(pre);
            std::cout << "cache: " << r.cache_path << (r.cache_reused ? " (reused)" : "") << "\n"
                      << "train engines: " << r.train_engines
                      << ", windows: " << r.train_windows << "\n"
                      << "test engines: " << r.test_engines
                      << ", windows: " << r.test_windows << "\n"
                      << "fingerprint: " << r.fingerprint << "\n";
        } else if (tr_cmd->parsed()) {
            tr.model.variant = dast::variant_from_name(tr_variant);
            tr.train.rectified_adam = tr_optimizer == "radam";
            tr.window_overridden = tr_window->count() > 0;
            auto r = dast::cli::cmd_train(tr);
            std::cout << "best checkpoint: " << r.best_checkpoint << " (epoch "
                      << r.result.best_epoch << ", rmse " << r.result.best_rmse << ")\n"
                      << "history: " << r.history_path << "\n";
        } else if (ev_cmd->parsed()) {
            auto r = dast::cli::cmd_evaluate(ev);
            std::cout << "rmse: " << r.evaluation.metrics.rmse
                      << "  score: " << r.evaluation.metrics.score
                      << "  n: " << r.evaluation.metrics.n << "\n"
                      << "predictions: " << r.predictions_path << "\n";
        } else if (ex_cmd->parsed()) {
            auto r = dast::cli::cmd_export_attention(ex);
            std::cout << "windows used: " << r.windows_used << "\n"
                      << "sensor weights: " << r.sensor_path << "\n"
                      << "time weights: " << r.time_path << "\n";
        } else if (ab_cmd->parsed()) {
            ab.base.variant = dast::variant_from_name(ab_variant);
            ab.train.rectified_adam = ab_optimizer == "radam";
            auto r = dast::cli::cmd_ablate(ab);
            for (const auto& row : r.rows) {
                if (row.ok)
                    std::cout << row.variant << "  rmse " << row.rmse_mean << " +- "
                              << row.rmse_std << "  score " << row.score_mean << " +- "
                              << row.score_std << "\n";
                else
                    std::cout << row.variant << "  FAILED: " << row.error << "\n";
            }
            std::cout << "table: " << r.table_path << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
