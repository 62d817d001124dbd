#pragma once

#include <string>
#include <vector>

#include "dast/model.hpp"
#include "dast/trainer.hpp"

namespace dast::cli {

struct PreprocessOptions {
    std::string dataset_dir;
    std::string subset = "FD001";
    std::size_t window = 40;
    std::size_t stat_rows = 2;
    double rul_max = kDefaultRulMax;
    std::string out_dir = ".";
};

struct PreprocessResult {
    std::string cache_path;
    std::size_t train_engines = 0, test_engines = 0;
    std::size_t train_windows = 0, test_windows = 0;
    std::uint64_t fingerprint = 0;
    bool cache_reused = false;
};

PreprocessResult cmd_preprocess(const PreprocessOptions& opt);

struct TrainOptions {
    std::string cache_path;
    std::string out_dir = ".";
    DastConfig model;       // window/sensor_count/stat_rows are taken from the cache
    TrainConfig train;
    bool window_overridden = false; // when true, model.window must match the cache
};

struct TrainCmdResult {
    std::string best_checkpoint, final_checkpoint, history_path, manifest_path;
    TrainResult result;
};

TrainCmdResult cmd_train(const TrainOptions& opt);

struct EvaluateOptions {
    std::string checkpoint_path;
    std::string cache_path;
    std::string out_dir = ".";
    int threads = 1;
};

struct EvaluateCmdResult {
    std::string metrics_path, predictions_path, manifest_path;
    Evaluation evaluation;
};

EvaluateCmdResult cmd_evaluate(const EvaluateOptions& opt);

struct ExportAttentionOptions {
    std::string checkpoint_path;
    std::string cache_path;
    std::string out_dir = ".";
    int unit_id = 0;
    int cycle_begin = 0;  // inclusive window end-cycle range; 0,0 selects all
    int cycle_end = 0;
};

struct ExportAttentionResult {
    std::string sensor_path, time_path, manifest_path;
    std::vector<double> sensor_weights, time_weights;
    std::size_t windows_used = 0;
};

ExportAttentionResult cmd_export_attention(const ExportAttentionOptions& opt);

struct AblateOptions {
    std::string cache_path;
    std::string out_dir = ".";
    DastConfig base;
    TrainConfig train;
    std::size_t seed_count = 1;
};

struct AblationRow {
    std::string variant;
    bool ok = false;
    std::string error;
    double rmse_mean = 0.0, rmse_std = 0.0;
    double score_mean = 0.0, score_std = 0.0;
};

struct AblateCmdResult {
    std::string table_path, manifest_path;
    std::vector<AblationRow> rows;
};

AblateCmdResult cmd_ablate(const AblateOptions& opt);

} // namespace dast::cli
