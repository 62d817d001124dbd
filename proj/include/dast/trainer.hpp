#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "dast/data.hpp"
#include "dast/metrics.hpp"
#include "dast/model.hpp"
#include "dast/optimizer.hpp"

namespace dast {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    double dropout = 0.2;
    std::uint64_t seed = 0;
    bool rectified_adam = true;
    bool shuffle = true;
    int threads = 1;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0; // RMSE over the epoch's train-mode predictions
    double test_rmse = 0.0;
    double test_score = 0.0;
};

using ParamSnapshot = std::map<std::string, std::vector<double>>;

ParamSnapshot snapshot_params(const ModelParams& params);
void restore_params(ModelParams& params, const ParamSnapshot& snap);

struct TrainResult {
    std::vector<EpochStats> history;
    ParamSnapshot best_params;
    double best_rmse = 0.0;
    std::size_t best_epoch = 0;
};

/// sqrt of the mean squared error over a batch of scalar predictions;
/// the gradient at zero error is defined as 0.
Tensor rmse_loss(const std::vector<Tensor>& preds, const std::vector<double>& labels);

Tensor window_to_tensor(const WindowSample& w);

struct Prediction {
    int unit_id = 0;
    double truth = 0.0;
    double predicted = 0.0;
};

struct Evaluation {
    EvalResult metrics;
    std::vector<Prediction> predictions;
};

/// Eval-mode forward per test window; predictions are clipped below at 0.
Evaluation evaluate(const ModelParams& params, const DastConfig& config,
                    const std::vector<WindowSample>& test, int threads = 1);

TrainResult train(ModelParams& params, const DastConfig& model_config,
                  const DatasetSplit& data, const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch = nullptr);

} // namespace dast
