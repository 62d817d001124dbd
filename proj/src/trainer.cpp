#include "dast/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace dast {

ParamSnapshot snapshot_params(const ModelParams& params) {
    ParamSnapshot snap;
    for (const auto& [name, t] : params.named_parameters()) snap[name] = t.values();
    return snap;
}

void restore_params(ModelParams& params, const ParamSnapshot& snap) {
    for (auto& [name, t] : params.named_parameters()) {
        auto it = snap.find(name);
        if (it == snap.end() || it->second.size() != t.size())
            throw ConfigError("parameter snapshot does not match model: '" + name + "'");
        t.values() = it->second;
    }
}

Tensor rmse_loss(const std::vector<Tensor>& preds, const std::vector<double>& labels) {
    if (preds.empty() || preds.size() != labels.size())
        throw UsageError("rmse_loss: need equal nonempty prediction/label counts");
    Tensor p = stack_scalars(preds);
    Tensor y = Tensor::from({labels.size()}, labels);
    Tensor e = sub(p, y);
    Tensor mse = scale(sum(mul(e, e)), 1.0 / static_cast<double>(labels.size()));
    return sqrt_scalar(mse);
}

Tensor window_to_tensor(const WindowSample& w) {
    return Tensor::from({w.rows, w.cols}, w.values);
}

Evaluation evaluate(const ModelParams& params, const DastConfig& config,
                    const std::vector<WindowSample>& test, int threads) {
    Evaluation ev;
    ev.predictions.resize(test.size());
    auto run_range = [&](std::size_t begin, std::size_t end) {
        std::mt19937_64 rng(0); // unused in eval mode
        for (std::size_t i = begin; i < end; ++i) {
            Tensor input = window_to_tensor(test[i]);
            ForwardResult fr = forward(input, params, config, false, rng);
            ev.predictions[i] = {test[i].unit_id, test[i].label,
                                 std::max(0.0, fr.prediction.item())};
        }
    };
    if (threads <= 1 || test.size() < 2) {
        run_range(0, test.size());
    } else {
        const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), test.size());
        std::vector<std::thread> workers;
        const std::size_t chunk = (test.size() + nt - 1) / nt;
        for (std::size_t t = 0; t < nt; ++t)
            workers.emplace_back(run_range, t * chunk, std::min(test.size(), (t + 1) * chunk));
        for (std::thread& w : workers) w.join();
    }
    if (!test.empty()) {
        std::vector<double> pred(test.size()), truth(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) {
            pred[i] = ev.predictions[i].predicted;
            truth[i] = ev.predictions[i].truth;
        }
        ev.metrics = evaluate_metrics(pred, truth);
    }
    return ev;
}

TrainResult train(ModelParams& params, const DastConfig& model_config,
                  const DatasetSplit& data, const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch) {
    if (data.train.empty()) throw UsageError("train: empty training split");
    if (config.batch_size == 0) throw ConfigError("train: batch size must be positive");

    DastConfig mc = model_config;
    mc.dropout = config.dropout;
    mc.validate();

    RAdam optimizer(params.named_parameters(),
                    {config.learning_rate, 0.9, 0.999, 1e-8, config.rectified_adam});
    std::mt19937_64 rng(config.seed);

    TrainResult result;
    result.best_rmse = std::numeric_limits<double>::infinity();
    result.best_params = snapshot_params(params);

    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
        double sq_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            Tape tape;
            std::vector<Tensor> preds;
            std::vector<double> labels;
            preds.reserve(end - start);
            labels.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const WindowSample& w = data.train[order[i]];
                ForwardResult fr = forward(window_to_tensor(w), params, mc, true, rng);
                preds.push_back(fr.prediction);
                labels.push_back(w.label);
            }
            Tensor loss = rmse_loss(preds, labels);
            if (!std::isfinite(loss.item()))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(start / config.batch_size));
            tape.backward(loss);
            optimizer.step();
            optimizer.zero_grad();
            for (std::size_t i = 0; i < preds.size(); ++i) {
                const double d = preds[i].item() - labels[i];
                sq_sum += d * d;
            }
        }

        EpochStats st;
        st.epoch = epoch;
        st.train_loss = std::sqrt(sq_sum / static_cast<double>(order.size()));
        double selection_metric = st.train_loss;
        if (!data.test.empty()) {
            Evaluation ev = evaluate(params, mc, data.test, config.threads);
            st.test_rmse = ev.metrics.rmse;
            st.test_score = ev.metrics.score;
            selection_metric = st.test_rmse;
        }
        result.history.push_back(st);
        if (selection_metric < result.best_rmse) {
            result.best_rmse = selection_metric;
            result.best_epoch = epoch;
            result.best_params = snapshot_params(params);
        }
        if (on_epoch) on_epoch(st);
    }
    return result;
}

} // namespace dast
