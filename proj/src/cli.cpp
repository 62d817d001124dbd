#include "dast/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "dast/checkpoint.hpp"
#include "dast/data.hpp"

namespace dast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_manifest(const std::string& path, const std::string& command, json config,
                    std::uint64_t fingerprint, const std::vector<std::string>& artifacts) {
    json m;
    m["command"] = command;
    m["config"] = std::move(config);
    m["dataset_fingerprint"] = fingerprint;
    m["artifacts"] = artifacts;
    m["timestamp"] = iso_timestamp();
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write '" + path + "'");
    os << m.dump(2) << "\n";
}

json model_config_json(const DastConfig& c) {
    return json{{"d_model", c.d_model},
                {"n_encoder_blocks", c.n_encoder_blocks},
                {"n_decoder_blocks", c.n_decoder_blocks},
                {"heads", c.heads},
                {"window", c.window},
                {"sensor_count", c.sensor_count},
                {"stat_rows", c.stat_rows},
                {"output_hidden", c.output_hidden},
                {"dropout", c.dropout},
                {"variant", variant_name(c.variant)},
                {"split_heads", c.split_heads}};
}

json train_config_json(const TrainConfig& c) {
    return json{{"epochs", c.epochs},       {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate}, {"dropout", c.dropout},
                {"seed", c.seed},           {"optimizer", c.rectified_adam ? "radam" : "adam"},
                {"shuffle", c.shuffle},     {"threads", c.threads}};
}

void require_cache_compat(const BuiltDataset& ds, const DastConfig& c) {
    const std::size_t k = ds.split.test.empty()
                              ? (ds.split.train.empty() ? 0 : ds.split.train.front().cols)
                              : ds.split.test.front().cols;
    if (c.sensor_count != k || c.window != ds.config.window || c.stat_rows != ds.config.stat_rows)
        throw ConfigError("model config (window " + std::to_string(c.window) + ", sensors " +
                          std::to_string(c.sensor_count) + ", stat rows " +
                          std::to_string(c.stat_rows) + ") does not match cache (window " +
                          std::to_string(ds.config.window) + ", sensors " + std::to_string(k) +
                          ", stat rows " + std::to_string(ds.config.stat_rows) + ")");
}

DastConfig adapt_to_cache(DastConfig c, const BuiltDataset& ds, bool window_overridden) {
    if (window_overridden && c.window != ds.config.window)
        throw ConfigError("requested window " + std::to_string(c.window) +
                          " does not match cache window " + std::to_string(ds.config.window));
    c.window = ds.config.window;
    c.stat_rows = ds.config.stat_rows;
    c.sensor_count = ds.split.train.empty() ? ds.split.test.front().cols
                                            : ds.split.train.front().cols;
    return c;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write '" + path + "'");
    os << "epoch,train_loss,test_rmse,test_score\n";
    os.precision(17);
    for (const EpochStats& st : history)
        os << st.epoch << "," << st.train_loss << "," << st.test_rmse << "," << st.test_score
           << "\n";
}

} // namespace

PreprocessResult cmd_preprocess(const PreprocessOptions& opt) {
    const fs::path dir(opt.dataset_dir);
    const std::string train_file = (dir / ("train_" + opt.subset + ".txt")).string();
    const std::string test_file = (dir / ("test_" + opt.subset + ".txt")).string();
    const std::string rul_file = (dir / ("RUL_" + opt.subset + ".txt")).string();
    for (const std::string& f : {train_file, test_file, rul_file})
        if (!fs::exists(f)) throw IoError("missing input file '" + f + "'");

    fs::create_directories(opt.out_dir);
    ParsedDataset parsed = parse_cmapss(train_file, test_file, rul_file);

    PreprocessResult r;
    r.train_engines = parsed.train.size();
    r.test_engines = parsed.test.size();

    DatasetBuildConfig cfg{opt.window, opt.stat_rows, opt.rul_max};
    BuiltDataset ds = build_dataset(std::move(parsed), cfg);
    r.train_windows = ds.split.train.size();
    r.test_windows = ds.split.test.size();
    r.fingerprint = ds.fingerprint;

    const fs::path cache = fs::path(opt.out_dir) /
                           ("cache_" + opt.subset + "_w" + std::to_string(opt.window) + ".bin");
    r.cache_path = cache.string();
    if (fs::exists(cache)) {
        try {
            if (load_dataset_cache(r.cache_path).fingerprint == ds.fingerprint)
                r.cache_reused = true;
        } catch (const IoError&) {
            // stale or foreign file, rewrite below
        }
    }
    if (!r.cache_reused) save_dataset_cache(ds, r.cache_path);

    const std::string manifest = (fs::path(opt.out_dir) / "preprocess_manifest.json").string();
    write_manifest(manifest, "preprocess",
                   json{{"dataset", opt.dataset_dir},
                        {"subset", opt.subset},
                        {"window", opt.window},
                        {"stat_rows", opt.stat_rows},
                        {"rul_max", opt.rul_max}},
                   ds.fingerprint, {r.cache_path});
    return r;
}

TrainCmdResult cmd_train(const TrainOptions& opt) {
    BuiltDataset ds = load_dataset_cache(opt.cache_path);
    DastConfig mc = adapt_to_cache(opt.model, ds, opt.window_overridden);
    mc.dropout = opt.train.dropout;
    mc.validate();
    require_cache_compat(ds, mc);
    fs::create_directories(opt.out_dir);

    ModelParams params = ModelParams::init(mc, opt.train.seed);
    TrainCmdResult out;
    out.result = train(params, mc, ds.split, opt.train, [](const EpochStats& st) {
        std::cout << "epoch " << st.epoch << "  train_loss " << st.train_loss << "  test_rmse "
                  << st.test_rmse << "  test_score " << st.test_score << "\n";
    });

    const fs::path dir(opt.out_dir);
    out.final_checkpoint = (dir / "final.ckpt").string();
    save_checkpoint(mc, params, out.final_checkpoint);
    out.best_checkpoint = (dir / "best.ckpt").string();
    restore_params(params, out.result.best_params);
    save_checkpoint(mc, params, out.best_checkpoint);
    out.history_path = (dir / "history.csv").string();
    write_history_csv(out.history_path, out.result.history);

    out.manifest_path = (dir / "train_manifest.json").string();
    write_manifest(out.manifest_path, "train",
                   json{{"cache", opt.cache_path},
                        {"model", model_config_json(mc)},
                        {"train", train_config_json(opt.train)}},
                   ds.fingerprint,
                   {out.best_checkpoint, out.final_checkpoint, out.history_path});
    return out;
}

EvaluateCmdResult cmd_evaluate(const EvaluateOptions& opt) {
    BuiltDataset ds = load_dataset_cache(opt.cache_path);
    Checkpoint ck = load_checkpoint(opt.checkpoint_path);
    require_cache_compat(ds, ck.config);
    fs::create_directories(opt.out_dir);

    EvaluateCmdResult out;
    out.evaluation = evaluate(ck.params, ck.config, ds.split.test, opt.threads);

    const fs::path dir(opt.out_dir);
    out.predictions_path = (dir / "predictions.csv").string();
    {
        std::ofstream os(out.predictions_path, std::ios::trunc);
        if (!os) throw IoError("cannot write '" + out.predictions_path + "'");
        os << "unit_id,true_rul,pred_rul\n";
        os.precision(17);
        for (const Prediction& p : out.evaluation.predictions)
            os << p.unit_id << "," << p.truth << "," << p.predicted << "\n";
    }
    out.metrics_path = (dir / "metrics.json").string();
    {
        json m{{"rmse", out.evaluation.metrics.rmse},
               {"score", out.evaluation.metrics.score},
               {"n", out.evaluation.metrics.n}};
        std::ofstream os(out.metrics_path, std::ios::trunc);
        if (!os) throw IoError("cannot write '" + out.metrics_path + "'");
        os << m.dump(2) << "\n";
    }
    out.manifest_path = (dir / "evaluate_manifest.json").string();
    write_manifest(out.manifest_path, "evaluate",
                   json{{"checkpoint", opt.checkpoint_path}, {"cache", opt.cache_path}},
                   ds.fingerprint, {out.metrics_path, out.predictions_path});
    return out;
}

ExportAttentionResult cmd_export_attention(const ExportAttentionOptions& opt) {
    BuiltDataset ds = load_dataset_cache(opt.cache_path);
    Checkpoint ck = load_checkpoint(opt.checkpoint_path);
    require_cache_compat(ds, ck.config);
    if (ck.config.variant != Variant::full)
        throw UsageError("attention export needs a full-variant checkpoint");
    fs::create_directories(opt.out_dir);

    auto in_range = [&](const WindowSample& w) {
        if (w.unit_id != opt.unit_id) return false;
        if (opt.cycle_begin == 0 && opt.cycle_end == 0) return true;
        return w.end_cycle >= opt.cycle_begin && w.end_cycle <= opt.cycle_end;
    };
    std::vector<const WindowSample*> selected;
    bool unit_seen = false;
    for (const auto& windows : {&ds.split.train, &ds.split.test})
        for (const WindowSample& w : *windows) {
            if (w.unit_id == opt.unit_id) unit_seen = true;
            if (in_range(w)) selected.push_back(&w);
        }
    if (!unit_seen)
        throw UsageError("unknown unit " + std::to_string(opt.unit_id));
    if (selected.empty())
        throw UsageError("no windows of unit " + std::to_string(opt.unit_id) +
                         " end in cycle range [" + std::to_string(opt.cycle_begin) + ", " +
                         std::to_string(opt.cycle_end) + "]");

    std::mt19937_64 rng(0);
    std::vector<AttentionRecord> sensor_records, time_records;
    for (const WindowSample* w : selected) {
        ForwardResult fr = forward(window_to_tensor(*w), ck.params, ck.config, false, rng);
        for (auto& r : fr.sensor_records) sensor_records.push_back(std::move(r));
        for (auto& r : fr.time_records) time_records.push_back(std::move(r));
    }

    ExportAttentionResult out;
    out.windows_used = selected.size();
    out.sensor_weights = average_attention(sensor_records);
    out.time_weights = average_attention(time_records);

    const fs::path dir(opt.out_dir);
    out.sensor_path = (dir / "sensor_weights.csv").string();
    {
        std::ofstream os(out.sensor_path, std::ios::trunc);
        if (!os) throw IoError("cannot write '" + out.sensor_path + "'");
        os << "sensor,weight\n";
        os.precision(17);
        const auto& names = selected_sensor_names();
        for (std::size_t i = 0; i < out.sensor_weights.size(); ++i) {
            const std::string name =
                i < names.size() && out.sensor_weights.size() == names.size()
                    ? names[i]
                    : "s" + std::to_string(i + 1);
            os << name << "," << out.sensor_weights[i] << "\n";
        }
    }
    out.time_path = (dir / "time_weights.csv").string();
    {
        std::ofstream os(out.time_path, std::ios::trunc);
        if (!os) throw IoError("cannot write '" + out.time_path + "'");
        os << "position,weight\n";
        os.precision(17);
        for (std::size_t i = 0; i < out.time_weights.size(); ++i)
            os << i << "," << out.time_weights[i] << "\n";
    }
    out.manifest_path = (dir / "export_attention_manifest.json").string();
    write_manifest(out.manifest_path, "export-attention",
                   json{{"checkpoint", opt.checkpoint_path},
                        {"cache", opt.cache_path},
                        {"unit", opt.unit_id},
                        {"cycle_begin", opt.cycle_begin},
                        {"cycle_end", opt.cycle_end},
                        {"windows_used", out.windows_used}},
                   ds.fingerprint, {out.sensor_path, out.time_path});
    return out;
}

AblateCmdResult cmd_ablate(const AblateOptions& opt) {
    BuiltDataset ds = load_dataset_cache(opt.cache_path);
    DastConfig base = adapt_to_cache(opt.base, ds, false);
    fs::create_directories(opt.out_dir);
    if (opt.seed_count == 0) throw UsageError("ablate: seed count must be >= 1");

    AblateCmdResult out;
    const Variant variants[] = {Variant::no_sensor_encoder, Variant::no_timestep_encoder,
                                Variant::series, Variant::full};
    for (Variant v : variants) {
        AblationRow row;
        row.variant = variant_name(v);
        try {
            std::vector<double> rmses, scores;
            for (std::size_t s = 0; s < opt.seed_count; ++s) {
                DastConfig mc = base;
                mc.variant = v;
                mc.dropout = opt.train.dropout;
                mc.validate();
                TrainConfig tc = opt.train;
                tc.seed = opt.train.seed + s;
                ModelParams params = ModelParams::init(mc, tc.seed);
                TrainResult tr = train(params, mc, ds.split, tc);
                restore_params(params, tr.best_params);
                Evaluation ev = evaluate(params, mc, ds.split.test, tc.threads);
                rmses.push_back(ev.metrics.rmse);
                scores.push_back(ev.metrics.score);
            }
            auto mean_std = [](const std::vector<double>& xs) {
                double m = 0.0;
                for (double x : xs) m += x;
                m /= static_cast<double>(xs.size());
                double var = 0.0;
                for (double x : xs) var += (x - m) * (x - m);
                var /= static_cast<double>(xs.size());
                return std::pair<double, double>{m, std::sqrt(var)};
            };
            std::tie(row.rmse_mean, row.rmse_std) = mean_std(rmses);
            std::tie(row.score_mean, row.score_std) = mean_std(scores);
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
            std::cerr << "variant " << row.variant << " failed: " << e.what() << "\n";
        }
        out.rows.push_back(std::move(row));
    }

    const fs::path dir(opt.out_dir);
    out.table_path = (dir / "ablation.csv").string();
    {
        std::ofstream os(out.table_path, std::ios::trunc);
        if (!os) throw IoError("cannot write '" + out.table_path + "'");
        os << "variant,rmse_mean,rmse_std,score_mean,score_std,status\n";
        os.precision(17);
        for (const AblationRow& r : out.rows) {
            if (r.ok)
                os << r.variant << "," << r.rmse_mean << "," << r.rmse_std << ","
                   << r.score_mean << "," << r.score_std << ",ok\n";
            else
                os << r.variant << ",,,,," << "error: " << r.error << "\n";
        }
    }
    out.manifest_path = (dir / "ablate_manifest.json").string();
    write_manifest(out.manifest_path, "ablate",
                   json{{"cache", opt.cache_path},
                        {"model", model_config_json(base)},
                        {"train", train_config_json(opt.train)},
                        {"seed_count", opt.seed_count}},
                   ds.fingerprint, {out.table_path});
    return out;
}

} // namespace dast::cli
