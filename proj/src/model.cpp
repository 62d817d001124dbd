#include "dast/model.hpp"

#include <cmath>

namespace dast {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::no_sensor_encoder: return "vanilla";
        case Variant::no_timestep_encoder: return "no-time";
        case Variant::series: return "series";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "full") return Variant::full;
    if (name == "vanilla" || name == "no-sensor") return Variant::no_sensor_encoder;
    if (name == "no-time") return Variant::no_timestep_encoder;
    if (name == "series") return Variant::series;
    throw ConfigError("unknown variant '" + name + "'");
}

void DastConfig::validate() const {
    if (d_model == 0 || heads == 0 || n_encoder_blocks == 0 || n_decoder_blocks == 0 ||
        window == 0 || sensor_count == 0 || output_hidden == 0)
        throw ConfigError("model dimensions must be positive");
    if (split_heads && d_model % heads != 0)
        throw ConfigError("split heads require d_model divisible by head count");
    if (dropout < 0.0 || dropout >= 1.0)
        throw ConfigError("dropout rate must be in [0,1)");
}

// ---- parameters ----------------------------------------------------------

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor t = Tensor::zeros({rows, cols}, true);
    for (double& v : t.values()) v = u(rng);
    return t;
}

Tensor zero_bias(std::size_t n) { return Tensor::zeros({n}, true); }

AttentionParams init_attention(const DastConfig& c, std::mt19937_64& rng) {
    AttentionParams p;
    const std::size_t hd = c.head_dim();
    for (std::size_t i = 0; i < c.heads; ++i) {
        p.wq.push_back(glorot(c.d_model, hd, rng));
        p.wk.push_back(glorot(c.d_model, hd, rng));
        p.wv.push_back(glorot(c.d_model, hd, rng));
    }
    p.wo = glorot(c.heads * hd, c.d_model, rng);
    return p;
}

EncoderLayerParams init_encoder_layer(const DastConfig& c, std::mt19937_64& rng) {
    EncoderLayerParams p;
    p.attn = init_attention(c, rng);
    p.ff_w1 = glorot(c.d_model, c.d_model, rng);
    p.ff_b1 = zero_bias(c.d_model);
    p.ff_w2 = glorot(c.d_model, c.d_model, rng);
    p.ff_b2 = zero_bias(c.d_model);
    p.ln1_gain = Tensor::full({c.d_model}, 1.0, true);
    p.ln1_bias = zero_bias(c.d_model);
    p.ln2_gain = Tensor::full({c.d_model}, 1.0, true);
    p.ln2_bias = zero_bias(c.d_model);
    return p;
}

DecoderLayerParams init_decoder_layer(const DastConfig& c, std::mt19937_64& rng) {
    DecoderLayerParams p;
    p.self_attn = init_attention(c, rng);
    p.cross_attn = init_attention(c, rng);
    p.ff_w1 = glorot(c.d_model, c.d_model, rng);
    p.ff_b1 = zero_bias(c.d_model);
    p.ff_w2 = glorot(c.d_model, c.d_model, rng);
    p.ff_b2 = zero_bias(c.d_model);
    p.ln1_gain = Tensor::full({c.d_model}, 1.0, true);
    p.ln1_bias = zero_bias(c.d_model);
    p.ln2_gain = Tensor::full({c.d_model}, 1.0, true);
    p.ln2_bias = zero_bias(c.d_model);
    p.ln3_gain = Tensor::full({c.d_model}, 1.0, true);
    p.ln3_bias = zero_bias(c.d_model);
    return p;
}

bool has_sensor_branch(Variant v) {
    return v == Variant::full || v == Variant::no_timestep_encoder || v == Variant::series;
}

bool has_time_branch(Variant v) {
    return v == Variant::full || v == Variant::no_sensor_encoder || v == Variant::series;
}

void append_encoder_layer_names(std::vector<std::pair<std::string, Tensor>>& out,
                                const std::string& prefix, const EncoderLayerParams& p) {
    for (auto& kv : p.attn.named(prefix + ".attn")) out.push_back(kv);
    out.emplace_back(prefix + ".ff_w1", p.ff_w1);
    out.emplace_back(prefix + ".ff_b1", p.ff_b1);
    out.emplace_back(prefix + ".ff_w2", p.ff_w2);
    out.emplace_back(prefix + ".ff_b2", p.ff_b2);
    out.emplace_back(prefix + ".ln1_gain", p.ln1_gain);
    out.emplace_back(prefix + ".ln1_bias", p.ln1_bias);
    out.emplace_back(prefix + ".ln2_gain", p.ln2_gain);
    out.emplace_back(prefix + ".ln2_bias", p.ln2_bias);
}

void append_decoder_layer_names(std::vector<std::pair<std::string, Tensor>>& out,
                                const std::string& prefix, const DecoderLayerParams& p) {
    for (auto& kv : p.self_attn.named(prefix + ".self_attn")) out.push_back(kv);
    for (auto& kv : p.cross_attn.named(prefix + ".cross_attn")) out.push_back(kv);
    out.emplace_back(prefix + ".ff_w1", p.ff_w1);
    out.emplace_back(prefix + ".ff_b1", p.ff_b1);
    out.emplace_back(prefix + ".ff_w2", p.ff_w2);
    out.emplace_back(prefix + ".ff_b2", p.ff_b2);
    out.emplace_back(prefix + ".ln1_gain", p.ln1_gain);
    out.emplace_back(prefix + ".ln1_bias", p.ln1_bias);
    out.emplace_back(prefix + ".ln2_gain", p.ln2_gain);
    out.emplace_back(prefix + ".ln2_bias", p.ln2_bias);
    out.emplace_back(prefix + ".ln3_gain", p.ln3_gain);
    out.emplace_back(prefix + ".ln3_bias", p.ln3_bias);
}

} // namespace

ModelParams ModelParams::init(const DastConfig& c, std::uint64_t seed) {
    c.validate();
    std::mt19937_64 rng(seed);
    ModelParams p;
    const std::size_t lt = c.time_len(), k = c.sensor_count, d = c.d_model;
    if (has_sensor_branch(c.variant)) {
        p.sensor_embed_w = glorot(lt, d, rng);
        p.sensor_embed_b = zero_bias(d);
        for (std::size_t i = 0; i < c.n_encoder_blocks; ++i)
            p.sensor_layers.push_back(init_encoder_layer(c, rng));
    }
    if (has_time_branch(c.variant)) {
        p.time_embed_w = glorot(k, d, rng);
        p.time_embed_b = zero_bias(d);
        for (std::size_t i = 0; i < c.n_encoder_blocks; ++i)
            p.time_layers.push_back(init_encoder_layer(c, rng));
    }
    if (c.variant == Variant::full)
        p.fusion_w = glorot(lt, k + lt, rng);
    p.dec_embed_w = glorot(k, d, rng);
    p.dec_embed_b = zero_bias(d);
    for (std::size_t i = 0; i < c.n_decoder_blocks; ++i)
        p.decoder_layers.push_back(init_decoder_layer(c, rng));
    p.out_w1 = glorot(lt * d, c.output_hidden, rng);
    p.out_b1 = zero_bias(c.output_hidden);
    p.out_w2 = glorot(c.output_hidden, 1, rng);
    p.out_b2 = zero_bias(1);
    return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    if (sensor_embed_w.defined()) {
        out.emplace_back("sensor_embed_w", sensor_embed_w);
        out.emplace_back("sensor_embed_b", sensor_embed_b);
        for (std::size_t i = 0; i < sensor_layers.size(); ++i)
            append_encoder_layer_names(out, "sensor_enc" + std::to_string(i), sensor_layers[i]);
    }
    if (time_embed_w.defined()) {
        out.emplace_back("time_embed_w", time_embed_w);
        out.emplace_back("time_embed_b", time_embed_b);
        for (std::size_t i = 0; i < time_layers.size(); ++i)
            append_encoder_layer_names(out, "time_enc" + std::to_string(i), time_layers[i]);
    }
    if (fusion_w.defined()) out.emplace_back("fusion_w", fusion_w);
    out.emplace_back("dec_embed_w", dec_embed_w);
    out.emplace_back("dec_embed_b", dec_embed_b);
    for (std::size_t i = 0; i < decoder_layers.size(); ++i)
        append_decoder_layer_names(out, "dec" + std::to_string(i), decoder_layers[i]);
    out.emplace_back("out_w1", out_w1);
    out.emplace_back("out_b1", out_b1);
    out.emplace_back("out_w2", out_w2);
    out.emplace_back("out_b2", out_b2);
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named_parameters()) {
        (void)name;
        n += t.size();
    }
    return n;
}

bool ModelParams::all_finite() const {
    for (const auto& [name, t] : named_parameters()) {
        (void)name;
        for (double v : t.values())
            if (!std::isfinite(v)) return false;
    }
    return true;
}

std::size_t expected_parameter_count(const DastConfig& c) {
    const std::size_t d = c.d_model, hd = c.head_dim(), h = c.heads;
    const std::size_t lt = c.time_len(), k = c.sensor_count;
    const std::size_t attn = h * 3 * d * hd + h * hd * d;
    const std::size_t ffn = 2 * (d * d + d);
    const std::size_t enc_layer = attn + ffn + 4 * d;
    const std::size_t dec_layer = 2 * attn + ffn + 6 * d;
    std::size_t n = 0;
    if (has_sensor_branch(c.variant)) n += lt * d + d + c.n_encoder_blocks * enc_layer;
    if (has_time_branch(c.variant)) n += k * d + d + c.n_encoder_blocks * enc_layer;
    if (c.variant == Variant::full) n += lt * (k + lt);
    n += k * d + d;                       // decoder input embedding
    n += c.n_decoder_blocks * dec_layer;
    n += lt * d * c.output_hidden + c.output_hidden + c.output_hidden + 1;
    return n;
}

// ---- forward pieces ------------------------------------------------------

Tensor positional_encoding(std::size_t length, std::size_t d_model) {
    if (length == 0 || d_model == 0)
        throw UsageError("positional_encoding: length and d_model must be >= 1");
    Tensor p = Tensor::zeros({length, d_model});
    for (std::size_t t = 0; t < length; ++t)
        for (std::size_t j = 0; j < d_model; ++j) {
            const double pair = static_cast<double>(j / 2 * 2);
            const double angle =
                static_cast<double>(t) /
                std::pow(10000.0, pair / static_cast<double>(d_model));
            p.values()[t * d_model + j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    return p;
}

namespace {

Tensor embed_with_position(const Tensor& input, const Tensor& w, const Tensor& b) {
    Tensor x = affine(input, w, b);
    return add(x, positional_encoding(x.rows(), x.cols()));
}

Tensor encoder_layer_forward(const Tensor& x_in, const EncoderLayerParams& p,
                             const DastConfig& c, bool training, std::mt19937_64& rng,
                             int layer_id, std::vector<AttentionRecord>* records) {
    Tensor a = multi_head_attention(x_in, x_in, p.attn, nullptr, layer_id, records);
    Tensor x = layer_norm(add(x_in, dropout(a, c.dropout, training, rng)), p.ln1_gain, p.ln1_bias);
    Tensor f = affine(relu(affine(x, p.ff_w1, p.ff_b1)), p.ff_w2, p.ff_b2);
    return layer_norm(add(x, dropout(f, c.dropout, training, rng)), p.ln2_gain, p.ln2_bias);
}

Tensor run_encoder(const Tensor& input, const Tensor& embed_w, const Tensor& embed_b,
                   const std::vector<EncoderLayerParams>& layers, const DastConfig& c,
                   bool training, std::mt19937_64& rng, std::vector<AttentionRecord>* records) {
    Tensor x = embed_with_position(input, embed_w, embed_b);
    for (std::size_t i = 0; i < layers.size(); ++i)
        x = encoder_layer_forward(x, layers[i], c, training, rng, static_cast<int>(i), records);
    return x;
}

Tensor decoder_layer_forward(const Tensor& x_in, const Tensor& memory,
                             const DecoderLayerParams& p, const Mask& causal,
                             const DastConfig& c, bool training, std::mt19937_64& rng) {
    Tensor a = multi_head_attention(x_in, x_in, p.self_attn, &causal, 0, nullptr);
    Tensor x = layer_norm(add(x_in, dropout(a, c.dropout, training, rng)), p.ln1_gain, p.ln1_bias);
    Tensor cr = multi_head_attention(x, memory, p.cross_attn, nullptr, 0, nullptr);
    x = layer_norm(add(x, dropout(cr, c.dropout, training, rng)), p.ln2_gain, p.ln2_bias);
    Tensor f = affine(relu(affine(x, p.ff_w1, p.ff_b1)), p.ff_w2, p.ff_b2);
    return layer_norm(add(x, dropout(f, c.dropout, training, rng)), p.ln3_gain, p.ln3_bias);
}

void check_window_shape(const Tensor& window_time, const DastConfig& c) {
    if (window_time.rank() != 2 || window_time.rows() != c.time_len() ||
        window_time.cols() != c.sensor_count)
        throw DimensionError("window shape " + shape_str(window_time.shape()) +
                             " does not match config (" + std::to_string(c.time_len()) + "x" +
                             std::to_string(c.sensor_count) + ")");
}

} // namespace

EncodeResult encode_sensor(const Tensor& window_sensor, const ModelParams& params,
                           const DastConfig& config, bool training, std::mt19937_64& rng) {
    if (window_sensor.rows() != config.sensor_count || window_sensor.cols() != config.time_len())
        throw DimensionError("sensor-oriented window " + shape_str(window_sensor.shape()) +
                             " does not match config");
    EncodeResult r;
    r.features = run_encoder(window_sensor, params.sensor_embed_w, params.sensor_embed_b,
                             params.sensor_layers, config, training, rng, &r.records);
    return r;
}

EncodeResult encode_timestep(const Tensor& window_time, const ModelParams& params,
                             const DastConfig& config, bool training, std::mt19937_64& rng) {
    check_window_shape(window_time, config);
    EncodeResult r;
    r.features = run_encoder(window_time, params.time_embed_w, params.time_embed_b,
                             params.time_layers, config, training, rng, &r.records);
    return r;
}

Tensor fuse(const Tensor& f_s, const Tensor& f_t, const Tensor& w_f) {
    if (f_s.cols() != f_t.cols())
        throw DimensionError("fuse: feature widths differ, " + shape_str(f_s.shape()) + " vs " +
                             shape_str(f_t.shape()));
    Tensor stacked = concat_rows(f_s, f_t);
    if (w_f.cols() != stacked.rows())
        throw DimensionError("fuse: w_f " + shape_str(w_f.shape()) +
                             " incompatible with stacked features " + shape_str(stacked.shape()));
    return matmul(w_f, stacked);
}

Tensor decode(const Tensor& memory, const Tensor& window_time, const ModelParams& params,
              const DastConfig& config, bool training, std::mt19937_64& rng) {
    check_window_shape(window_time, config);
    Tensor x = embed_with_position(window_time, params.dec_embed_w, params.dec_embed_b);
    const Mask causal = causal_mask(x.rows());
    for (const DecoderLayerParams& layer : params.decoder_layers)
        x = decoder_layer_forward(x, memory, layer, causal, config, training, rng);
    Tensor flat = reshape(x, {1, x.rows() * x.cols()});
    Tensor hidden = relu(affine(flat, params.out_w1, params.out_b1));
    return reshape(affine(hidden, params.out_w2, params.out_b2), {1});
}

ForwardResult forward(const Tensor& window_time, const ModelParams& params,
                      const DastConfig& config, bool training, std::mt19937_64& rng) {
    check_window_shape(window_time, config);
    ForwardResult r;
    Tensor memory;
    switch (config.variant) {
        case Variant::full: {
            EncodeResult fs = encode_sensor(transpose(window_time), params, config, training, rng);
            EncodeResult ft = encode_timestep(window_time, params, config, training, rng);
            r.sensor_records = std::move(fs.records);
            r.time_records = std::move(ft.records);
            memory = fuse(fs.features, ft.features, params.fusion_w);
            break;
        }
        case Variant::no_sensor_encoder: {
            EncodeResult ft = encode_timestep(window_time, params, config, training, rng);
            r.time_records = std::move(ft.records);
            memory = ft.features;
            break;
        }
        case Variant::no_timestep_encoder: {
            EncodeResult fs = encode_sensor(transpose(window_time), params, config, training, rng);
            r.sensor_records = std::move(fs.records);
            memory = fs.features;
            break;
        }
        case Variant::series: {
            EncodeResult fs = encode_sensor(transpose(window_time), params, config, training, rng);
            r.sensor_records = std::move(fs.records);
            // re-orient sensor features so the time-step encoder consumes
            // them as a sequence of d_model rows with sensor_count columns
            Tensor reoriented = transpose(fs.features);
            memory = run_encoder(reoriented, params.time_embed_w, params.time_embed_b,
                                 params.time_layers, config, training, rng, &r.time_records);
            break;
        }
    }
    r.prediction = decode(memory, window_time, params, config, training, rng);
    return r;
}

Tensor decoder_self_attention_repr(const Tensor& window_time, const ModelParams& params,
                                   const DastConfig& config) {
    check_window_shape(window_time, config);
    std::mt19937_64 rng(0);
    Tensor x = embed_with_position(window_time, params.dec_embed_w, params.dec_embed_b);
    const Mask causal = causal_mask(x.rows());
    const DecoderLayerParams& p = params.decoder_layers.front();
    Tensor a = multi_head_attention(x, x, p.self_attn, &causal, 0, nullptr);
    return layer_norm(add(x, a), p.ln1_gain, p.ln1_bias);
}

std::vector<double> average_attention(const std::vector<AttentionRecord>& records) {
    if (records.empty()) throw UsageError("average_attention: no records");
    const std::size_t keys = records.front().weights.cols();
    std::vector<double> acc(keys, 0.0);
    std::size_t rows_total = 0;
    for (const AttentionRecord& r : records) {
        if (r.weights.cols() != keys)
            throw DimensionError("average_attention: inconsistent key counts");
        const std::size_t m = r.weights.rows();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < keys; ++j)
                acc[j] += r.weights(i, j);
        rows_total += m;
    }
    for (double& v : acc) v /= static_cast<double>(rows_total);
    return acc;
}

} // namespace dast
