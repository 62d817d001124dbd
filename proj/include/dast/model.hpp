#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dast/attention.hpp"
#include "dast/tensor.hpp"

namespace dast {

enum class Variant {
    full,                // both encoders in parallel, fused memory
    no_sensor_encoder,   // time-step encoder only (vanilla Transformer)
    no_timestep_encoder, // sensor encoder only
    series,              // sensor encoder feeding the time-step encoder
};

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct DastConfig {
    std::size_t d_model = 64;
    std::size_t n_encoder_blocks = 2;
    std::size_t n_decoder_blocks = 1;
    std::size_t heads = 4;
    std::size_t window = 40;      // T_w
    std::size_t sensor_count = 14;
    std::size_t stat_rows = 2;
    std::size_t output_hidden = 64;
    double dropout = 0.2;
    Variant variant = Variant::full;
    // false keeps each head at full d_model width with wo of (h*d_model) x d_model;
    // true selects the conventional d_model/h split
    bool split_heads = false;

    std::size_t time_len() const { return window + stat_rows; }
    std::size_t head_dim() const { return split_heads ? d_model / heads : d_model; }
    void validate() const;
    bool operator==(const DastConfig&) const = default;
};

struct EncoderLayerParams {
    AttentionParams attn;
    Tensor ff_w1, ff_b1, ff_w2, ff_b2;
    Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};

struct DecoderLayerParams {
    AttentionParams self_attn, cross_attn;
    Tensor ff_w1, ff_b1, ff_w2, ff_b2;
    Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias, ln3_gain, ln3_bias;
};

struct ModelParams {
    Tensor sensor_embed_w, sensor_embed_b; // time_len x d_model
    Tensor time_embed_w, time_embed_b;     // sensor_count x d_model
    Tensor dec_embed_w, dec_embed_b;       // sensor_count x d_model
    std::vector<EncoderLayerParams> sensor_layers, time_layers;
    Tensor fusion_w; // time_len x (sensor_count + time_len)
    std::vector<DecoderLayerParams> decoder_layers;
    Tensor out_w1, out_b1, out_w2, out_b2;

    static ModelParams init(const DastConfig& config, std::uint64_t seed);

    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
    std::size_t parameter_count() const;
    bool all_finite() const;
};

/// Analytic parameter count implied by the config; asserted against the
/// actual count in tests.
std::size_t expected_parameter_count(const DastConfig& config);

/// P[t,2k] = sin(t / 10000^(2k/D)), P[t,2k+1] = cos(t / 10000^(2k/D)).
Tensor positional_encoding(std::size_t length, std::size_t d_model);

struct EncodeResult {
    Tensor features;
    std::vector<AttentionRecord> records;
};

EncodeResult encode_sensor(const Tensor& window_sensor_oriented, const ModelParams& params,
                           const DastConfig& config, bool training, std::mt19937_64& rng);
EncodeResult encode_timestep(const Tensor& window_time_oriented, const ModelParams& params,
                             const DastConfig& config, bool training, std::mt19937_64& rng);

/// Stacks F_s above F_t along the sequence axis, then mixes across that axis
/// with w_f of shape L_t x (k + L_t) to produce the decoder memory.
Tensor fuse(const Tensor& f_s, const Tensor& f_t, const Tensor& w_f);

Tensor decode(const Tensor& memory, const Tensor& window_time_oriented,
              const ModelParams& params, const DastConfig& config, bool training,
              std::mt19937_64& rng);

struct ForwardResult {
    Tensor prediction; // scalar
    std::vector<AttentionRecord> sensor_records, time_records;
};

/// Full model forward on one window in time orientation (time_len x sensor_count).
ForwardResult forward(const Tensor& window_time_oriented, const ModelParams& params,
                      const DastConfig& config, bool training, std::mt19937_64& rng);

/// Output of the first decoder layer's masked self-attention sublayer
/// (after Add & Norm), eval mode. Used to test causality in isolation.
Tensor decoder_self_attention_repr(const Tensor& window_time_oriented,
                                   const ModelParams& params, const DastConfig& config);

/// Column means of the captured weight matrices over layers, heads and
/// windows; the result is a probability vector over key positions.
std::vector<double> average_attention(const std::vector<AttentionRecord>& records);

} // namespace dast
