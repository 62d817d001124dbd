#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dast/tensor.hpp"

namespace dast {

/// Boolean attention mask; true entries mark forbidden query/key pairs.
struct Mask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> forbidden;

    bool at(std::size_t i, std::size_t j) const { return forbidden[i * cols + j] != 0; }
};

Mask causal_mask(std::size_t length);

struct AttentionParams {
    // per-head projections, each input_dim x head_dim
    std::vector<Tensor> wq, wk, wv;
    // (heads * head_dim) x model_dim
    Tensor wo;

    std::size_t head_count() const { return wq.size(); }
    std::vector<std::pair<std::string, Tensor>> named(const std::string& prefix) const;
};

/// One head's attention weight matrix captured during a forward pass.
struct AttentionRecord {
    int layer = 0;
    int head = 0;
    Tensor weights; // query positions x key positions, detached
};

struct AttentionOutput {
    Tensor output;
    Tensor weights;
};

/// softmax(q k^T / sqrt(D)) v with optional masking; D is the key width.
AttentionOutput scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                     const Mask* mask = nullptr);

/// Runs every head on the full-width inputs, concatenates along the feature
/// axis and projects by wo. Weight matrices are captured per head.
Tensor multi_head_attention(const Tensor& x_q, const Tensor& x_kv,
                            const AttentionParams& params, const Mask* mask,
                            int layer_id, std::vector<AttentionRecord>* records);

} // namespace dast
