#include "dast/attention.hpp"

#include <cmath>

namespace dast {

Mask causal_mask(std::size_t length) {
    if (length < 1) throw UsageError("causal_mask: length must be >= 1");
    Mask m;
    m.rows = m.cols = length;
    m.forbidden.assign(length * length, 0);
    for (std::size_t i = 0; i < length; ++i)
        for (std::size_t j = i + 1; j < length; ++j)
            m.forbidden[i * length + j] = 1;
    return m;
}

std::vector<std::pair<std::string, Tensor>> AttentionParams::named(const std::string& prefix) const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t h = 0; h < wq.size(); ++h) {
        const std::string hs = std::to_string(h);
        out.emplace_back(prefix + ".wq" + hs, wq[h]);
        out.emplace_back(prefix + ".wk" + hs, wk[h]);
        out.emplace_back(prefix + ".wv" + hs, wv[h]);
    }
    out.emplace_back(prefix + ".wo", wo);
    return out;
}

AttentionOutput scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                     const Mask* mask) {
    const std::size_t lq = q.rows(), d = q.cols(), lk = k.rows();
    if (k.cols() != d || v.rows() != lk)
        throw DimensionError("scaled_dot_attention: q " + shape_str(q.shape()) + ", k " +
                             shape_str(k.shape()) + ", v " + shape_str(v.shape()));
    if (mask && (mask->rows != lq || mask->cols != lk))
        throw DimensionError("scaled_dot_attention: mask " + std::to_string(mask->rows) + "x" +
                             std::to_string(mask->cols) + " does not match scores " +
                             std::to_string(lq) + "x" + std::to_string(lk));
    Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d)));
    if (mask) scores = apply_mask(scores, mask->forbidden);
    Tensor weights = softmax_rows(scores);
    return {matmul(weights, v), weights};
}

Tensor multi_head_attention(const Tensor& x_q, const Tensor& x_kv,
                            const AttentionParams& params, const Mask* mask,
                            int layer_id, std::vector<AttentionRecord>* records) {
    const std::size_t h = params.head_count();
    if (h == 0) throw ConfigError("multi_head_attention: no heads");
    Tensor heads;
    for (std::size_t i = 0; i < h; ++i) {
        Tensor q = matmul(x_q, params.wq[i]);
        Tensor k = matmul(x_kv, params.wk[i]);
        Tensor v = matmul(x_kv, params.wv[i]);
        AttentionOutput out = scaled_dot_attention(q, k, v, mask);
        if (records)
            records->push_back({layer_id, static_cast<int>(i), out.weights.detached()});
        heads = i == 0 ? out.output : concat_cols(heads, out.output);
    }
    return matmul(heads, params.wo);
}

} // namespace dast
