#include <doctest.h>

#include <cmath>
#include <limits>

#include "dast/attention.hpp"
#include "grad_check.hpp"

using namespace dast;
using dast::testing::finite_diff_check;
using dast::testing::random_tensor;

namespace {

// Brute-force scalar-loop attention, kept independent of the tensor ops.
std::vector<double> brute_force_attention(const std::vector<double>& q,
                                          const std::vector<double>& k,
                                          const std::vector<double>& v, std::size_t lq,
                                          std::size_t lk, std::size_t d,
                                          const Mask* mask = nullptr) {
    std::vector<double> out(lq * d, 0.0);
    for (std::size_t i = 0; i < lq; ++i) {
        std::vector<double> scores(lk);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < lk; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += q[i * d + c] * k[j * d + c];
            s /= std::sqrt(static_cast<double>(d));
            if (mask && mask->at(i, j)) s = -std::numeric_limits<double>::infinity();
            scores[j] = s;
            mx = std::max(mx, s);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < lk; ++j) {
            scores[j] = std::exp(scores[j] - mx);
            z += scores[j];
        }
        for (std::size_t j = 0; j < lk; ++j)
            for (std::size_t c = 0; c < d; ++c)
                out[i * d + c] += scores[j] / z * v[j * d + c];
    }
    return out;
}

std::vector<double> matvec_project(const std::vector<double>& x, std::size_t rows,
                                   std::size_t in, const std::vector<double>& w,
                                   std::size_t out_dim) {
    std::vector<double> y(rows * out_dim, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < out_dim; ++j)
            for (std::size_t c = 0; c < in; ++c)
                y[i * out_dim + j] += x[i * in + c] * w[c * out_dim + j];
    return y;
}

} // namespace

TEST_CASE("single key attends with weight one") {
    Tensor q = Tensor::from({2, 3}, {1, 2, 3, -1, 0, 1});
    Tensor k = Tensor::from({1, 3}, {0.5, 0.5, 0.5});
    Tensor v = Tensor::from({1, 3}, {7, 8, 9});
    AttentionOutput out = scaled_dot_attention(q, k, v);
    CHECK(out.weights.values() == std::vector<double>{1, 1});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(out.output(i, j) == v.values()[j]);
}

TEST_CASE("identical keys give uniform weights") {
    Tensor q = Tensor::from({1, 2}, {1, 2});
    Tensor k = Tensor::from({3, 2}, {0.4, 0.6, 0.4, 0.6, 0.4, 0.6});
    Tensor v = Tensor::from({3, 2}, {0, 3, 6, 9, 3, 0});
    AttentionOutput out = scaled_dot_attention(q, k, v);
    for (double w : out.weights.values()) CHECK(w == doctest::Approx(1.0 / 3.0));
    CHECK(out.output(0, 0) == doctest::Approx(3.0));
    CHECK(out.output(0, 1) == doctest::Approx(4.0));
}

TEST_CASE("scaled dot attention matches the brute-force loop") {
    std::mt19937_64 rng(11);
    Tensor q = random_tensor({4, 8}, rng, false);
    Tensor k = random_tensor({4, 8}, rng, false);
    Tensor v = random_tensor({4, 8}, rng, false);
    AttentionOutput out = scaled_dot_attention(q, k, v);
    std::vector<double> expected =
        brute_force_attention(q.values(), k.values(), v.values(), 4, 4, 8);
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(std::abs(out.output.values()[i] - expected[i]) < 1e-10);
}

TEST_CASE("mask shape mismatch is rejected") {
    Tensor q = Tensor::from({2, 2}, {1, 0, 0, 1});
    Mask wrong = causal_mask(3);
    CHECK_THROWS_AS(scaled_dot_attention(q, q, q, &wrong), DimensionError);
}

TEST_CASE("causal mask forbids exactly the upper triangle") {
    Mask one = causal_mask(1);
    CHECK_FALSE(one.at(0, 0));

    Mask three = causal_mask(3);
    std::size_t forbidden = 0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            if (three.at(i, j)) ++forbidden;
            CHECK(three.at(i, j) == (j > i));
        }
    CHECK(forbidden == 3);
}

TEST_CASE("causal attention ignores future positions") {
    std::mt19937_64 rng(12);
    Mask mask = causal_mask(5);
    Tensor x = random_tensor({5, 4}, rng, false);
    AttentionOutput base = scaled_dot_attention(x, x, x, &mask);
    for (std::size_t i = 0; i + 1 < 5; ++i) {
        Tensor perturbed = x.detached();
        for (std::size_t r = i + 1; r < 5; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                perturbed.values()[r * 4 + c] += 10.0 * (static_cast<double>(r) + 1.0);
        AttentionOutput out = scaled_dot_attention(perturbed, perturbed, perturbed, &mask);
        for (std::size_t r = 0; r <= i; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                CHECK(out.output(r, c) == base.output(r, c));
    }
}

TEST_CASE("single full-width head with identity projections reduces to scaled dot attention") {
    std::mt19937_64 rng(13);
    Tensor x = random_tensor({3, 4}, rng, false);
    AttentionParams p;
    Tensor eye = Tensor::zeros({4, 4});
    for (std::size_t i = 0; i < 4; ++i) eye.values()[i * 4 + i] = 1.0;
    p.wq = {eye};
    p.wk = {eye};
    p.wv = {eye};
    p.wo = eye;
    std::vector<AttentionRecord> records;
    Tensor out = multi_head_attention(x, x, p, nullptr, 0, &records);
    AttentionOutput direct = scaled_dot_attention(x, x, x);
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out.values()[i] == doctest::Approx(direct.output.values()[i]).epsilon(1e-12));
    CHECK(records.size() == 1);
}

TEST_CASE("zero value projection gives zero output") {
    std::mt19937_64 rng(14);
    Tensor x = random_tensor({3, 4}, rng, false);
    AttentionParams p;
    p.wq = {random_tensor({4, 4}, rng, false)};
    p.wk = {random_tensor({4, 4}, rng, false)};
    p.wv = {Tensor::zeros({4, 4})};
    p.wo = random_tensor({4, 4}, rng, false);
    Tensor out = multi_head_attention(x, x, p, nullptr, 0, nullptr);
    for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("multi-head attention matches per-head brute-force composition") {
    std::mt19937_64 rng(15);
    const std::size_t l = 5, d = 6, h = 4;
    Tensor x = random_tensor({l, d}, rng, false);
    AttentionParams p;
    for (std::size_t i = 0; i < h; ++i) {
        p.wq.push_back(random_tensor({d, d}, rng, false));
        p.wk.push_back(random_tensor({d, d}, rng, false));
        p.wv.push_back(random_tensor({d, d}, rng, false));
    }
    p.wo = random_tensor({h * d, d}, rng, false);

    std::vector<AttentionRecord> records;
    Tensor out = multi_head_attention(x, x, p, nullptr, 7, &records);

    std::vector<double> heads(l * h * d, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        auto q = matvec_project(x.values(), l, d, p.wq[i].values(), d);
        auto k = matvec_project(x.values(), l, d, p.wk[i].values(), d);
        auto v = matvec_project(x.values(), l, d, p.wv[i].values(), d);
        auto head = brute_force_attention(q, k, v, l, l, d);
        for (std::size_t r = 0; r < l; ++r)
            for (std::size_t c = 0; c < d; ++c)
                heads[r * h * d + i * d + c] = head[r * d + c];
    }
    auto expected = matvec_project(heads, l, h * d, p.wo.values(), d);
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(std::abs(out.values()[i] - expected[i]) < 1e-10);

    CHECK(records.size() == h);
    for (const AttentionRecord& r : records) {
        CHECK(r.layer == 7);
        for (std::size_t row = 0; row < l; ++row) {
            double s = 0.0;
            for (std::size_t col = 0; col < l; ++col) s += r.weights(row, col);
            CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("permutation of key/value rows leaves outputs unchanged") {
    std::mt19937_64 rng(16);
    Tensor q = random_tensor({3, 4}, rng, false);
    Tensor kv = random_tensor({5, 4}, rng, false);
    AttentionOutput base = scaled_dot_attention(q, kv, kv);

    const std::size_t perm[5] = {3, 0, 4, 2, 1};
    Tensor shuffled = Tensor::zeros({5, 4});
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t c = 0; c < 4; ++c)
            shuffled.values()[i * 4 + c] = kv(perm[i], c);
    AttentionOutput permuted = scaled_dot_attention(q, shuffled, shuffled);
    for (std::size_t i = 0; i < base.output.size(); ++i)
        CHECK(permuted.output.values()[i] ==
              doctest::Approx(base.output.values()[i]).epsilon(1e-12));
}

TEST_CASE("gradients flow through the multi-head block") {
    std::mt19937_64 rng(17);
    const std::size_t l = 3, d = 4, h = 2;
    Tensor x = random_tensor({l, d}, rng);
    AttentionParams p;
    for (std::size_t i = 0; i < h; ++i) {
        p.wq.push_back(random_tensor({d, d}, rng));
        p.wk.push_back(random_tensor({d, d}, rng));
        p.wv.push_back(random_tensor({d, d}, rng));
    }
    p.wo = random_tensor({h * d, d}, rng);

    std::vector<std::pair<std::string, Tensor>> inputs = {{"x", x}};
    for (auto& kv : p.named("attn")) inputs.push_back(kv);
    auto report = finite_diff_check(
        [&] { return sum(multi_head_attention(x, x, p, nullptr, 0, nullptr)); }, inputs);
    CHECK(report.max_rel_err < 1e-3);
}
