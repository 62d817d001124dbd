#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dast/errors.hpp"

namespace dast {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

namespace detail {

struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
    // position on the tape that recorded this tensor, -1 for leaves
    int node = -1;
    std::uint64_t tape_generation = 0;
    const void* tape = nullptr;
};

} // namespace detail

/// Dense row-major tensor. Copies are shallow handles onto shared storage;
/// the values of a tensor are not mutated after the op that produced it.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v);
    static Tensor full(Shape shape, double v, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    std::size_t size() const { return d_->values.size(); }
    std::size_t rank() const { return d_->shape.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    const std::vector<double>& values() const { return d_->values; }
    std::vector<double>& values() { return d_->values; }
    const std::vector<double>& grad() const { return d_->grad; }
    std::vector<double>& grad() { return d_->grad; }

    double operator()(std::size_t i, std::size_t j) const;
    double item() const;

    bool requires_grad() const { return d_->requires_grad; }
    void set_requires_grad(bool rg) { d_->requires_grad = rg; }
    void zero_grad();

    /// Value-only copy detached from any tape.
    Tensor detached() const;

    detail::TensorData* data() const { return d_.get(); }

private:
    std::shared_ptr<detail::TensorData> d_;
    friend class Tape;
};

/// Records the backward rule of every op whose output needs gradients.
/// Construction makes the tape active on this thread; destruction (or
/// clear()) invalidates every node recorded so far.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void clear();
    std::size_t node_count() const { return nodes_.size(); }

    /// Accumulates d(loss)/d(t) into the grad buffer of every tensor
    /// reachable from the scalar loss.
    void backward(const Tensor& loss);

    int record(std::function<void()> backprop);
    void own_output(const Tensor& out);
    std::uint64_t generation() const { return generation_; }

private:
    std::vector<std::function<void()>> nodes_;
    std::vector<std::shared_ptr<detail::TensorData>> outputs_;
    std::uint64_t generation_ = 1;
    Tape* prev_ = nullptr;
};

// ---- ops -----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias);
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor dropout(const Tensor& a, double rate, bool training, std::mt19937_64& rng);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor sum(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor stack_scalars(const std::vector<Tensor>& xs);
/// sqrt on a scalar; gradient at 0 is defined as 0.
Tensor sqrt_scalar(const Tensor& a);
/// Sets forbidden (true) entries to -infinity; gradient passes through the rest.
Tensor apply_mask(const Tensor& a, const std::vector<std::uint8_t>& forbidden);

void backward(const Tensor& loss);

constexpr double kLayerNormEps = 1e-5;

} // namespace dast
