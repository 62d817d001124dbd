#include "dast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace dast {

namespace {

thread_local Tape* g_active_tape = nullptr;

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

} // namespace

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

// ---- Tensor --------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    Tensor t;
    t.d_ = std::make_shared<detail::TensorData>();
    t.d_->shape = std::move(shape);
    std::size_t n = shape_numel(t.d_->shape);
    t.d_->values.assign(n, 0.0);
    t.d_->grad.assign(n, 0.0);
    t.d_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size())
        throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                             std::to_string(values.size()) + " values");
    Tensor t;
    t.d_ = std::make_shared<detail::TensorData>();
    t.d_->shape = std::move(shape);
    t.d_->grad.assign(values.size(), 0.0);
    t.d_->values = std::move(values);
    t.d_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.values().begin(), t.values().end(), v);
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rank-2 tensor expected, got " + shape_str(shape()));
    return d_->shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("rank-2 tensor expected, got " + shape_str(shape()));
    return d_->shape[1];
}

double Tensor::operator()(std::size_t i, std::size_t j) const {
    return d_->values[i * cols() + j];
}

double Tensor::item() const {
    if (size() != 1) throw DimensionError("scalar expected, got " + shape_str(shape()));
    return d_->values[0];
}

void Tensor::zero_grad() {
    std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
}

Tensor Tensor::detached() const {
    return Tensor::from(d_->shape, d_->values);
}

// ---- Tape ----------------------------------------------------------------

Tape::Tape() {
    prev_ = g_active_tape;
    g_active_tape = this;
}

Tape::~Tape() {
    g_active_tape = prev_;
}

Tape* Tape::active() { return g_active_tape; }

void Tape::clear() {
    nodes_.clear();
    outputs_.clear();
    ++generation_;
}

int Tape::record(std::function<void()> backprop) {
    nodes_.push_back(std::move(backprop));
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::own_output(const Tensor& out) {
    outputs_.push_back(out.d_);
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1)
        throw DimensionError("backward requires a scalar loss, got " + shape_str(loss.shape()));
    auto* d = loss.data();
    if (d->tape != this || d->tape_generation != generation_ || d->node < 0)
        throw UsageError("loss tensor is not recorded on the active tape");
    // each pass re-derives intermediate grads from scratch; only leaves accumulate
    for (const auto& o : outputs_) std::fill(o->grad.begin(), o->grad.end(), 0.0);
    d->grad[0] += 1.0;
    for (int i = d->node; i >= 0; --i) nodes_[static_cast<std::size_t>(i)]();
}

void backward(const Tensor& loss) {
    Tape* t = Tape::active();
    if (!t) throw UsageError("no active tape for backward()");
    t->backward(loss);
}

// ---- op plumbing ---------------------------------------------------------

namespace {

bool tracking(std::initializer_list<const Tensor*> inputs) {
    if (!g_active_tape) return false;
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

void mark_recorded(Tensor& out, int node) {
    auto* d = out.data();
    d->requires_grad = true;
    d->node = node;
    d->tape = g_active_tape;
    d->tape_generation = g_active_tape->generation();
    g_active_tape->own_output(out);
}

void require_matrix(const Tensor& t, const char* what) {
    if (t.rank() != 2)
        throw DimensionError(std::string(what) + ": rank-2 tensor expected, got " +
                             shape_str(t.shape()));
}

} // namespace

// ---- ops -----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul lhs");
    require_matrix(b, "matmul rhs");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k)
        throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    Tensor c = Tensor::zeros({m, n});
    const double* av = a.values().data();
    const double* bv = b.values().data();
    double* cv = c.values().data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            const double* brow = bv + p * n;
            double* crow = cv + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    if (tracking({&a, &b})) {
        Tensor ac = a, bc = b, cc = c;
        int node = g_active_tape->record([ac, bc, cc, m, k, n]() {
            const double* dc = cc.grad().data();
            if (ac.requires_grad()) {
                double* da = ac.data()->grad.data();
                const double* bv2 = bc.values().data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        const double* dcrow = dc + i * n;
                        const double* brow = bv2 + p * n;
                        for (std::size_t j = 0; j < n; ++j) s += dcrow[j] * brow[j];
                        da[i * k + p] += s;
                    }
            }
            if (bc.requires_grad()) {
                double* db = bc.data()->grad.data();
                const double* av2 = ac.values().data();
                for (std::size_t p = 0; p < k; ++p)
                    for (std::size_t i = 0; i < m; ++i) {
                        const double aip = av2[i * k + p];
                        if (aip == 0.0) continue;
                        const double* dcrow = dc + i * n;
                        double* dbrow = db + p * n;
                        for (std::size_t j = 0; j < n; ++j) dbrow[j] += aip * dcrow[j];
                    }
            }
        });
        mark_recorded(c, node);
    }
    return c;
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    const std::size_t m = a.rows(), n = a.cols();
    Tensor t = Tensor::zeros({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            t.values()[j * m + i] = a.values()[i * n + j];
    if (tracking({&a})) {
        Tensor ac = a, tc = t;
        int node = g_active_tape->record([ac, tc, m, n]() {
            if (!ac.requires_grad()) return;
            double* da = ac.data()->grad.data();
            const double* dt = tc.grad().data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    da[i * n + j] += dt[j * m + i];
        });
        mark_recorded(t, node);
    }
    return t;
}

Tensor softmax_rows(const Tensor& a) {
    require_matrix(a, "softmax_rows");
    const std::size_t m = a.rows(), n = a.cols();
    const double neg_inf = -std::numeric_limits<double>::infinity();
    Tensor y = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = a.values().data() + i * n;
        double mx = neg_inf;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::isnan(row[j]))
                throw NumericError("softmax_rows: NaN in row " + std::to_string(i));
            mx = std::max(mx, row[j]);
        }
        double* out = y.values().data() + i * n;
        if (mx == neg_inf) continue; // fully masked row stays all-zero
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = std::exp(row[j] - mx);
            s += out[j];
        }
        for (std::size_t j = 0; j < n; ++j) out[j] /= s;
    }
    if (tracking({&a})) {
        Tensor ac = a, yc = y;
        int node = g_active_tape->record([ac, yc, m, n]() {
            if (!ac.requires_grad()) return;
            double* da = ac.data()->grad.data();
            const double* yv = yc.values().data();
            const double* dy = yc.grad().data();
            for (std::size_t i = 0; i < m; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += yv[i * n + j] * dy[i * n + j];
                for (std::size_t j = 0; j < n; ++j)
                    da[i * n + j] += yv[i * n + j] * (dy[i * n + j] - dot);
            }
        });
        mark_recorded(y, node);
    }
    return y;
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias) {
    require_matrix(a, "layer_norm");
    const std::size_t m = a.rows(), n = a.cols();
    if (gain.size() != n || bias.size() != n)
        throw DimensionError("layer_norm: gain/bias length must equal " + std::to_string(n));
    Tensor y = Tensor::zeros({m, n});
    std::vector<double> xhat(m * n), inv_std(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = a.values().data() + i * n;
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += row[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = row[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_std[i] = is;
        for (std::size_t j = 0; j < n; ++j) {
            xhat[i * n + j] = (row[j] - mean) * is;
            y.values()[i * n + j] = gain.values()[j] * xhat[i * n + j] + bias.values()[j];
        }
    }
    if (tracking({&a, &gain, &bias})) {
        Tensor ac = a, gc = gain, bc = bias, yc = y;
        auto xh = std::make_shared<std::vector<double>>(std::move(xhat));
        auto is = std::make_shared<std::vector<double>>(std::move(inv_std));
        int node = g_active_tape->record([ac, gc, bc, yc, xh, is, m, n]() {
            const double* dy = yc.grad().data();
            const double* xhv = xh->data();
            if (gc.requires_grad()) {
                double* dg = gc.data()->grad.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        dg[j] += dy[i * n + j] * xhv[i * n + j];
            }
            if (bc.requires_grad()) {
                double* db = bc.data()->grad.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        db[j] += dy[i * n + j];
            }
            if (ac.requires_grad()) {
                double* da = ac.data()->grad.data();
                const double* gv = gc.values().data();
                const double nn = static_cast<double>(n);
                for (std::size_t i = 0; i < m; ++i) {
                    double s1 = 0.0, s2 = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dxh = dy[i * n + j] * gv[j];
                        s1 += dxh;
                        s2 += dxh * xhv[i * n + j];
                    }
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dxh = dy[i * n + j] * gv[j];
                        da[i * n + j] +=
                            (*is)[i] * (dxh - s1 / nn - xhv[i * n + j] * s2 / nn);
                    }
                }
            }
        });
        mark_recorded(y, node);
    }
    return y;
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_matrix(x, "affine input");
    require_matrix(w, "affine weight");
    const std::size_t m = x.rows(), k = x.cols(), n = w.cols();
    if (w.rows() != k)
        throw DimensionError("affine: input " + shape_str(x.shape()) +
                             " incompatible with weight " + shape_str(w.shape()));
    if (b.size() != n)
        throw DimensionError("affine: bias length " + std::to_string(b.size()) +
                             " != " + std::to_string(n));
    Tensor y = Tensor::zeros({m, n});
    const double* xv = x.values().data();
    const double* wv = w.values().data();
    const double* bv = b.values().data();
    double* yv = y.values().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* yrow = yv + i * n;
        for (std::size_t j = 0; j < n; ++j) yrow[j] = bv[j];
        for (std::size_t p = 0; p < k; ++p) {
            const double xip = xv[i * k + p];
            if (xip == 0.0) continue;
            const double* wrow = wv + p * n;
            for (std::size_t j = 0; j < n; ++j) yrow[j] += xip * wrow[j];
        }
    }
    if (tracking({&x, &w, &b})) {
        Tensor xc = x, wc = w, bc = b, yc = y;
        int node = g_active_tape->record([xc, wc, bc, yc, m, k, n]() {
            const double* dy = yc.grad().data();
            if (xc.requires_grad()) {
                double* dx = xc.data()->grad.data();
                const double* wv2 = wc.values().data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < n; ++j)
                            s += dy[i * n + j] * wv2[p * n + j];
                        dx[i * k + p] += s;
                    }
            }
            if (wc.requires_grad()) {
                double* dw = wc.data()->grad.data();
                const double* xv2 = xc.values().data();
                for (std::size_t p = 0; p < k; ++p)
                    for (std::size_t i = 0; i < m; ++i) {
                        const double xip = xv2[i * k + p];
                        if (xip == 0.0) continue;
                        for (std::size_t j = 0; j < n; ++j)
                            dw[p * n + j] += xip * dy[i * n + j];
                    }
            }
            if (bc.requires_grad()) {
                double* db = bc.data()->grad.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) db[j] += dy[i * n + j];
            }
        });
        mark_recorded(y, node);
    }
    return y;
}

Tensor relu(const Tensor& a) {
    Tensor y = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        y.values()[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
    if (tracking({&a})) {
        Tensor ac = a, yc = y;
        int node = g_active_tape->record([ac, yc]() {
            if (!ac.requires_grad()) return;
            double* da = ac.data()->grad.data();
            const double* av = ac.values().data();
            const double* dy = yc.grad().data();
            for (std::size_t i = 0; i < ac.size(); ++i)
                if (av[i] > 0.0) da[i] += dy[i];
        });
        mark_recorded(y, node);
    }
    return y;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    require_matrix(a, "concat_rows lhs");
    require_matrix(b, "concat_rows rhs");
    if (a.cols() != b.cols())
        throw DimensionError("concat_rows: column counts differ, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    const std::size_t m1 = a.rows(), m2 = b.rows(), n = a.cols();
    Tensor y = Tensor::zeros({m1 + m2, n});
    std::copy(a.values().begin(), a.values().end(), y.values().begin());
    std::copy(b.values().begin(), b.values().end(), y.values().begin() + m1 * n);
    if (tracking({&a, &b})) {
        Tensor ac = a, bc = b, yc = y;
        int node = g_active_tape->record([ac, bc, yc, m1, m2, n]() {
            const double* dy = yc.grad().data();
            if (ac.requires_grad()) {
                double* da = ac.data()->grad.data();
                for (std::size_t i = 0; i < m1 * n; ++i) da[i] += dy[i];
            }
            if (bc.requires_grad()) {
                double* db = bc.data()->grad.data();
                for (std::size_t i = 0; i < m2 * n; ++i) db[i] += dy[m1 * n + i];
            }
        });
        mark_recorded(y, node);
    }
    return y;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    require_matrix(a, "concat_cols lhs");
    require_matrix(b, "concat_cols rhs");
    if (a.rows() != b.rows())
        throw DimensionError("concat_cols: row counts differ, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    const std::size_t m = a.rows(), n1 = a.cols(), n2 = b.cols();
    Tensor y = Tensor::zeros({m, n1 + n2});
    for (std::size_t i = 0; i < m; ++i) {
        std::copy(a.values().begin() + i * n1, a.values().begin() + (i + 1) * n1,
                  y.values().begin() + i * (n1 + n2));
        std::copy(b.values().begin() + i * n2, b.values().begin() + (i + 1) * n2,
                  y.values().begin() + i * (n1 + n2) + n1);
    }
    if (tracking({&a, &b})) {
        Tensor ac = a, bc = b, yc = y;
        int node = g_active_tape->record([ac, bc, yc, m, n1, n2]() {
            const double* dy = yc.grad().data();
            if (ac.requires_grad()) {
                double* da = ac.data()->grad.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n1; ++j)
                        da[i * n1 + j] += dy[i * (n1 + n2) + j];
            }
            if (bc.requires_grad()) {
                double* db = bc.data()->grad.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n2; ++j)
                        db[i * n2 + j] += dy[i * (n1 + n2) + n1 + j];
            }
        });
        mark_recorded(y, node);
    }
    return y;
}

Tensor dropout(const Tensor& a, double rate, bool training, std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return a;
    const double keep = 1.0 - rate;
    auto mask = std::make_shared<std::vector<double>>(a.size());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor y = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        (*mask)[i] = u(rng) < rate ? 0.0 : 1.0 / keep;
        y.values()[i] = a.values()[i] * (*mask)[i];
    }
    if (tracking({&a})) {
        Tensor ac = a, yc = y;
        int node = g_active_tape->record([ac, yc, mask]() {
            if (!ac.requires_grad()) return;
            double* da = ac.data()->grad.data();
            const double* dy = yc.grad().data();
            for (std::size_t i = 0; i < ac.size(); ++i) da[i] += dy[i] * (*mask)[i];
        });
        mark_recorded(y, node);
    }
    return y;
}

namespace {

template <class Fwd, class Bwd>
Tensor elementwise_binary(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, Bwd bwd) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(name) + ": shapes differ, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    Tensor y = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        y.values()[i] = fwd(a.values()[i], b.values()[i]);
    if (tracking({&a, &b})) {
        Tensor ac = a, bc = b, yc = y;
        int node = g_active_tape->record([ac, bc, yc, bwd]() {
            const double* dy = yc.grad().data();
            for (std::size_t i = 0; i < ac.size(); ++i) {
                auto [da, db] = bwd(ac.values()[i], bc.values()[i], dy[i]);
                if (ac.requires_grad()) ac.data()->grad[i] += da;
                if (bc.requires_grad()) bc.data()->grad[i] += db;
            }
        });
        mark_recorded(y, node);
    }
    return y;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return elementwise_binary(a, b, "add",
        [](double x, double y) { return x + y; },
        [](double, double, double d) { return std::pair<double, double>{d, d}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return elementwise_binary(a, b, "sub",
        [](double x, double y) { return x - y; },
        [](double, double, double d) { return std::pair<double, double>{d, -d}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return elementwise_binary(a, b, "mul",
        [](double x, double y) { return x * y; },
        [](double x, double y, double d) { return std::pair<double, double>{d * y, d * x}; });
}

Tensor scale(const Tensor& a, double c) {
    Tensor y = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) y.values()[i] = a.values()[i] * c;
    if (tracking({&a})) {
        Tensor ac = a, yc = y;
        int node = g_active_tape->record([ac, yc, c]() {
            if (!ac.requires_grad()) return;
            for (std::size_t i = 0; i < ac.size(); ++i)
                ac.data()->grad[i] += yc.grad()[i] * c;
        });
        mark_recorded(y, node);
    }
    return y;
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    Tensor y = Tensor::scalar(s);
    if (tracking({&a})) {
        Tensor ac = a, yc = y;
        int node = g_active_tape->record([ac, yc]() {
            if (!ac.requires_grad()) return;
            const double d = yc.grad()[0];
            for (std::size_t i = 0; i < ac.size(); ++i) ac.data()->grad[i] += d;
        });
        mark_recorded(y, node);
    }
    return y;
}

Tensor reshape(const Tensor& a, Shape shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    if (n != a.size())
        throw DimensionError("reshape: " + shape_str(a.shape()) + " has " +
                             std::to_string(a.size()) + " elements, target " + shape_str(shape));
    Tensor y = Tensor::from(std::move(shape), a.values());
    if (tracking({&a})) {
        Tensor ac = a, yc = y;
        int node = g_active_tape->record([ac, yc]() {
            if (!ac.requires_grad()) return;
            for (std::size_t i = 0; i < ac.size(); ++i)
                ac.data()->grad[i] += yc.grad()[i];
        });
        mark_recorded(y, node);
    }
    return y;
}

Tensor stack_scalars(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw UsageError("stack_scalars: empty input");
    Tensor y = Tensor::zeros({xs.size()});
    bool track = false;
    for (const Tensor& x : xs) {
        if (x.size() != 1)
            throw DimensionError("stack_scalars: non-scalar element " + shape_str(x.shape()));
        if (x.requires_grad()) track = true;
    }
    for (std::size_t i = 0; i < xs.size(); ++i) y.values()[i] = xs[i].values()[0];
    if (track && g_active_tape) {
        auto xc = std::make_shared<std::vector<Tensor>>(xs);
        Tensor yc = y;
        int node = g_active_tape->record([xc, yc]() {
            for (std::size_t i = 0; i < xc->size(); ++i)
                if ((*xc)[i].requires_grad())
                    (*xc)[i].data()->grad[0] += yc.grad()[i];
        });
        mark_recorded(y, node);
    }
    return y;
}

Tensor sqrt_scalar(const Tensor& a) {
    if (a.size() != 1)
        throw DimensionError("sqrt_scalar: scalar expected, got " + shape_str(a.shape()));
    const double v = a.values()[0];
    Tensor y = Tensor::scalar(std::sqrt(v));
    if (tracking({&a})) {
        Tensor ac = a, yc = y;
        int node = g_active_tape->record([ac, yc]() {
            if (!ac.requires_grad()) return;
            const double v2 = ac.values()[0];
            if (v2 > 0.0) ac.data()->grad[0] += yc.grad()[0] * 0.5 / std::sqrt(v2);
            // gradient at 0 defined as 0
        });
        mark_recorded(y, node);
    }
    return y;
}

Tensor apply_mask(const Tensor& a, const std::vector<std::uint8_t>& forbidden) {
    if (forbidden.size() != a.size())
        throw DimensionError("apply_mask: mask size " + std::to_string(forbidden.size()) +
                             " != tensor size " + std::to_string(a.size()));
    const double neg_inf = -std::numeric_limits<double>::infinity();
    Tensor y = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        y.values()[i] = forbidden[i] ? neg_inf : a.values()[i];
    if (tracking({&a})) {
        Tensor ac = a, yc = y;
        auto fc = std::make_shared<std::vector<std::uint8_t>>(forbidden);
        int node = g_active_tape->record([ac, yc, fc]() {
            if (!ac.requires_grad()) return;
            for (std::size_t i = 0; i < ac.size(); ++i)
                if (!(*fc)[i]) ac.data()->grad[i] += yc.grad()[i];
        });
        mark_recorded(y, node);
    }
    return y;
}

} // namespace dast
