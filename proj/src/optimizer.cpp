#include "dast/optimizer.hpp"

#include <cmath>
#include <limits>

namespace dast {

RAdam::RAdam(std::vector<std::pair<std::string, Tensor>> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
    if (config_.learning_rate <= 0.0)
        throw ConfigError("learning rate must be positive");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& [name, t] : params_) {
        (void)name;
        m_.emplace_back(t.size(), 0.0);
        v_.emplace_back(t.size(), 0.0);
    }
}

void RAdam::step() {
    if (step_ == std::numeric_limits<long>::max())
        throw NumericError("optimizer step counter overflow");
    ++step_;
    const double t = static_cast<double>(step_);
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double b1t = std::pow(b1, t), b2t = std::pow(b2, t);
    const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
    const double rho_t = rho_inf - 2.0 * t * b2t / (1.0 - b2t);

    bool adaptive = true;
    double rect = 1.0;
    if (config_.rectified) {
        if (rho_t > 4.0) {
            rect = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                             ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
        } else {
            adaptive = false;
        }
    }
    last_rectified_ = config_.rectified && adaptive;

    for (std::size_t p = 0; p < params_.size(); ++p) {
        auto& [name, tensor] = params_[p];
        const std::vector<double>& g = tensor.grad();
        std::vector<double>& val = tensor.values();
        std::vector<double>& m = m_[p];
        std::vector<double>& v = v_[p];
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw NumericError("non-finite gradient in parameter '" + name + "'");
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / (1.0 - b1t);
            if (adaptive) {
                const double vhat = std::sqrt(v[i] / (1.0 - b2t));
                val[i] -= config_.learning_rate * rect * mhat / (vhat + config_.epsilon);
            } else {
                val[i] -= config_.learning_rate * mhat;
            }
        }
    }
}

void RAdam::zero_grad() {
    for (auto& [name, t] : params_) {
        (void)name;
        t.zero_grad();
    }
}

} // namespace dast
