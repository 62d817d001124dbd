#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dast/tensor.hpp"

namespace dast {

struct OptimizerConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool rectified = true; // false selects plain Adam
};

/// Rectified Adam. With rectified=false this is plain bias-corrected Adam.
/// Early steps where the variance rectification term rho_t <= 4 fall back
/// to the unadapted momentum update.
class RAdam {
public:
    RAdam(std::vector<std::pair<std::string, Tensor>> params, OptimizerConfig config);

    void step();
    void zero_grad();

    long step_count() const { return step_; }
    /// True when the last step used the rectified adaptive branch.
    bool last_step_rectified() const { return last_rectified_; }
    const OptimizerConfig& config() const { return config_; }

private:
    std::vector<std::pair<std::string, Tensor>> params_;
    std::vector<std::vector<double>> m_, v_;
    OptimizerConfig config_;
    long step_ = 0;
    bool last_rectified_ = false;
};

} // namespace dast
