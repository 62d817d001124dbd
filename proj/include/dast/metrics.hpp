#pragma once

#include <vector>

#include "dast/errors.hpp"

namespace dast {

struct EvalResult {
    double rmse = 0.0;
    double score = 0.0;
    std::size_t n = 0;
    std::vector<double> errors; // predicted - true, per sample
};

double rmse(const std::vector<double>& pred, const std::vector<double>& truth);

/// Asymmetric exponential penalty: exp(-d/13)-1 for d < 0, exp(d/10)-1 for
/// d >= 0, summed over samples, d = predicted - true.
double score(const std::vector<double>& pred, const std::vector<double>& truth);

EvalResult evaluate_metrics(const std::vector<double>& pred, const std::vector<double>& truth);

} // namespace dast
