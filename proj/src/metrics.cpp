#include "dast/metrics.hpp"

#include <cmath>
#include <string>

namespace dast {

namespace {

void check_lengths(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.empty() || pred.size() != truth.size())
        throw UsageError("metrics: need equal nonempty vectors, got " +
                         std::to_string(pred.size()) + " and " + std::to_string(truth.size()));
}

} // namespace

double rmse(const std::vector<double>& pred, const std::vector<double>& truth) {
    check_lengths(pred, truth);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(pred.size()));
}

double score(const std::vector<double>& pred, const std::vector<double>& truth) {
    check_lengths(pred, truth);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        s += d < 0.0 ? std::exp(-d / 13.0) - 1.0 : std::exp(d / 10.0) - 1.0;
    }
    return s;
}

EvalResult evaluate_metrics(const std::vector<double>& pred, const std::vector<double>& truth) {
    EvalResult r;
    r.rmse = rmse(pred, truth);
    r.score = score(pred, truth);
    r.n = pred.size();
    r.errors.resize(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) r.errors[i] = pred[i] - truth[i];
    return r;
}

} // namespace dast
