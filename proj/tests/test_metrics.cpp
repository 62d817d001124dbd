#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dast/metrics.hpp"

using namespace dast;

TEST_CASE("rmse hand cases") {
    CHECK(rmse({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(rmse({3, 4}, {0, 0}) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
    CHECK(rmse({5}, {2}) == doctest::Approx(3.0));
    CHECK_THROWS_AS(rmse({}, {}), UsageError);
    CHECK_THROWS_AS(rmse({1, 2}, {1}), UsageError);
}

TEST_CASE("score hand cases") {
    CHECK(score({50}, {50}) == doctest::Approx(0.0));
    // late by 13: exp(13/10) - 1; early by 13: exp(13/13) - 1
    CHECK(score({63}, {50}) == doctest::Approx(std::exp(1.3) - 1.0).epsilon(1e-9));
    CHECK(score({37}, {50}) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-9));
    CHECK(score({10}, {20}) == doctest::Approx(std::exp(10.0 / 13.0) - 1.0).epsilon(1e-9));
    CHECK(score({30}, {20}) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-9));
}

TEST_CASE("late predictions cost more than early ones of the same size") {
    for (double d : {1.0, 5.0, 13.0, 40.0})
        CHECK(score({100 + d}, {100}) > score({100 - d}, {100}));
}

TEST_CASE("score grows with the error on either side") {
    double prev_late = 0.0, prev_early = 0.0;
    for (double d = 1.0; d <= 30.0; d += 1.0) {
        double late = score({100 + d}, {100});
        double early = score({100 - d}, {100});
        CHECK(late > prev_late);
        CHECK(early > prev_early);
        prev_late = late;
        prev_early = early;
    }
}

TEST_CASE("score sums per sample and ignores ordering") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 125.0);
    std::vector<double> pred(20), truth(20);
    for (std::size_t i = 0; i < 20; ++i) {
        pred[i] = u(rng);
        truth[i] = u(rng);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < 20; ++i) total += score({pred[i]}, {truth[i]});
    CHECK(score(pred, truth) == doctest::Approx(total).epsilon(1e-12));

    std::vector<std::size_t> perm(20);
    for (std::size_t i = 0; i < 20; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pred_p(20), truth_p(20);
    for (std::size_t i = 0; i < 20; ++i) {
        pred_p[i] = pred[perm[i]];
        truth_p[i] = truth[perm[i]];
    }
    CHECK(score(pred_p, truth_p) == doctest::Approx(score(pred, truth)).epsilon(1e-12));
    CHECK(rmse(pred_p, truth_p) == doctest::Approx(rmse(pred, truth)).epsilon(1e-12));
}

TEST_CASE("evaluate_metrics bundles both metrics with the raw errors") {
    EvalResult r = evaluate_metrics({10, 30}, {20, 20});
    CHECK(r.n == 2);
    CHECK(r.rmse == doctest::Approx(10.0));
    CHECK(r.score ==
          doctest::Approx(std::exp(10.0 / 13.0) - 1.0 + std::exp(1.0) - 1.0).epsilon(1e-9));
    REQUIRE(r.errors.size() == 2);
    CHECK(r.errors[0] == doctest::Approx(-10.0));
    CHECK(r.errors[1] == doctest::Approx(10.0));
    CHECK_THROWS_AS(evaluate_metrics({}, {}), UsageError);
}
