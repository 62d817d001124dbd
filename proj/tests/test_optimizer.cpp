#include <doctest.h>

#include <cmath>

#include "dast/optimizer.hpp"

using namespace dast;

TEST_CASE("zero gradient leaves parameters unchanged") {
    Tensor p = Tensor::from({3}, {1, 2, 3}, true);
    RAdam opt({{"p", p}}, {});
    for (int i = 0; i < 5; ++i) opt.step();
    CHECK(p.values() == std::vector<double>{1, 2, 3});
}

TEST_CASE("plain Adam takes a bias-corrected sign step") {
    Tensor p = Tensor::from({2}, {0.0, 0.0}, true);
    OptimizerConfig cfg;
    cfg.rectified = false;
    RAdam opt({{"p", p}}, cfg);
    p.grad() = {0.5, -2.0};
    opt.step();
    // m_hat = g, v_hat = |g|, update ~= lr * sign(g)
    CHECK(p.values()[0] == doctest::Approx(-cfg.learning_rate).epsilon(1e-6));
    CHECK(p.values()[1] == doctest::Approx(cfg.learning_rate).epsilon(1e-6));
}

TEST_CASE("rectification is inactive for the first four steps") {
    Tensor p = Tensor::from({1}, {1.0}, true);
    RAdam opt({{"p", p}}, {});
    for (int t = 1; t <= 6; ++t) {
        p.grad() = {0.1};
        opt.step();
        // rho_t = rho_inf - 2 t beta2^t / (1 - beta2^t) crosses 4 after t = 4
        CHECK(opt.last_step_rectified() == (t > 4));
    }
    CHECK(opt.step_count() == 6);
}

TEST_CASE("momentum fallback matches the unadapted update at step 1") {
    Tensor p = Tensor::from({1}, {0.0}, true);
    OptimizerConfig cfg;
    RAdam opt({{"p", p}}, cfg);
    p.grad() = {2.0};
    opt.step();
    // step 1, rho_1 <= 4: update = lr * m_hat = lr * g
    CHECK(p.values()[0] == doctest::Approx(-cfg.learning_rate * 2.0));
}

TEST_CASE("non-finite gradient is reported with the parameter name") {
    Tensor p = Tensor::from({1}, {0.0}, true);
    RAdam opt({{"weights.w1", p}}, {});
    p.grad() = {std::nan("")};
    CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("weights.w1"), NumericError);
}

TEST_CASE("learning rate must be positive") {
    Tensor p = Tensor::from({1}, {0.0}, true);
    OptimizerConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(RAdam({{"p", p}}, cfg), ConfigError);
}
