#include <doctest.h>

#include <cmath>
#include <limits>

#include "dast/tensor.hpp"
#include "grad_check.hpp"

using namespace dast;
using dast::testing::finite_diff_check;
using dast::testing::random_tensor;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("matmul identity and hand-computed product") {
    Tensor i2 = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor r = matmul(i2, a);
    CHECK(r.values() == a.values());

    Tensor b = Tensor::from({2, 2}, {5, 6, 7, 8});
    Tensor c = matmul(a, b);
    CHECK(c.values() == std::vector<double>{19, 22, 43, 50});
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::from({2, 2}, {1, 2, 3, 4});
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), DimensionError);
}

TEST_CASE("matmul gradients match finite differences") {
    std::mt19937_64 rng(1);
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({4, 2}, rng);
    auto report = finite_diff_check([&] { return sum(matmul(a, b)); },
                                    {{"a", a}, {"b", b}});
    CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("transpose moves elements and is an involution") {
    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    CHECK(transpose(a).values() == std::vector<double>{1, 3, 2, 4});
    CHECK(transpose(transpose(a)).values() == a.values());
    CHECK_THROWS_AS(transpose(Tensor::from({4}, {1, 2, 3, 4})), DimensionError);

    std::mt19937_64 rng(2);
    Tensor b = random_tensor({3, 5}, rng);
    Tensor w = random_tensor({3, 5}, rng, false);
    auto report = finite_diff_check([&] { return sum(mul(transpose(b), transpose(w))); },
                                    {{"b", b}});
    CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("softmax rows") {
    Tensor u = softmax_rows(Tensor::from({1, 3}, {0, 0, 0}));
    for (double v : u.values()) CHECK(v == doctest::Approx(1.0 / 3.0));

    Tensor h = softmax_rows(Tensor::from({1, 2}, {std::log(2.0), 0.0}));
    CHECK(h.values()[0] == doctest::Approx(2.0 / 3.0));
    CHECK(h.values()[1] == doctest::Approx(1.0 / 3.0));

    Tensor m = softmax_rows(Tensor::from({1, 2}, {0.0, -kInf}));
    CHECK(m.values()[0] == 1.0);
    CHECK(m.values()[1] == 0.0);

    Tensor z = softmax_rows(Tensor::from({1, 2}, {-kInf, -kInf}));
    CHECK(z.values() == std::vector<double>{0, 0});

    CHECK_THROWS_AS(softmax_rows(Tensor::from({1, 1}, {std::nan("")})), NumericError);
}

TEST_CASE("softmax rows sum to one and lie in [0,1]") {
    std::mt19937_64 rng(3);
    Tensor a = random_tensor({6, 9}, rng, false, 4.0);
    Tensor y = softmax_rows(a);
    for (std::size_t i = 0; i < 6; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 9; ++j) {
            CHECK(y(i, j) >= 0.0);
            CHECK(y(i, j) <= 1.0);
            s += y(i, j);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("softmax gradient") {
    std::mt19937_64 rng(4);
    Tensor a = random_tensor({3, 4}, rng);
    Tensor w = random_tensor({3, 4}, rng, false);
    auto report = finite_diff_check([&] { return sum(mul(softmax_rows(a), w)); },
                                    {{"a", a}});
    CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("layer norm") {
    Tensor gain = Tensor::full({3}, 1.0);
    Tensor bias = Tensor::zeros({3});

    Tensor constant = layer_norm(Tensor::from({1, 3}, {5, 5, 5}), gain, bias);
    for (double v : constant.values()) CHECK(v == doctest::Approx(0.0));

    Tensor two = layer_norm(Tensor::from({1, 2}, {-1, 1}), Tensor::full({2}, 1.0),
                            Tensor::zeros({2}));
    CHECK(two.values()[0] == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(two.values()[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("layer norm normalizes rows") {
    std::mt19937_64 rng(5);
    Tensor a = random_tensor({4, 8}, rng, false, 3.0);
    Tensor y = layer_norm(a, Tensor::full({8}, 1.0), Tensor::zeros({8}));
    for (std::size_t i = 0; i < 4; ++i) {
        double mean = 0.0, var = 0.0;
        for (std::size_t j = 0; j < 8; ++j) mean += y(i, j);
        mean /= 8.0;
        for (std::size_t j = 0; j < 8; ++j) var += (y(i, j) - mean) * (y(i, j) - mean);
        var /= 8.0;
        CHECK(std::abs(mean) < 1e-6);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("layer norm gradient") {
    std::mt19937_64 rng(6);
    Tensor a = random_tensor({3, 5}, rng);
    Tensor gain = random_tensor({5}, rng);
    Tensor bias = random_tensor({5}, rng);
    Tensor w = random_tensor({3, 5}, rng, false);
    auto report = finite_diff_check(
        [&] { return sum(mul(layer_norm(a, gain, bias), w)); },
        {{"a", a}, {"gain", gain}, {"bias", bias}});
    CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("affine") {
    Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor zero_w = Tensor::zeros({2, 3});
    Tensor b = Tensor::from({3}, {7, 8, 9});
    Tensor y = affine(x, zero_w, b);
    CHECK(y.values() == std::vector<double>{7, 8, 9, 7, 8, 9});

    Tensor id_w = Tensor::from({2, 2}, {1, 0, 0, 1});
    CHECK(affine(x, id_w, Tensor::zeros({2})).values() == x.values());

    std::mt19937_64 rng(7);
    Tensor xr = random_tensor({3, 4}, rng);
    Tensor wr = random_tensor({4, 2}, rng);
    Tensor br = random_tensor({2}, rng);
    auto report = finite_diff_check([&] { return sum(affine(xr, wr, br)); },
                                    {{"x", xr}, {"w", wr}, {"b", br}});
    CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("relu") {
    Tensor a = Tensor::from({3}, {-1, 0, 2});
    CHECK(relu(a).values() == std::vector<double>{0, 0, 2});
    Tensor pos = Tensor::from({2}, {3, 4});
    CHECK(relu(pos).values() == pos.values());

    // elements away from the kink
    Tensor b = Tensor::from({4}, {-2.0, -0.5, 0.5, 2.0}, true);
    auto report = finite_diff_check([&] { return sum(relu(b)); }, {{"b", b}});
    CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("concat rows") {
    Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::from({1, 3}, {7, 8, 9});
    Tensor c = concat_rows(a, b);
    CHECK(c.shape() == Shape{3, 3});
    CHECK(c.values() == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});

    Tensor empty = Tensor::zeros({0, 3});
    CHECK(concat_rows(a, empty).values() == a.values());
    CHECK_THROWS_AS(concat_rows(a, Tensor::zeros({1, 2})), DimensionError);

    std::mt19937_64 rng(8);
    Tensor ar = random_tensor({2, 3}, rng);
    Tensor br = random_tensor({2, 3}, rng);
    Tensor w = random_tensor({4, 3}, rng, false);
    auto report = finite_diff_check([&] { return sum(mul(concat_rows(ar, br), w)); },
                                    {{"a", ar}, {"b", br}});
    CHECK(report.max_rel_err < 1e-3);
}

TEST_CASE("dropout") {
    std::mt19937_64 rng(9);
    Tensor a = Tensor::full({10}, 2.0);
    CHECK(dropout(a, 0.0, true, rng).values() == a.values());
    CHECK(dropout(a, 0.7, false, rng).values() == a.values());
    CHECK_THROWS_AS(dropout(a, 1.0, true, rng), ConfigError);

    Tensor big = Tensor::full({100000}, 1.0);
    Tensor out = dropout(big, 0.2, true, rng);
    std::size_t survivors = 0;
    for (double v : out.values())
        if (v != 0.0) {
            CHECK(v == doctest::Approx(1.0 / 0.8));
            ++survivors;
        }
    const double fraction = static_cast<double>(survivors) / 100000.0;
    CHECK(fraction == doctest::Approx(0.8).epsilon(0.0125)); // 0.8 +- 0.01
}

TEST_CASE("backward basics") {
    Tensor x = Tensor::from({3}, {1, 2, 3}, true);
    {
        Tape tape;
        Tensor loss = sum(x);
        tape.backward(loss);
        CHECK(loss.grad()[0] == 1.0);
    }
    CHECK(x.grad() == std::vector<double>{1, 1, 1});

    x.zero_grad();
    {
        Tape tape;
        tape.backward(sum(mul(x, x)));
    }
    CHECK(x.grad() == std::vector<double>{2, 4, 6});

    Tape tape;
    CHECK_THROWS_AS(tape.backward(mul(x, x)), DimensionError); // non-scalar
}

TEST_CASE("repeated backward accumulates") {
    Tensor x = Tensor::from({2}, {1, 1}, true);
    Tape tape;
    Tensor loss = sum(x);
    tape.backward(loss);
    tape.backward(loss);
    CHECK(x.grad() == std::vector<double>{2, 2});
}

TEST_CASE("tensors off the tape are not recorded") {
    Tape tape;
    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4}); // requires_grad off
    Tensor b = matmul(a, a);
    CHECK_FALSE(b.requires_grad());
    CHECK(tape.node_count() == 0);
}

TEST_CASE("cleared tape rejects stale losses") {
    Tensor x = Tensor::from({2}, {1, 2}, true);
    Tape tape;
    Tensor loss = sum(x);
    tape.clear();
    CHECK_THROWS_AS(tape.backward(loss), UsageError);
}

TEST_CASE("fixed seed runs are bitwise identical") {
    auto run = [] {
        std::mt19937_64 rng(42);
        Tensor a = dast::testing::random_tensor({4, 4}, rng);
        Tensor out = softmax_rows(matmul(a, transpose(a)));
        return dropout(out, 0.3, true, rng).values();
    };
    CHECK(run() == run());
}

TEST_CASE("tape replay leaves values unchanged") {
    std::mt19937_64 rng(10);
    Tensor a = random_tensor({3, 3}, rng);
    auto forward = [&] { return sum(softmax_rows(matmul(a, a))); };
    Tensor first;
    {
        Tape tape;
        first = forward();
        tape.backward(first);
    }
    a.zero_grad();
    Tensor second = forward();
    CHECK(first.values() == second.values());
}

TEST_CASE("stack scalars and sqrt guard") {
    Tensor a = Tensor::scalar(3.0);
    Tensor b = Tensor::scalar(4.0);
    Tensor s = stack_scalars({a, b});
    CHECK(s.values() == std::vector<double>{3, 4});

    Tensor zero = Tensor::from({1}, {0.0}, true);
    Tape tape;
    Tensor r = sqrt_scalar(mul(zero, zero));
    tape.backward(r);
    CHECK(r.item() == 0.0);
    CHECK(zero.grad()[0] == 0.0); // guarded gradient at zero
}
