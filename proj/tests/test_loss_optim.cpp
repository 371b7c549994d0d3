#include <cmath>

#include "doctest.h"
#include "fpd/loss.hpp"
#include "fpd/optim.hpp"

using namespace fpd;

TEST_CASE("bce perfect prediction scores exactly zero") {
    Tensor<double> p({1, 1}, {1.0});
    Tensor<double> y({1, 1}, {1.0});
    CHECK(bce_loss(p, y).loss == 0.0);

    Tensor<double> p0({1, 1}, {0.0});
    Tensor<double> y0({1, 1}, {0.0});
    CHECK(bce_loss(p0, y0).loss == 0.0);
}

TEST_CASE("bce at p=0.5 is ln 2") {
    Tensor<double> p({1, 1}, {0.5});
    Tensor<double> y({1, 1}, {1.0});
    CHECK(bce_loss(p, y).loss == doctest::Approx(0.693147).epsilon(1e-6));
}

TEST_CASE("bce clamped extreme is finite -ln(eps)") {
    Tensor<double> p({1, 1}, {1.0});
    Tensor<double> y({1, 1}, {0.0});
    double loss = bce_loss(p, y).loss;
    CHECK(std::isfinite(loss));
    CHECK(loss == doctest::Approx(-std::log(1e-7)).epsilon(1e-9));
    CHECK(loss == doctest::Approx(16.118).epsilon(1e-3));
}

TEST_CASE("bce averages over all B*U elements") {
    Tensor<double> p({2, 2}, {0.5, 0.5, 1.0, 1.0});
    Tensor<double> y({2, 2}, {1.0, 0.0, 1.0, 1.0});
    // elements: ln2, ln2, 0, 0 -> mean = ln2/2
    CHECK(bce_loss(p, y).loss == doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("bce rejects non-binary targets") {
    Tensor<double> p({1, 1}, {0.5});
    Tensor<double> y({1, 1}, {0.5});
    try {
        bce_loss(p, y);
        FAIL("expected label error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Label);
    }
}

TEST_CASE("bce gradient is the analytic derivative on interior points") {
    Tensor<double> p({1, 2}, {0.3, 0.8});
    Tensor<double> y({1, 2}, {1.0, 0.0});
    auto res = bce_loss(p, y);
    CHECK(res.grad[0] == doctest::Approx((0.3 - 1.0) / (0.3 * 0.7) / 2.0).epsilon(1e-12));
    CHECK(res.grad[1] == doctest::Approx((0.8 - 0.0) / (0.8 * 0.2) / 2.0).epsilon(1e-12));
}

TEST_CASE("sgd applies value -= lr*grad and clears the gradient") {
    Parameter<double> p("w", Tensor<double>({1}, {1.0}));
    p.grad[0] = 0.5;
    sgd_step<double>({&p}, 0.1);
    CHECK(p.value[0] == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(p.grad[0] == 0.0);
}

TEST_CASE("sgd with zero gradient leaves values unchanged") {
    Parameter<double> p("w", Tensor<double>({3}, {1.0, -2.0, 0.5}));
    sgd_step<double>({&p}, 0.7);
    CHECK(p.value[0] == 1.0);
    CHECK(p.value[1] == -2.0);
    CHECK(p.value[2] == 0.5);
}

TEST_CASE("two sgd steps with constant gradient move 2*lr*g") {
    Parameter<double> p("w", Tensor<double>({1}, {3.0}));
    const double g = 0.25, lr = 0.01;
    p.grad[0] = g;
    sgd_step<double>({&p}, lr);
    p.grad[0] = g;
    sgd_step<double>({&p}, lr);
    CHECK(p.value[0] == doctest::Approx(3.0 - 2 * lr * g).epsilon(1e-12));
}

TEST_CASE("sgd rejects non-positive learning rates") {
    Parameter<double> p("w", Tensor<double>({1}, {1.0}));
    CHECK_THROWS_AS(sgd_step<double>({&p}, 0.0), Error);
    CHECK_THROWS_AS(sgd_step<double>({&p}, -0.1), Error);
}
