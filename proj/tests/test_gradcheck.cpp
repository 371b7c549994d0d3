#include "doctest.h"
#include "fpd/gradcheck.hpp"
#include "fpd/model.hpp"

using namespace fpd;

namespace {

Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng, double stddev = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.vec()) v = rng.normal(0.0, stddev);
    return t;
}

Tensor<double> random_targets(std::size_t batch, std::size_t units, Rng& rng) {
    Tensor<double> y({batch, units});
    for (auto& v : y.vec()) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    return y;
}

}  // namespace

TEST_CASE("dense+sigmoid+bce gradients match finite differences") {
    Rng rng(101);
    Model<double> m;
    m.emplace<Dense<double>>(3, 2, "fc", rng);
    m.emplace<Sigmoid<double>>();

    Rng data_rng(55);
    Tensor<double> x = random_tensor({4, 3}, data_rng);
    Tensor<double> y = random_targets(4, 2, data_rng);
    auto report = finite_diff_check(m, x, y);
    CHECK(report.pass);
    CHECK(report.max_rel_err < 1e-4);
    CHECK(report.coords_checked > 0);
}

TEST_CASE("zero-parameter model checks nothing and passes") {
    Model<double> m;
    m.emplace<Sigmoid<double>>();
    Rng rng(9);
    Tensor<double> x = random_tensor({2, 3}, rng);
    Tensor<double> y = random_targets(2, 3, rng);
    GradCheckOptions opts;
    opts.check_input = false;
    auto report = finite_diff_check(m, x, y, opts);
    CHECK(report.pass);
    CHECK(report.coords_checked == 0);
}

TEST_CASE("a corrupted gradient is detected") {
    Rng rng(77);
    Model<double> m;
    Dense<double>* fc = m.emplace<Dense<double>>(3, 2, "fc", rng);
    m.emplace<Sigmoid<double>>();

    Rng data_rng(56);
    Tensor<double> x = random_tensor({4, 3}, data_rng);
    Tensor<double> y = random_targets(4, 2, data_rng);

    // baseline passes
    CHECK(finite_diff_check(m, x, y).pass);

    // sabotage: scale the analytic weight gradient by 1.1 via a wrapper layer
    struct Corrupted : Dense<double> {
        using Dense<double>::Dense;
        Tensor<double> backward(const Tensor<double>& dy) override {
            Tensor<double> dx = Dense<double>::backward(dy);
            std::vector<Parameter<double>*> ps;
            collect_params(ps);
            for (auto& g : ps[0]->grad.vec()) g *= 1.1;
            return dx;
        }
    };
    Model<double> bad;
    bad.emplace<Corrupted>(3, 2, "fc", rng);
    bad.emplace<Sigmoid<double>>();
    auto report = finite_diff_check(bad, x, y);
    CHECK_FALSE(report.pass);
    (void)fc;
}

TEST_CASE("batchnorm train-mode gradients match finite differences") {
    Rng rng(300);
    Model<double> m;
    m.emplace<Dense<double>>(3, 4, "fc", rng);
    m.emplace<BatchNorm<double>>(4, "bn");
    m.emplace<Sigmoid<double>>();

    Rng data_rng(301);
    Tensor<double> x = random_tensor({6, 3}, data_rng);
    Tensor<double> y = random_targets(6, 4, data_rng);
    auto report = finite_diff_check(m, x, y);
    CHECK(report.pass);
}

TEST_CASE("conv+gap gradients match finite differences") {
    Rng rng(400);
    Model<double> m;
    m.emplace<Conv2d<double>>(2, 3, 3, 1, 1, "conv", rng);
    m.emplace<GlobalAvgPool<double>>();
    m.emplace<Sigmoid<double>>();

    Rng data_rng(401);
    Tensor<double> x = random_tensor({2, 2, 5, 5}, data_rng);
    Tensor<double> y = random_targets(2, 3, data_rng);
    auto report = finite_diff_check(m, x, y);
    CHECK(report.pass);
}

TEST_CASE("residual block gradients match finite differences") {
    Rng rng(500);
    Model<double> m;
    m.emplace<ResidualBlock<double>>(2, 3, 2, false, "blk", rng);
    m.emplace<GlobalAvgPool<double>>();
    m.emplace<Sigmoid<double>>();

    Rng data_rng(501);
    Tensor<double> x = random_tensor({3, 2, 6, 6}, data_rng);
    Tensor<double> y = random_targets(3, 3, data_rng);
    auto report = finite_diff_check(m, x, y);
    CHECK(report.pass);
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("dropout with a replayed mask still gradchecks") {
    Rng rng(600);
    Model<double> m;
    m.emplace<Dense<double>>(4, 4, "fc", rng);
    m.emplace<Dropout<double>>(0.5);
    m.emplace<Sigmoid<double>>();

    Rng data_rng(601);
    Tensor<double> x = random_tensor({3, 4}, data_rng);
    Tensor<double> y = random_targets(3, 4, data_rng);
    auto report = finite_diff_check(m, x, y);
    CHECK(report.pass);
}
