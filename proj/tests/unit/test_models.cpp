#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "fedfits/data.hpp"
#include "fedfits/models.hpp"

using namespace fedfits;

namespace {

Dataset two_class(std::vector<std::vector<double>> xs, std::vector<int> ys) {
    Dataset ds;
    ds.dim = xs.front().size();
    ds.num_classes = 2;
    for (std::size_t i = 0; i < xs.size(); ++i) ds.push_back(xs[i], ys[i]);
    return ds;
}

ModelSpec logreg(std::size_t d, std::size_t c) {
    ModelSpec s;
    s.input_dim = d;
    s.num_classes = c;
    return s;
}

}  // namespace

TEST_SUITE("models") {
    TEST_CASE("parameter counts") {
        Rng rng(1, {StreamDomain::init, 0, 0});
        CHECK(init_model(logreg(4, 3), rng).size() == 15);
        ModelSpec mlp{ModelKind::mlp1, 2, 3, 2};
        CHECK(init_model(mlp, rng).size() == 17);
    }

    TEST_CASE("initialisation is deterministic, bounded and has zero biases") {
        Rng a(1, {StreamDomain::init, 0, 0}), b(1, {StreamDomain::init, 0, 0});
        const FlatModel m = init_model(logreg(4, 3), a);
        CHECK(m == init_model(logreg(4, 3), b));
        const double bound = std::sqrt(6.0 / 7.0);
        for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(m.weights[i]) <= bound);
        for (std::size_t i = 12; i < 15; ++i) CHECK(m.weights[i] == 0.0);
    }

    TEST_CASE("zero model on a balanced shard") {
        const Dataset ds = two_class({{1, 0}, {0, 1}, {2, 2}, {-1, 3}}, {0, 1, 0, 1});
        FlatModel m{logreg(2, 2).architecture(), std::vector<double>(6, 0.0)};
        const EvalResult r = evaluate(m, ds);
        CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        CHECK(r.accuracy == doctest::Approx(0.5));  // ties go to class 0
    }

    TEST_CASE("empty shard is an error") {
        FlatModel m{logreg(2, 2).architecture(), std::vector<double>(6, 0.0)};
        Dataset empty;
        empty.dim = 2;
        empty.num_classes = 2;
        CHECK_THROWS_AS(evaluate(m, empty), std::invalid_argument);
    }

    TEST_CASE("a zero learning rate leaves the model unchanged") {
        const Dataset ds = two_class({{1, 0}, {0, 1}}, {0, 1});
        Rng init(1, {StreamDomain::init, 0, 0});
        const FlatModel m = init_model(logreg(2, 2), init);
        Rng rng(1, {StreamDomain::shuffle, 0, 1});
        CHECK(local_update(m, ds, {3, 1, 0.0}, rng) == m);
    }

    TEST_CASE("single sample step matches the analytic softmax gradient") {
        const Dataset ds = two_class({{1.5, -2.0}}, {1});
        // W = [[0.1, -0.2], [0.3, 0.4]] (fan_in x fan_out), b = [0.05, -0.05]
        const std::vector<double> w{0.1, -0.2, 0.3, 0.4, 0.05, -0.05};
        FlatModel m{logreg(2, 2).architecture(), w};
        const double z0 = 1.5 * 0.1 - 2.0 * 0.3 + 0.05;
        const double z1 = 1.5 * -0.2 - 2.0 * 0.4 - 0.05;
        const double p0 = std::exp(z0) / (std::exp(z0) + std::exp(z1));
        const double g0 = p0, g1 = (1.0 - p0) - 1.0;
        const std::vector<double> grad{1.5 * g0, 1.5 * g1, -2.0 * g0, -2.0 * g1, g0, g1};
        const double eta = 0.3;
        Rng rng(1, {StreamDomain::shuffle, 0, 1});
        const FlatModel out = local_update(m, ds, {1, 1, eta}, rng);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(out.weights[i] == doctest::Approx(w[i] - eta * grad[i]).epsilon(1e-12));
        }
        CHECK(m.weights == w);
    }

    TEST_CASE("duplicated rows give the same mean gradient") {
        const Dataset ds = two_class({{1, 2}, {-1, 0.5}, {0.3, -0.7}}, {0, 1, 1});
        Rng init(2, {StreamDomain::init, 0, 0});
        const FlatModel m = init_model(ModelSpec{ModelKind::mlp1, 2, 4, 2}, init);
        std::vector<std::size_t> once{0, 1, 2}, twice{0, 1, 2, 0, 1, 2};
        const auto a = gradient(m, ds, once);
        const auto b = gradient(m, ds, twice);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }

    TEST_CASE("a full-batch step with a small rate lowers the loss") {
        Rng data(4, {StreamDomain::data, 0, 0});
        const Dataset ds = synth_blobs(2, 3, 50, 2.0, data);
        Rng init(4, {StreamDomain::init, 0, 0});
        const FlatModel m = init_model(logreg(3, 2), init);
        Rng rng(4, {StreamDomain::shuffle, 0, 1});
        const FlatModel next = local_update(m, ds, {1, full_batch, 0.01}, rng);
        CHECK(evaluate(next, ds).loss < evaluate(m, ds).loss);
    }

    TEST_CASE("a separable shard can be fit perfectly") {
        const Dataset ds = two_class({{-2, 0}, {-1, 0.5}, {1, -0.5}, {2, 0}}, {0, 0, 1, 1});
        FlatModel m{logreg(2, 2).architecture(), {-1, 1, 0, 0, 0, 0}};
        CHECK(evaluate(m, ds).accuracy == 1.0);
    }

    TEST_CASE("mismatched feature width is rejected") {
        const Dataset ds = two_class({{1, 2, 3}}, {0});
        FlatModel m{logreg(2, 2).architecture(), std::vector<double>(6, 0.0)};
        CHECK_THROWS_AS(evaluate(m, ds), std::invalid_argument);
    }
}
