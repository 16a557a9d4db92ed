#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "fedfits/fitness.hpp"
#include "fedfits/scheduling.hpp"
#include "fedfits/selection.hpp"

using namespace fedfits;

namespace {

FitnessParams radians() {
    FitnessParams p;
    p.alpha = 0.5;
    p.theta_normalized = false;
    return p;
}

std::vector<ClientScore> scored(std::vector<double> values) {
    std::vector<ClientScore> out;
    for (std::size_t i = 0; i < values.size(); ++i) out.push_back({i, 0.0, 0.0, values[i]});
    return out;
}

}  // namespace

TEST_SUITE("fitness") {
    TEST_CASE("theta on the loss axis is zero") {
        CHECK(compute_theta({1, 0}, {1, 0}, radians()) == doctest::Approx(0.0));
    }

    TEST_CASE("theta of a mixed point") {
        const EvalResult global{0.5, 0.8}, local{0.3, 0.9};
        const double expect = std::acos(0.8 / std::sqrt(0.64 + 2.89));
        CHECK(compute_theta(global, local, radians()) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(compute_theta(global, local, radians()) == doctest::Approx(1.1310).epsilon(1e-4));
        FitnessParams norm;
        CHECK(compute_theta(global, local, norm) == doctest::Approx(0.7199).epsilon(1e-4));
    }

    TEST_CASE("theta approaches a right angle as loss vanishes") {
        FitnessParams norm;
        CHECK(compute_theta({1e-9, 1}, {1e-9, 1}, norm) == doctest::Approx(1.0).epsilon(1e-6));
    }

    TEST_CASE("theta of the origin is an error") {
        CHECK_THROWS_AS(compute_theta({0, 0}, {0, 0}, radians()), std::domain_error);
    }

    TEST_CASE("literal denominator differs from the midpoint geometry") {
        FitnessParams literal;
        literal.verbatim_theta_formula = true;
        const EvalResult global{0.5, 0.8}, local{0.3, 0.9};
        const double arg = 0.8 / std::sqrt(1.3 * 1.3 + 1.2 * 1.2);
        CHECK(compute_theta(global, local, literal) ==
              doctest::Approx(std::acos(arg) / (std::numbers::pi / 2)).epsilon(1e-12));
    }

    TEST_CASE("score interpolates between share and theta") {
        CHECK(compute_score(0.1, 0.7, 1.0) == doctest::Approx(0.1));
        CHECK(compute_score(0.1, 0.7, 0.0) == doctest::Approx(0.7));
        CHECK(compute_score(0.1, 0.7199, 0.5) == doctest::Approx(0.40995).epsilon(1e-12));
    }

    TEST_CASE("threshold scales the mean") {
        const auto s = scored({0.6, 0.4, 0.5});
        CHECK(compute_threshold(s, 0.1) == doctest::Approx(0.45));
        CHECK(compute_threshold(s, 0.0) == doctest::Approx(0.5));
        CHECK(compute_threshold(s, 1.0) == doctest::Approx(0.0));
        CHECK_THROWS_AS(compute_threshold(std::vector<ClientScore>{}, 0.1), std::invalid_argument);
    }

    TEST_CASE("dynamic alpha counts clients whose share beats theta") {
        std::vector<ClientScore> s{{0, 0.6, 0.3, 0}, {1, 0.2, 0.5, 0}, {2, 0.2, 0.4, 0}};
        CHECK(dynamic_alpha(s) == doctest::Approx(1.0 / 3.0));
        std::vector<ClientScore> all_above{{0, 0.6, 0.3, 0}, {1, 0.9, 0.5, 0}};
        CHECK(dynamic_alpha(all_above) == 1.0);
        std::vector<ClientScore> none_above{{0, 0.3, 0.3, 0}, {1, 0.1, 0.5, 0}};
        CHECK(dynamic_alpha(none_above) == 0.0);
        CHECK_THROWS_WITH_AS(dynamic_alpha(s, false), "dynamic alpha requires normalized theta",
                             std::invalid_argument);
    }

    TEST_CASE("parameter validation") {
        FitnessParams p;
        p.beta = 1.5;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
        p.beta = 0.1;
        p.theta_normalized = false;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
        p.alpha = 0.3;
        CHECK_NOTHROW(p.validate());
    }
}

TEST_SUITE("scheduling") {
    TEST_CASE("no decline is counted before round three") {
        SlotState s;
        s.p = 1;
        s.last_theta = 0.9;
        CHECK(update_decline_counter(s, 0.1, 2).p == 0);
    }

    TEST_CASE("a strict drop increments the counter") {
        SlotState s;
        s.p = 1;
        s.last_theta = 0.9;
        const SlotState next = update_decline_counter(s, 0.8, 5);
        CHECK(next.p == 2);
        CHECK(next.last_theta == 0.8);
    }

    TEST_CASE("a tie resets the counter") {
        SlotState s;
        s.p = 1;
        s.last_theta = 0.9;
        CHECK(update_decline_counter(s, 0.9, 5).p == 0);
    }

    TEST_CASE("reselection triggers") {
        CHECK(should_reselect(2, 7, {5, 2}));
        CHECK(should_reselect(0, 6, {3, 5}));
        CHECK_FALSE(should_reselect(1, 4, {3, 3}));
        CHECK(should_reselect(0, 1, {5, 2}));
        CHECK(should_reselect(0, 2, {5, 2}));
    }

    TEST_CASE("slot parameters must be positive") {
        CHECK_THROWS_AS((SlotParams{0, 2}).validate(), std::invalid_argument);
        CHECK_THROWS_AS((SlotParams{5, 0}).validate(), std::invalid_argument);
    }
}

TEST_SUITE("selection") {
    TEST_CASE("fitness filter keeps scores at or above the threshold") {
        const auto s = scored({0.6, 0.4, 0.5});
        CHECK(select_fedfits(s, 0.1) == std::vector<ClientId>{0, 2});
        CHECK(select_fedfits(s, 1.0) == std::vector<ClientId>{0, 1, 2});
        CHECK(select_fedfits(scored({0.3}), 0.0) == std::vector<ClientId>{0});
    }

    TEST_CASE("random selection size and determinism") {
        std::vector<ClientId> ids{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
        Rng a(1, {StreamDomain::selection, 0, 1}), b(1, {StreamDomain::selection, 0, 1});
        const auto picked = select_fedrand(ids, 0.5, a);
        CHECK(picked.size() == 5);
        CHECK(std::is_sorted(picked.begin(), picked.end()));
        CHECK(std::adjacent_find(picked.begin(), picked.end()) == picked.end());
        CHECK(select_fedrand(ids, 0.5, b) == picked);
        CHECK(select_fedrand(ids, 1.0, a) == ids);
    }

    TEST_CASE("power of choice keeps the largest losses among candidates") {
        std::vector<ClientId> ids{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
        std::vector<ClientId> queried;
        Rng rng(2, {StreamDomain::selection, 0, 1});
        const auto picked = select_fedpow(
            ids,
            [&](ClientId k) {
                queried.push_back(k);
                return static_cast<double>(k);
            },
            9, 7, rng);
        CHECK(picked.size() == 7);
        CHECK(queried.size() == 9);
        std::sort(queried.begin(), queried.end());
        for (ClientId k : picked) CHECK(std::binary_search(queried.begin(), queried.end(), k));
        // the two dropped candidates are the two smallest losses
        std::vector<ClientId> expect(queried.begin() + 2, queried.end());
        CHECK(picked == expect);

        Rng all(3, {StreamDomain::selection, 0, 1});
        std::vector<double> losses(10, 1.0);
        CHECK(select_fedpow(ids, losses, 10, 10, all) == ids);
    }

    TEST_CASE("power of choice loss filter") {
        std::vector<ClientId> ids{0, 1, 2};
        std::vector<double> losses{0.1, 0.9, 0.5};
        Rng rng(1, {StreamDomain::selection, 0, 1});
        CHECK(select_fedpow(ids, losses, 3, 2, rng) == std::vector<ClientId>{1, 2});
    }

    TEST_CASE("strategy validation") {
        SelectionStrategy s;
        s.kind = StrategyKind::fedpow;
        s.candidates = 9;
        s.team_size = 7;
        CHECK_NOTHROW(s.validate(10));
        s.team_size = 10;
        CHECK_THROWS_AS(s.validate(10), std::invalid_argument);
        s.kind = StrategyKind::fedrand;
        s.fraction = 0.0;
        CHECK_THROWS_AS(s.validate(10), std::invalid_argument);
    }
}
