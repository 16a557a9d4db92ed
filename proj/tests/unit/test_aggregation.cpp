#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "fedfits/aggregation.hpp"

using namespace fedfits;

namespace {

FlatModel vec(std::vector<double> w) {
    Architecture arch{{1, w.size() - 1}, {Activation::none}};
    if (w.size() < 2) arch = {{0, 1}, {Activation::none}};
    return FlatModel{arch, std::move(w)};
}

}  // namespace

TEST_SUITE("aggregation") {
    TEST_CASE("weighted mean uses sample shares") {
        FlatModel a = vec({0, 0}), b = vec({4, 8});
        std::vector<WeightedModel> in{{&a, 1}, {&b, 3}};
        CHECK(weighted_mean(in).weights == std::vector<double>{3, 6});
    }

    TEST_CASE("weighted mean degenerate cases") {
        FlatModel a = vec({1, 5}), b = vec({3, 7});
        std::vector<WeightedModel> equal{{&a, 2}, {&b, 2}};
        CHECK(weighted_mean(equal).weights == std::vector<double>{2, 6});
        std::vector<WeightedModel> single{{&a, 9}};
        CHECK(weighted_mean(single) == a);
        CHECK_THROWS_AS(weighted_mean(std::vector<WeightedModel>{}), std::invalid_argument);
        FlatModel c = vec({1, 2, 3});
        std::vector<WeightedModel> mismatch{{&a, 1}, {&c, 1}};
        CHECK_THROWS_AS(weighted_mean(mismatch), std::invalid_argument);
    }

    TEST_CASE("literal weights divide by the team size") {
        FlatModel a = vec({2, 2}), b = vec({2, 2});
        std::vector<WeightedModel> in{{&a, 1}, {&b, 3}};
        // n_k / |S| sums to 2, so identical inputs come out doubled
        CHECK(weighted_mean(in, true).weights == std::vector<double>{4, 4});
    }

    TEST_CASE("coordinate median") {
        std::vector<FlatModel> odd{vec({1, 2}), vec({3, 4}), vec({100, 200})};
        CHECK(coord_median(odd).weights == std::vector<double>{3, 4});
        std::vector<FlatModel> even{vec({1, 2}), vec({3, 6})};
        CHECK(coord_median(even).weights == std::vector<double>{2, 4});
    }

    TEST_CASE("trimmed mean") {
        std::vector<FlatModel> five{vec({0, 0}), vec({1, 0}), vec({2, 0}), vec({3, 0}), vec({1000, 0})};
        CHECK(trimmed_mean(five, 0.2).weights[0] == doctest::Approx(2.0));
        std::vector<FlatModel> two{vec({1, 2}), vec({3, 4})};
        CHECK(trimmed_mean(two, 0.0).weights == std::vector<double>{2, 3});
        std::vector<FlatModel> same(4, vec({7, 8}));
        CHECK(trimmed_mean(same, 0.25).weights == std::vector<double>{7, 8});
        CHECK_THROWS_AS(trimmed_mean(two, 0.5), std::invalid_argument);
    }

    TEST_CASE("krum") {
        std::vector<FlatModel> same(5, vec({1, 1}));
        CHECK(krum_index(same, 1) == 0);
        std::vector<FlatModel> outlier{vec({0.1, 0}), vec({0, 0.1}), vec({-0.1, 0}), vec({0, -0.1}),
                                       vec({1000, 1000})};
        CHECK(krum_index(outlier, 1) < 4);
        CHECK(krum(outlier, 1).weights[0] < 1.0);
        std::vector<FlatModel> few(4, vec({1, 1}));
        CHECK_THROWS_AS(krum_index(few, 1), std::invalid_argument);
    }

    TEST_CASE("dispatch by kind") {
        FlatModel a = vec({1, 2}), b = vec({3, 4}), c = vec({100, 200});
        std::vector<WeightedModel> in{{&a, 1}, {&b, 1}, {&c, 1}};
        Aggregator agg;
        agg.kind = AggregatorKind::coord_median;
        CHECK(aggregate(agg, in).weights == std::vector<double>{3, 4});
        agg.kind = AggregatorKind::weighted_mean;
        CHECK(aggregate(agg, in).weights[0] == doctest::Approx(104.0 / 3.0));
    }
}
