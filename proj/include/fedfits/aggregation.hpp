#pragma once

#include <cstddef>
#include <span>

#include "fedfits/core.hpp"

namespace fedfits {

enum class AggregatorKind { weighted_mean, coord_median, trimmed_mean, krum };

struct Aggregator {
    AggregatorKind kind = AggregatorKind::weighted_mean;
    double trim_fraction = 0.1;    // trimmed_mean, per tail
    std::size_t byzantine_f = 1;   // krum
    /// weighted_mean only: weights n_k / |S_t| instead of n_k / sum(n_j).
    bool verbatim_weights = false;

    void validate() const;
};

const char* aggregator_name(AggregatorKind kind);

struct WeightedModel {
    const FlatModel* model = nullptr;
    double num_samples = 1.0;
};

/// Convex combination with weights n_k / sum(n_j), accumulated in input order.
FlatModel weighted_mean(std::span<const WeightedModel> models, bool verbatim_weights = false);

/// Per-coordinate median; an even count averages the two middle values.
FlatModel coord_median(std::span<const FlatModel> models);

/// Per-coordinate mean after dropping floor(trim_fraction * n) values from each tail.
FlatModel trimmed_mean(std::span<const FlatModel> models, double trim_fraction);

/// Index of the model minimising the summed squared distance to its n - f - 2
/// nearest neighbours. Requires n >= 2f + 3; ties go to the lowest index.
std::size_t krum_index(std::span<const FlatModel> models, std::size_t f);
FlatModel krum(std::span<const FlatModel> models, std::size_t f);

FlatModel aggregate(const Aggregator& agg, std::span<const WeightedModel> models);

}  // namespace fedfits
