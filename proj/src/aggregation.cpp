#include "fedfits/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedfits {

namespace {

void check_compatible(const FlatModel& reference, const FlatModel& other, std::size_t index) {
    if (!(other.arch == reference.arch) || other.weights.size() != reference.weights.size()) {
        throw std::invalid_argument("model " + std::to_string(index) +
                                    " has a different architecture");
    }
}

template <typename Get>
void check_all(std::size_t n, Get get) {
    if (n == 0) throw std::invalid_argument("cannot aggregate an empty model set");
    for (std::size_t i = 1; i < n; ++i) check_compatible(get(0), get(i), i);
}

}  // namespace

void Aggregator::validate() const {
    if (kind == AggregatorKind::trimmed_mean && !(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
        throw std::invalid_argument("trim_fraction must lie in [0, 0.5)");
    }
}

const char* aggregator_name(AggregatorKind kind) {
    switch (kind) {
        case AggregatorKind::weighted_mean: return "weighted_mean";
        case AggregatorKind::coord_median: return "coord_median";
        case AggregatorKind::trimmed_mean: return "trimmed_mean";
        case AggregatorKind::krum: return "krum";
    }
    return "unknown";
}

FlatModel weighted_mean(std::span<const WeightedModel> models, bool verbatim_weights) {
    check_all(models.size(), [&](std::size_t i) -> const FlatModel& { return *models[i].model; });
    double total = 0.0;
    for (const auto& m : models) {
        if (!(m.num_samples >= 0.0)) throw std::invalid_argument("negative sample count");
        total += m.num_samples;
    }
    if (verbatim_weights) total = static_cast<double>(models.size());
    if (!(total > 0.0)) throw std::invalid_argument("aggregation weights sum to zero");

    FlatModel out{models[0].model->arch,
                  std::vector<double>(models[0].model->weights.size(), 0.0)};
    for (const auto& m : models) {
        const double w = m.num_samples / total;
        for (std::size_t i = 0; i < out.weights.size(); ++i) out.weights[i] += w * m.model->weights[i];
    }
    if (!verbatim_weights) {
        // Clamp rounding drift so the result stays inside the input range.
        for (std::size_t i = 0; i < out.weights.size(); ++i) {
            double lo = models[0].model->weights[i];
            double hi = lo;
            for (const auto& m : models) {
                lo = std::min(lo, m.model->weights[i]);
                hi = std::max(hi, m.model->weights[i]);
            }
            out.weights[i] = std::clamp(out.weights[i], lo, hi);
        }
    }
    return out;
}

FlatModel coord_median(std::span<const FlatModel> models) {
    check_all(models.size(), [&](std::size_t i) -> const FlatModel& { return models[i]; });
    const std::size_t n = models.size();
    FlatModel out{models[0].arch, std::vector<double>(models[0].weights.size())};
    std::vector<double> column(n);
    for (std::size_t i = 0; i < out.weights.size(); ++i) {
        for (std::size_t k = 0; k < n; ++k) column[k] = models[k].weights[i];
        std::sort(column.begin(), column.end());
        out.weights[i] = n % 2 == 1 ? column[n / 2]
                                    : column[n / 2 - 1] + (column[n / 2] - column[n / 2 - 1]) / 2.0;
    }
    return out;
}

FlatModel trimmed_mean(std::span<const FlatModel> models, double trim_fraction) {
    check_all(models.size(), [&](std::size_t i) -> const FlatModel& { return models[i]; });
    if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
        throw std::invalid_argument("trim_fraction must lie in [0, 0.5)");
    }
    const std::size_t n = models.size();
    const auto cut = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(n)));
    if (2 * cut >= n) {
        throw std::invalid_argument("trimming " + std::to_string(cut) + " per tail leaves no values out of " +
                                    std::to_string(n));
    }
    FlatModel out{models[0].arch, std::vector<double>(models[0].weights.size())};
    std::vector<double> column(n);
    for (std::size_t i = 0; i < out.weights.size(); ++i) {
        for (std::size_t k = 0; k < n; ++k) column[k] = models[k].weights[i];
        std::sort(column.begin(), column.end());
        double sum = 0.0;
        for (std::size_t k = cut; k < n - cut; ++k) sum += column[k];
        out.weights[i] = std::clamp(sum / static_cast<double>(n - 2 * cut), column[cut],
                                    column[n - cut - 1]);
    }
    return out;
}

std::size_t krum_index(std::span<const FlatModel> models, std::size_t f) {
    check_all(models.size(), [&](std::size_t i) -> const FlatModel& { return models[i]; });
    const std::size_t n = models.size();
    if (n < 2 * f + 3) {
        throw std::invalid_argument("krum with f=" + std::to_string(f) + " needs at least " +
                                    std::to_string(2 * f + 3) + " models, got " + std::to_string(n));
    }
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double d = 0.0;
            for (std::size_t i = 0; i < models[a].weights.size(); ++i) {
                const double diff = models[a].weights[i] - models[b].weights[i];
                d += diff * diff;
            }
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }
    const std::size_t neighbours = n - f - 2;
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<double> row;
    for (std::size_t a = 0; a < n; ++a) {
        row.clear();
        for (std::size_t b = 0; b < n; ++b) {
            if (b != a) row.push_back(dist[a * n + b]);
        }
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbours), row.end());
        double score = 0.0;
        for (std::size_t k = 0; k < neighbours; ++k) score += row[k];
        if (score < best_score) {
            best_score = score;
            best = a;
        }
    }
    return best;
}

FlatModel krum(std::span<const FlatModel> models, std::size_t f) {
    return models[krum_index(models, f)];
}

FlatModel aggregate(const Aggregator& agg, std::span<const WeightedModel> models) {
    agg.validate();
    if (agg.kind == AggregatorKind::weighted_mean) return weighted_mean(models, agg.verbatim_weights);
    std::vector<FlatModel> plain;
    plain.reserve(models.size());
    for (const auto& m : models) plain.push_back(*m.model);
    switch (agg.kind) {
        case AggregatorKind::coord_median: return coord_median(plain);
        case AggregatorKind::trimmed_mean: return trimmed_mean(plain, agg.trim_fraction);
        case AggregatorKind::krum: return krum(plain, agg.byzantine_f);
        default: break;
    }
    throw std::logic_error("unhandled aggregator");
}

}  // namespace fedfits
