#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedfits {

using ClientId = std::size_t;

enum class Activation { none, relu };

/// Layer widths from input to output; activations[i] is applied after layer i.
/// The last layer is always linear (logits).
struct Architecture {
    std::vector<std::size_t> widths;
    std::vector<Activation> activations;

    std::size_t num_layers() const { return widths.empty() ? 0 : widths.size() - 1; }
    std::size_t parameter_count() const;

    bool operator==(const Architecture&) const = default;
};

/// One dense layer. The weight matrix is fan_in x fan_out, row-major.
struct LayerParams {
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    bool operator==(const LayerParams&) const = default;
};

/// Model parameters as one flat vector. Layout is layer-major with each
/// layer's weights (row-major) preceding its bias.
struct FlatModel {
    Architecture arch;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
    bool all_finite() const;

    bool operator==(const FlatModel&) const = default;
};

FlatModel flatten(const Architecture& arch, std::span<const LayerParams> layers);
std::vector<LayerParams> unflatten(const FlatModel& model);

/// Throws std::invalid_argument if the weight count disagrees with the architecture.
void check_layout(const FlatModel& model);

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Row-major n x d feature matrix with integer class labels.
struct Dataset {
    std::size_t dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }

    void push_back(std::span<const double> x, int label);
    Dataset subset(std::span<const std::size_t> rows) const;
    /// Throws std::invalid_argument when labels or features are out of contract.
    void validate() const;
};

struct ClientState {
    ClientId id = 0;
    Dataset train;
    Dataset test;
    std::size_t num_samples = 0;  // n_k: train + test
    bool malicious = false;
};

struct RoundRecord {
    std::size_t round = 0;
    std::vector<ClientId> team;
    EvalResult global_eval;
    double theta_sum = 0.0;
    bool selection_event = false;
    std::int64_t wall_ms = 0;
    double participation_cumulative = 0.0;
    // Absent values are NaN.
    double alpha_used = 0.0;
    double threshold = 0.0;
    double simulated_cost = 0.0;
};

}  // namespace fedfits
