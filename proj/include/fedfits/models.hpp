#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "fedfits/core.hpp"
#include "fedfits/fitness.hpp"
#include "fedfits/rng.hpp"

namespace fedfits {

enum class ModelKind { logreg, mlp1 };

struct ModelSpec {
    ModelKind kind = ModelKind::logreg;
    std::size_t input_dim = 1;
    std::size_t hidden_dim = 16;  // mlp1 only
    std::size_t num_classes = 2;

    Architecture architecture() const;
    void validate() const;

    bool operator==(const ModelSpec&) const = default;
};

inline constexpr std::size_t full_batch = std::numeric_limits<std::size_t>::max();

struct TrainConfig {
    std::size_t local_epochs = 1;
    std::size_t batch_size = 32;  // full_batch for whole-shard steps
    double learning_rate = 0.1;

    void validate() const;
};

/// Glorot-uniform weights, zero biases.
FlatModel init_model(const ModelSpec& spec, Rng& rng);

/// Class probabilities for a single sample.
std::vector<double> predict_proba(const FlatModel& model, std::span<const double> x);

/// Mean softmax cross-entropy and argmax accuracy (ties go to the lowest class).
EvalResult evaluate(const FlatModel& model, const Dataset& shard);

/// Gradient of the mean cross-entropy over `rows`, in FlatModel layout.
std::vector<double> gradient(const FlatModel& model, const Dataset& data,
                             std::span<const std::size_t> rows);
std::vector<double> gradient(const FlatModel& model, const Dataset& data);

/// E epochs of minibatch SGD. Minibatch order comes from a shuffle drawn from
/// `rng` each epoch; full-batch steps visit rows in index order.
FlatModel local_update(const FlatModel& model_in, const Dataset& train, const TrainConfig& cfg,
                       Rng& rng);

/// Applied to the freshly trained local model before it is evaluated or sent.
using ModelTransform = std::function<void(FlatModel&)>;

struct ClientUpdateResult {
    FlatModel model;
    double theta = 0.0;
    EvalResult global_eval;  // only meaningful when round > 1
    EvalResult local_eval;
};

ClientUpdateResult client_update(const ClientState& client, const FlatModel& global,
                                 const TrainConfig& cfg, std::size_t round, Rng& rng,
                                 const FitnessParams& fitness,
                                 const ModelTransform& tamper = {});

}  // namespace fedfits
