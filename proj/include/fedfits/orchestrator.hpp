#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedfits/aggregation.hpp"
#include "fedfits/attacks.hpp"
#include "fedfits/core.hpp"
#include "fedfits/data.hpp"
#include "fedfits/fitness.hpp"
#include "fedfits/models.hpp"
#include "fedfits/scheduling.hpp"
#include "fedfits/selection.hpp"

namespace fedfits {

enum class DatasetKind { blobs, csv, idx };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::blobs;
    // blobs
    std::size_t num_classes = 2;
    std::size_t dim = 20;
    std::size_t samples_per_class = 1000;
    double separation = 2.0;
    // csv
    std::string path;
    // idx
    std::string images_path;
    std::string labels_path;

    bool operator==(const DatasetSpec&) const = default;
};

struct ExperimentConfig {
    std::string name;  // label in comparison tables; defaults to the strategy name
    std::uint64_t seed = 1;
    DatasetSpec dataset;
    PartitionSpec partition;
    ModelSpec model;  // input_dim and num_classes are taken from the dataset
    TrainConfig train;
    SelectionStrategy strategy;
    FitnessParams fitness;
    SlotParams slots;
    TeamThetaMode theta_mode = TeamThetaMode::sum;
    Aggregator aggregator;
    AttackSpec attack;
    std::size_t rounds = 40;
    std::optional<double> target_accuracy;
    double server_eval_fraction = 0.1;

    std::string label() const;
    void validate() const;
};

/// Everything a run needs besides the configuration: the held-out server shard
/// and the per-client train/test shards.
struct Federation {
    Dataset server_eval;
    std::vector<ClientState> clients;
    std::size_t total_samples = 0;  // n = sum of n_k
};

struct SelectionEvent {
    std::size_t round = 0;
    std::vector<ClientScore> scores;  // empty unless elected by fitness
    double threshold = 0.0;           // NaN for baselines
    double alpha = 0.0;               // NaN for baselines
    std::vector<ClientId> selected;
    bool elected = true;  // false for the round-1 free-for-all of fedfits
};

struct RunResult {
    std::string algorithm;
    std::size_t num_clients = 0;
    std::vector<ClientId> malicious;
    std::vector<RoundRecord> rounds;
    FlatModel final_model;
    /// Fraction of clients that were in at least one aggregated team. For
    /// fedfits this includes the round-1 team, which is every client.
    double participation_ratio = 0.0;
    /// Same, counting only teams that came out of an election.
    double elected_participation_ratio = 0.0;
    std::optional<std::size_t> time_to_target_round;
    std::vector<SelectionEvent> selection_trace;  // one entry per team formation

    double final_accuracy() const;
    double best_accuracy() const;
    std::int64_t total_wall_ms() const;
    /// How many recorded teams each client appeared in.
    std::vector<std::size_t> selection_counts() const;
};

struct RunOptions {
    std::size_t threads = 1;
};

/// Loads or synthesises the dataset, splits off the server shard, partitions
/// the rest, splits each client 80/20 and applies label poisoning.
Federation build_federation(const ExperimentConfig& config);

/// The input dim and class count of the config's dataset.
ModelSpec resolve_model_spec(const ExperimentConfig& config, const Federation& federation);

RunResult run(const ExperimentConfig& config, const RunOptions& options = {});
RunResult run(const ExperimentConfig& config, const Federation& federation,
              const RunOptions& options = {});

/// Round-based baselines: every round is an election, no theta or threshold.
RunResult run_baseline(const ExperimentConfig& config, const RunOptions& options = {});

struct ComparisonEntry {
    std::string label;
    std::string algorithm;
    std::vector<std::uint64_t> seeds;
    std::vector<RunResult> runs;
    double median_final_accuracy = 0.0;
    std::optional<double> median_time_to_target;  // over seeds that reached the target
    double median_participation = 0.0;
    double median_simulated_cost = 0.0;
};

struct ComparisonSummary {
    std::vector<ComparisonEntry> entries;
};

/// Runs every config under every seed. Configs must share dataset, partition and model.
ComparisonSummary compare(std::span<const ExperimentConfig> configs,
                          std::span<const std::uint64_t> seeds, const RunOptions& options = {});

double median(std::vector<double> values);

}  // namespace fedfits
