#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedfits/core.hpp"
#include "fedfits/rng.hpp"

namespace fedfits {

using Partition = std::vector<std::vector<std::size_t>>;  // row indices per client, ascending

enum class PartitionScheme { dirichlet, uniform_iid, by_shards };

struct PartitionSpec {
    std::size_t num_clients = 10;
    PartitionScheme scheme = PartitionScheme::dirichlet;
    double concentration = 0.5;         // dirichlet
    std::size_t shards_per_client = 2;  // by_shards
    std::size_t min_samples_per_client = 10;

    void validate() const;

    bool operator==(const PartitionSpec&) const = default;
};

inline constexpr int dirichlet_max_retries = 1000;

/// Unit-variance Gaussian blobs. Class centres sit at pairwise distance
/// `separation` when num_classes <= dim.
Dataset synth_blobs(std::size_t num_classes, std::size_t dim, std::size_t samples_per_class,
                    double separation, Rng& rng);

/// Per-class client proportions drawn from Dirichlet(concentration); redrawn
/// until every client holds at least min_samples rows.
Partition partition_dirichlet(const Dataset& ds, std::size_t num_clients, double concentration,
                              std::size_t min_samples, Rng& rng);
Partition partition_uniform(const Dataset& ds, std::size_t num_clients, Rng& rng);
Partition partition_shards(const Dataset& ds, std::size_t num_clients,
                           std::size_t shards_per_client, Rng& rng);
Partition make_partition(const Dataset& ds, const PartitionSpec& spec, Rng& rng);

/// Stratified split of `rows` into (kept, held_out). Held-out count is
/// floor(fraction * n), at least one when fraction > 0 and n >= 2.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const Dataset& ds, std::span<const std::size_t> rows, double fraction, Rng& rng);

/// Label in the last column. Integer labels are used as class ids directly;
/// any other label text is mapped to ids by first appearance.
Dataset load_csv(const std::string& path, std::vector<std::string>* label_names = nullptr);
void write_csv(const Dataset& ds, const std::string& path);

/// IDX image/label pair (MNIST layout); pixels scaled by 1/255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

}  // namespace fedfits
