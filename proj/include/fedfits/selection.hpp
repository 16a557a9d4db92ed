#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fedfits/core.hpp"
#include "fedfits/fitness.hpp"
#include "fedfits/rng.hpp"

namespace fedfits {

enum class StrategyKind { fedfits, fedavg_full, fedrand, fedpow };

struct SelectionStrategy {
    StrategyKind kind = StrategyKind::fedfits;
    double fraction = 0.5;       // fedrand
    std::size_t candidates = 0;  // fedpow d
    std::size_t team_size = 0;   // fedpow m

    void validate(std::size_t num_clients) const;
};

const char* strategy_name(StrategyKind kind);

/// Clients whose score reaches mean * (1 - beta), sorted by id.
std::vector<ClientId> select_fedfits(std::span<const ClientScore> scores, double beta);

/// Uniform sample of max(1, round(c*K)) ids without replacement, sorted.
std::vector<ClientId> select_fedrand(std::span<const ClientId> client_ids, double fraction,
                                     Rng& rng);

/// Power-of-choice: draw d candidates uniformly, keep the m with the largest
/// loss (ties to the lower id). `loss_of` is only queried for candidates.
std::vector<ClientId> select_fedpow(std::span<const ClientId> client_ids,
                                    const std::function<double(ClientId)>& loss_of,
                                    std::size_t d, std::size_t m, Rng& rng);

/// Same, with losses given parallel to `client_ids`.
std::vector<ClientId> select_fedpow(std::span<const ClientId> client_ids,
                                    std::span<const double> losses, std::size_t d,
                                    std::size_t m, Rng& rng);

}  // namespace fedfits
