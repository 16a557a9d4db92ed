#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fedfits/core.hpp"
#include "fedfits/rng.hpp"

namespace fedfits {

enum class AttackKind { none, label_flip, noise_inject, sign_flip };

struct AttackSpec {
    AttackKind kind = AttackKind::none;
    double flip_fraction = 1.0;  // label_flip
    double sigma = 1.0;          // noise_inject
    double scale = 1.0;          // sign_flip
    /// Used when neither explicit ids nor last_m are given: last round(fraction * K) clients.
    double malicious_fraction = 0.3;
    std::vector<ClientId> malicious_ids;
    std::optional<std::size_t> last_m;
    std::size_t start_round = 1;  // model poisoning only

    void validate() const;
    /// Resolved malicious set, sorted. Empty when kind is none.
    std::vector<ClientId> resolve_ids(std::size_t num_clients) const;
};

const char* attack_name(AttackKind kind);

/// Rewrites y -> (y + 1) mod C on round(flip_fraction * n) rows sampled without replacement.
Dataset poison_labels(Dataset shard, double flip_fraction, Rng& rng);

/// noise_inject adds N(0, param^2) per weight; sign_flip returns -param * weights.
FlatModel poison_update(FlatModel model, AttackKind kind, double param, Rng& rng);

}  // namespace fedfits
