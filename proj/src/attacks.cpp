#include "fedfits/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fedfits {

void AttackSpec::validate() const {
    if (!(malicious_fraction >= 0.0 && malicious_fraction < 1.0)) {
        throw std::invalid_argument("malicious_fraction must lie in [0, 1)");
    }
    if (start_round < 1) throw std::invalid_argument("start_round must be >= 1");
    switch (kind) {
        case AttackKind::label_flip:
            if (!(flip_fraction > 0.0 && flip_fraction <= 1.0)) {
                throw std::invalid_argument("flip_fraction must lie in (0, 1]");
            }
            break;
        case AttackKind::noise_inject:
            if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
            break;
        case AttackKind::sign_flip:
            if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
            break;
        case AttackKind::none:
            break;
    }
}

std::vector<ClientId> AttackSpec::resolve_ids(std::size_t num_clients) const {
    if (kind == AttackKind::none) return {};
    std::vector<ClientId> ids;
    if (!malicious_ids.empty()) {
        for (ClientId id : malicious_ids) {
            if (id >= num_clients) {
                throw std::invalid_argument("malicious_ids entry " + std::to_string(id) +
                                            " out of range for " + std::to_string(num_clients) +
                                            " clients");
            }
        }
        ids = malicious_ids;
    } else {
        std::size_t m = last_m ? *last_m
                               : static_cast<std::size_t>(std::floor(
                                     malicious_fraction * static_cast<double>(num_clients) + 0.5));
        m = std::min(m, num_clients);
        for (std::size_t k = num_clients - m; k < num_clients; ++k) ids.push_back(k);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

const char* attack_name(AttackKind kind) {
    switch (kind) {
        case AttackKind::none: return "none";
        case AttackKind::label_flip: return "label_flip";
        case AttackKind::noise_inject: return "noise_inject";
        case AttackKind::sign_flip: return "sign_flip";
    }
    return "unknown";
}

Dataset poison_labels(Dataset shard, double flip_fraction, Rng& rng) {
    if (shard.num_classes < 2) throw std::invalid_argument("label flipping needs >= 2 classes");
    if (!(flip_fraction >= 0.0 && flip_fraction <= 1.0)) {
        throw std::invalid_argument("flip_fraction must lie in [0, 1]");
    }
    const std::size_t n = shard.size();
    const auto count = std::min(
        n, static_cast<std::size_t>(std::floor(flip_fraction * static_cast<double>(n) + 0.5)));
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + rng.below(n - i);
        std::swap(rows[i], rows[j]);
    }
    const int classes = static_cast<int>(shard.num_classes);
    for (std::size_t i = 0; i < count; ++i) {
        int& y = shard.labels[rows[i]];
        y = (y + 1) % classes;
    }
    return shard;
}

FlatModel poison_update(FlatModel model, AttackKind kind, double param, Rng& rng) {
    switch (kind) {
        case AttackKind::noise_inject:
            if (param < 0.0) throw std::invalid_argument("sigma must be non-negative");
            if (param == 0.0) break;
            for (auto& w : model.weights) w += param * rng.normal();
            break;
        case AttackKind::sign_flip:
            for (auto& w : model.weights) w *= -param;
            break;
        case AttackKind::none:
        case AttackKind::label_flip:
            break;
    }
    return model;
}

}  // namespace fedfits
