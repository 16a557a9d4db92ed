#include "fedfits/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fedfits {

namespace {

std::vector<ClientId> sample_without_replacement(std::span<const ClientId> ids, std::size_t count,
                                                 Rng& rng) {
    std::vector<ClientId> pool(ids.begin(), ids.end());
    std::sort(pool.begin(), pool.end());
    count = std::min(count, pool.size());
    // Partial Fisher-Yates from the front.
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

}  // namespace

void SelectionStrategy::validate(std::size_t num_clients) const {
    switch (kind) {
        case StrategyKind::fedrand:
            if (!(fraction > 0.0 && fraction <= 1.0)) {
                throw std::invalid_argument("fraction must lie in (0, 1] for fedrand");
            }
            break;
        case StrategyKind::fedpow:
            if (team_size < 1 || team_size > candidates || candidates > num_clients) {
                throw std::invalid_argument("candidates and team_size need 1 <= team_size <= candidates <= K for fedpow (team_size=" +
                                            std::to_string(team_size) + ", candidates=" +
                                            std::to_string(candidates) + ", K=" +
                                            std::to_string(num_clients) + ")");
            }
            break;
        default:
            break;
    }
}

const char* strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::fedfits: return "fedfits";
        case StrategyKind::fedavg_full: return "fedavg_full";
        case StrategyKind::fedrand: return "fedrand";
        case StrategyKind::fedpow: return "fedpow";
    }
    return "unknown";
}

std::vector<ClientId> select_fedfits(std::span<const ClientScore> scores, double beta) {
    if (scores.empty()) return {};
    const double threshold = compute_threshold(scores, beta);
    std::vector<ClientId> team;
    for (const auto& s : scores) {
        if (threshold <= s.score) team.push_back(s.client_id);
    }
    if (team.empty()) {
        // Unreachable for finite scores since max >= mean >= threshold.
        for (const auto& s : scores) team.push_back(s.client_id);
    }
    std::sort(team.begin(), team.end());
    return team;
}

std::vector<ClientId> select_fedrand(std::span<const ClientId> client_ids, double fraction,
                                     Rng& rng) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("fedrand fraction must lie in (0, 1]");
    }
    if (client_ids.empty()) return {};
    const double raw = fraction * static_cast<double>(client_ids.size());
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(raw + 0.5)));
    auto team = sample_without_replacement(client_ids, count, rng);
    std::sort(team.begin(), team.end());
    return team;
}

std::vector<ClientId> select_fedpow(std::span<const ClientId> client_ids,
                                    const std::function<double(ClientId)>& loss_of,
                                    std::size_t d, std::size_t m, Rng& rng) {
    if (m < 1 || m > d || d > client_ids.size()) {
        throw std::invalid_argument("fedpow requires 1 <= m <= d <= K");
    }
    auto candidates = sample_without_replacement(client_ids, d, rng);
    std::sort(candidates.begin(), candidates.end());
    std::vector<std::pair<double, ClientId>> ranked;
    ranked.reserve(candidates.size());
    for (ClientId id : candidates) ranked.emplace_back(loss_of(id), id);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<ClientId> team;
    for (std::size_t i = 0; i < m; ++i) team.push_back(ranked[i].second);
    std::sort(team.begin(), team.end());
    return team;
}

std::vector<ClientId> select_fedpow(std::span<const ClientId> client_ids,
                                    std::span<const double> losses, std::size_t d,
                                    std::size_t m, Rng& rng) {
    if (losses.size() != client_ids.size()) {
        throw std::invalid_argument("one loss per client id is required");
    }
    auto loss_of = [&](ClientId id) {
        auto it = std::find(client_ids.begin(), client_ids.end(), id);
        return losses[static_cast<std::size_t>(it - client_ids.begin())];
    };
    return select_fedpow(client_ids, loss_of, d, m, rng);
}

}  // namespace fedfits
