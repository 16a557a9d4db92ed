#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fedfits/core.hpp"

namespace fedfits {

struct SlotParams {
    std::size_t msl = 5;  // maximum slot length, rounds
    std::size_t pft = 2;  // consecutive declines tolerated before reselection

    void validate() const;
};

/// How the per-round team quality is formed from client thetas.
enum class TeamThetaMode { sum, mean };

struct SlotState {
    std::size_t p = 0;  // consecutive decline counter
    std::optional<double> last_theta;
    std::vector<ClientId> team;
    std::size_t round_of_last_selection = 0;
};

/// p grows by one when the team theta strictly drops (from round 3 on) and resets otherwise.
SlotState update_decline_counter(SlotState state, double theta_t, std::size_t round);

/// Whether round `next_round` starts with a fresh election. Rounds 1 and 2 always do.
bool should_reselect(std::size_t p_next, std::size_t next_round, const SlotParams& params);

}  // namespace fedfits
