#include "fedfits/scheduling.hpp"

#include <stdexcept>

namespace fedfits {

void SlotParams::validate() const {
    if (msl < 1) throw std::invalid_argument("msl must be >= 1");
    if (pft < 1) throw std::invalid_argument("pft must be >= 1");
}

SlotState update_decline_counter(SlotState state, double theta_t, std::size_t round) {
    if (round < 1) throw std::invalid_argument("rounds are numbered from 1");
    const bool declined = round > 2 && state.last_theta && theta_t < *state.last_theta;
    state.p = declined ? state.p + 1 : 0;
    state.last_theta = theta_t;
    return state;
}

bool should_reselect(std::size_t p_next, std::size_t next_round, const SlotParams& params) {
    if (next_round < 1) throw std::invalid_argument("rounds are numbered from 1");
    return next_round <= 2 || p_next >= params.pft || next_round % params.msl == 0;
}

}  // namespace fedfits
