#pragma once

#include <optional>
#include <span>

#include "fedfits/core.hpp"

namespace fedfits {

struct FitnessParams {
    /// Fixed trade-off weight; nullopt selects dynamic alpha.
    std::optional<double> alpha;
    double beta = 0.1;
    bool theta_normalized = true;
    /// Use the literal denominator sqrt((GL+GA)^2 + (LL+LA)^2) instead of the
    /// midpoint geometry. The arccos argument is clamped to [-1, 1].
    bool verbatim_theta_formula = false;

    bool dynamic_alpha() const { return !alpha.has_value(); }
    void validate() const;
};

struct ClientScore {
    ClientId client_id = 0;
    double q = 0.0;      // n_k / n
    double theta = 0.0;  // radians or normalized, per FitnessParams
    double score = 0.0;
};

/// Angle between the midpoint of the global and local (loss, accuracy) points
/// and the loss axis. Throws std::domain_error when all four metrics are zero.
double compute_theta(const EvalResult& global_eval, const EvalResult& local_eval,
                     const FitnessParams& params);

double compute_score(double q, double theta, double alpha);

/// Mean score over the scored clients, scaled by (1 - beta).
double compute_threshold(std::span<const ClientScore> scores, double beta);

/// Fraction of clients whose data share strictly exceeds their theta.
double dynamic_alpha(std::span<const ClientScore> scores, bool theta_normalized = true);

}  // namespace fedfits
