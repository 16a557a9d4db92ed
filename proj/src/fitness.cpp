#include "fedfits/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedfits {

void FitnessParams::validate() const {
    if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) {
        throw std::invalid_argument("alpha must lie in [0, 1]");
    }
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
    if (!alpha && !theta_normalized) {
        throw std::invalid_argument("dynamic alpha requires normalized theta");
    }
}

double compute_theta(const EvalResult& g, const EvalResult& l, const FitnessParams& params) {
    if (g.loss < 0.0 || l.loss < 0.0 || g.accuracy < 0.0 || g.accuracy > 1.0 ||
        l.accuracy < 0.0 || l.accuracy > 1.0) {
        throw std::domain_error("evaluation metrics out of range");
    }
    if (g.loss == 0.0 && l.loss == 0.0 && g.accuracy == 0.0 && l.accuracy == 0.0) {
        throw std::domain_error("degenerate evaluation point");
    }
    const double loss_sum = g.loss + l.loss;
    double denom;
    if (params.verbatim_theta_formula) {
        denom = std::hypot(g.loss + g.accuracy, l.loss + l.accuracy);
    } else {
        denom = std::hypot(loss_sum, g.accuracy + l.accuracy);
    }
    const double cosine = std::clamp(loss_sum / denom, -1.0, 1.0);
    double theta = std::acos(cosine);
    if (params.theta_normalized) theta /= std::numbers::pi / 2.0;
    return theta;
}

double compute_score(double q, double theta, double alpha) {
    return alpha * q + (1.0 - alpha) * theta;
}

double compute_threshold(std::span<const ClientScore> scores, double beta) {
    if (scores.empty()) throw std::invalid_argument("threshold of an empty score set");
    double sum = 0.0;
    for (const auto& s : scores) sum += s.score;
    return sum / static_cast<double>(scores.size()) * (1.0 - beta);
}

double dynamic_alpha(std::span<const ClientScore> scores, bool theta_normalized) {
    if (!theta_normalized) throw std::invalid_argument("dynamic alpha requires normalized theta");
    if (scores.empty()) throw std::invalid_argument("dynamic alpha of an empty score set");
    std::size_t favoured = 0;
    for (const auto& s : scores) {
        if (s.q > s.theta) ++favoured;
    }
    return static_cast<double>(favoured) / static_cast<double>(scores.size());
}

}  // namespace fedfits
