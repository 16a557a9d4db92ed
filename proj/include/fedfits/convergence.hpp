#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace fedfits {

/// F(w) = sum_i p_i * 0.5 * (w - c_i)^T A_i (w - c_i), one term per client.
struct QuadraticObjective {
    std::vector<Eigen::MatrixXd> curvatures;  // A_i, symmetric positive definite
    std::vector<Eigen::VectorXd> centers;     // c_i
    std::vector<double> weights;              // p_i, normalised to sum 1 on use

    std::size_t num_clients() const { return curvatures.size(); }
    std::size_t dim() const;

    /// Throws std::invalid_argument on shape mismatch, bad weights, or an A_i
    /// that is not symmetric positive definite (names the client).
    void validate() const;

    std::vector<double> normalized_weights() const;
    Eigen::MatrixXd hessian() const;  // sum_i p_i A_i
    Eigen::VectorXd minimizer() const;
    double value(const Eigen::VectorXd& w) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;
    Eigen::VectorXd client_gradient(std::size_t client, const Eigen::VectorXd& w) const;
    /// F(w) - F*, computed as 0.5 (w - w*)^T H (w - w*) to avoid cancellation.
    double excess(const Eigen::VectorXd& w) const;
};

struct QuadraticSpec {
    std::size_t num_clients = 10;
    std::size_t dim = 5;
    double curvature_min = 1.0;  // diagonal entries of A_i drawn uniformly in [min, max]
    double curvature_max = 10.0;
    double center_spread = 1.0;  // c_i ~ N(0, spread^2 I); 0 puts every c_i at the origin
    bool shared_center = false;  // every client uses c_0
    std::uint64_t seed = 1;

    void validate() const;
};

/// Diagonal A_i with random curvatures, equal client weights.
QuadraticObjective make_quadratic_objective(const QuadraticSpec& spec);

struct ConvergenceConfig {
    std::size_t rounds = 200;
    std::size_t local_steps = 5;  // exact-gradient steps per client per round
    double learning_rate = 0.02;
    double initial_distance = 10.0;   // w_0 = w* + distance * (1, ..., 1) / sqrt(dim)
    std::size_t plateau_window = 20;  // trailing rounds averaged into the plateau level
    double segment_factor = 10.0;     // pre-plateau segment ends once excess <= factor * plateau

    void validate() const;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t first = 0;  // index of the first point used
    std::size_t count = 0;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two points
/// with distinct x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceReport {
    std::vector<double> excess;             // F(w_t) - F*, t = 0..T
    std::vector<double> grad_norm_sq;       // ||grad F(w_t)||^2, t = 0..T
    std::vector<double> min_grad_norm_sq;   // running minimum of grad_norm_sq
    double plateau = 0.0;                   // mean excess over the trailing window
    LinearFit decay_fit;                    // log(excess) against t, pre-plateau segment
    double decay_rate = 0.0;                // exp(slope): per-round contraction factor
    std::optional<std::size_t> first_round_below(double tol) const;
    // Envelope min_grad_norm_sq[T] <= c1 / T + c2 for T = 1..rounds, with c2
    // the final running minimum and c1 the smallest value that makes it hold.
    double stationarity_c1 = 0.0;
    double stationarity_c2 = 0.0;
    bool min_grad_nonincreasing = true;
};

/// Full-participation federated averaging on the quadratic: each client takes
/// `local_steps` gradient steps from the global point, the server averages the
/// results with weights p_i.
ConvergenceReport validate_convergence(const QuadraticObjective& objective,
                                       const ConvergenceConfig& config);

}  // namespace fedfits
