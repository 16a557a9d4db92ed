#include "fedfits/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fedfits/rng.hpp"

namespace fedfits {

std::size_t QuadraticObjective::dim() const {
    return curvatures.empty() ? 0 : static_cast<std::size_t>(curvatures.front().rows());
}

void QuadraticObjective::validate() const {
    const std::size_t n = curvatures.size();
    if (n == 0) throw std::invalid_argument("quadratic objective: no clients");
    if (centers.size() != n || weights.size() != n) {
        throw std::invalid_argument("quadratic objective: curvatures, centers and weights differ in length");
    }
    const auto d = static_cast<Eigen::Index>(dim());
    if (d == 0) throw std::invalid_argument("quadratic objective: zero dimension");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = curvatures[i];
        const std::string who = "client " + std::to_string(i);
        if (a.rows() != d || a.cols() != d || centers[i].size() != d) {
            throw std::invalid_argument("quadratic objective: " + who + " has the wrong shape");
        }
        if (!a.allFinite() || !centers[i].allFinite()) {
            throw std::invalid_argument("quadratic objective: " + who + " has non-finite entries");
        }
        if (!a.isApprox(a.transpose(), 1e-12)) {
            throw std::invalid_argument("quadratic objective: A for " + who + " is not symmetric");
        }
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() != Eigen::Success) {
            throw std::invalid_argument("quadratic objective: A for " + who +
                                        " is not positive definite");
        }
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
            throw std::invalid_argument("quadratic objective: weight for " + who + " must be positive");
        }
        total += weights[i];
    }
    if (!std::isfinite(total)) throw std::invalid_argument("quadratic objective: weights overflow");
}

std::vector<double> QuadraticObjective::normalized_weights() const {
    double total = 0.0;
    for (double w : weights) total += w;
    std::vector<double> p(weights.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = weights[i] / total;
    return p;
}

Eigen::MatrixXd QuadraticObjective::hessian() const {
    const auto p = normalized_weights();
    const auto d = static_cast<Eigen::Index>(dim());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < p.size(); ++i) h += p[i] * curvatures[i];
    return h;
}

Eigen::VectorXd QuadraticObjective::minimizer() const {
    const auto p = normalized_weights();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
    for (std::size_t i = 0; i < p.size(); ++i) rhs += p[i] * (curvatures[i] * centers[i]);
    return hessian().llt().solve(rhs);
}

double QuadraticObjective::value(const Eigen::VectorXd& w) const {
    const auto p = normalized_weights();
    double f = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Eigen::VectorXd r = w - centers[i];
        f += p[i] * 0.5 * r.dot(curvatures[i] * r);
    }
    return f;
}

Eigen::VectorXd QuadraticObjective::client_gradient(std::size_t client,
                                                    const Eigen::VectorXd& w) const {
    return curvatures.at(client) * (w - centers.at(client));
}

Eigen::VectorXd QuadraticObjective::gradient(const Eigen::VectorXd& w) const {
    const auto p = normalized_weights();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
    for (std::size_t i = 0; i < p.size(); ++i) g += p[i] * client_gradient(i, w);
    return g;
}

double QuadraticObjective::excess(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd r = w - minimizer();
    return 0.5 * r.dot(hessian() * r);
}

void QuadraticSpec::validate() const {
    if (num_clients == 0) throw std::invalid_argument("quadratic spec: num_clients must be positive");
    if (dim == 0) throw std::invalid_argument("quadratic spec: dim must be positive");
    if (!(curvature_min > 0.0) || !(curvature_max >= curvature_min) || !std::isfinite(curvature_max)) {
        throw std::invalid_argument("quadratic spec: need 0 < curvature_min <= curvature_max");
    }
    if (!(center_spread >= 0.0) || !std::isfinite(center_spread)) {
        throw std::invalid_argument("quadratic spec: center_spread must be finite and non-negative");
    }
}

QuadraticObjective make_quadratic_objective(const QuadraticSpec& spec) {
    spec.validate();
    QuadraticObjective obj;
    const auto d = static_cast<Eigen::Index>(spec.dim);
    for (std::size_t i = 0; i < spec.num_clients; ++i) {
        Rng rng(spec.seed, {StreamDomain::objective, i, 0});
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index j = 0; j < d; ++j) {
            a(j, j) = spec.curvature_min + (spec.curvature_max - spec.curvature_min) * rng.uniform();
        }
        Eigen::VectorXd c(d);
        for (Eigen::Index j = 0; j < d; ++j) c(j) = spec.center_spread * rng.normal();
        obj.curvatures.push_back(std::move(a));
        obj.centers.push_back(std::move(c));
        obj.weights.push_back(1.0);
    }
    if (spec.shared_center) {
        for (auto& c : obj.centers) c = obj.centers.front();
    }
    return obj;
}

void ConvergenceConfig::validate() const {
    if (rounds < 2) throw std::invalid_argument("convergence: rounds must be at least 2");
    if (local_steps == 0) throw std::invalid_argument("convergence: local_steps must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("convergence: learning_rate must be positive");
    }
    if (!(initial_distance >= 0.0) || !std::isfinite(initial_distance)) {
        throw std::invalid_argument("convergence: initial_distance must be finite and non-negative");
    }
    if (plateau_window == 0 || plateau_window > rounds) {
        throw std::invalid_argument("convergence: plateau_window must be in [1, rounds]");
    }
    if (!(segment_factor > 1.0)) throw std::invalid_argument("convergence: segment_factor must exceed 1");
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_line: x and y differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("fit_line: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
    LinearFit fit;
    fit.count = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        sse += r * r;
    }
    fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - sse / syy;
    return fit;
}

std::optional<std::size_t> ConvergenceReport::first_round_below(double tol) const {
    for (std::size_t t = 0; t < excess.size(); ++t) {
        if (excess[t] < tol) return t;
    }
    return std::nullopt;
}

ConvergenceReport validate_convergence(const QuadraticObjective& objective,
                                       const ConvergenceConfig& config) {
    objective.validate();
    config.validate();

    const auto p = objective.normalized_weights();
    const Eigen::VectorXd w_star = objective.minimizer();
    const Eigen::MatrixXd h = objective.hessian();
    auto excess_at = [&](const Eigen::VectorXd& w) {
        const Eigen::VectorXd r = w - w_star;
        return 0.5 * r.dot(h * r);
    };

    ConvergenceReport report;
    const auto d = static_cast<Eigen::Index>(objective.dim());
    Eigen::VectorXd w =
        w_star + Eigen::VectorXd::Constant(d, config.initial_distance / std::sqrt(static_cast<double>(d)));
    auto record = [&] {
        report.excess.push_back(excess_at(w));
        report.grad_norm_sq.push_back(objective.gradient(w).squaredNorm());
    };
    record();
    for (std::size_t t = 1; t <= config.rounds; ++t) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(w.size());
        for (std::size_t i = 0; i < objective.num_clients(); ++i) {
            Eigen::VectorXd local = w;
            for (std::size_t s = 0; s < config.local_steps; ++s) {
                local -= config.learning_rate * objective.client_gradient(i, local);
            }
            next += p[i] * local;
        }
        w = std::move(next);
        if (!w.allFinite()) {
            throw std::runtime_error("convergence: iterate diverged at round " + std::to_string(t) +
                                     " (learning rate too large?)");
        }
        record();
    }

    double running = std::numeric_limits<double>::infinity();
    for (double g : report.grad_norm_sq) {
        running = std::min(running, g);
        report.min_grad_norm_sq.push_back(running);
    }
    for (std::size_t t = 1; t < report.min_grad_norm_sq.size(); ++t) {
        if (report.min_grad_norm_sq[t] > report.min_grad_norm_sq[t - 1]) {
            report.min_grad_nonincreasing = false;
        }
    }

    const std::size_t total = report.excess.size();
    double tail = 0.0;
    for (std::size_t t = total - config.plateau_window; t < total; ++t) tail += report.excess[t];
    report.plateau = tail / static_cast<double>(config.plateau_window);

    // Pre-plateau segment: from round 0 until the excess first comes within
    // segment_factor of the plateau, skipping exact zeros that log cannot take.
    const double cutoff = config.segment_factor * report.plateau;
    std::vector<double> xs, ys;
    for (std::size_t t = 0; t < total; ++t) {
        const double e = report.excess[t];
        if (e <= cutoff || !(e > 0.0)) break;
        xs.push_back(static_cast<double>(t));
        ys.push_back(std::log(e));
    }
    if (xs.size() >= 2) {
        report.decay_fit = fit_line(xs, ys);
        report.decay_rate = std::exp(report.decay_fit.slope);
    } else {
        report.decay_fit.count = xs.size();
        report.decay_fit.r_squared = std::numeric_limits<double>::quiet_NaN();
        report.decay_rate = std::numeric_limits<double>::quiet_NaN();
    }

    report.stationarity_c2 = report.min_grad_norm_sq.back();
    for (std::size_t t = 1; t < total; ++t) {
        const double gap = report.min_grad_norm_sq[t] - report.stationarity_c2;
        report.stationarity_c1 = std::max(report.stationarity_c1, static_cast<double>(t) * gap);
    }
    return report;
}

}  // namespace fedfits
