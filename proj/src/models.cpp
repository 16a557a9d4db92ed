#include "fedfits/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fedfits {

namespace {

// Offsets of each layer's weight block and bias block in the flat vector.
struct LayerView {
    std::size_t in;
    std::size_t out;
    std::size_t w_offset;
    std::size_t b_offset;
    Activation act;
};

std::vector<LayerView> layer_views(const Architecture& arch) {
    std::vector<LayerView> views;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        const std::size_t in = arch.widths[l];
        const std::size_t out = arch.widths[l + 1];
        Activation act = l < arch.activations.size() ? arch.activations[l] : Activation::none;
        views.push_back({in, out, offset, offset + in * out, act});
        offset += in * out + out;
    }
    return views;
}

// Forward pass keeping every layer's post-activation output; the last entry holds logits.
void forward(const std::vector<double>& w, const std::vector<LayerView>& views,
             std::span<const double> x, std::vector<std::vector<double>>& acts) {
    acts.resize(views.size() + 1);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < views.size(); ++l) {
        const auto& v = views[l];
        const auto& a = acts[l];
        auto& z = acts[l + 1];
        z.assign(w.begin() + static_cast<std::ptrdiff_t>(v.b_offset),
                 w.begin() + static_cast<std::ptrdiff_t>(v.b_offset + v.out));
        for (std::size_t i = 0; i < v.in; ++i) {
            const double ai = a[i];
            if (ai == 0.0) continue;
            const double* row = w.data() + v.w_offset + i * v.out;
            for (std::size_t j = 0; j < v.out; ++j) z[j] += ai * row[j];
        }
        if (v.act == Activation::relu) {
            for (auto& zj : z) zj = zj > 0.0 ? zj : 0.0;
        }
    }
}

// Softmax in place; returns log-sum-exp of the original logits.
double softmax_inplace(std::vector<double>& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (auto& v : logits) {
        v = std::exp(v - m);
        sum += v;
    }
    for (auto& v : logits) v /= sum;
    return m + std::log(sum);
}

void check_shard(const FlatModel& model, const Dataset& data) {
    check_layout(model);
    if (model.arch.widths.empty() || model.arch.widths.front() != data.dim) {
        throw std::invalid_argument("feature dim " + std::to_string(data.dim) +
                                    " does not match model input");
    }
    if (model.arch.widths.back() < data.num_classes) {
        throw std::invalid_argument("dataset has more classes than model outputs");
    }
}

}  // namespace

Architecture ModelSpec::architecture() const {
    if (kind == ModelKind::logreg) return {{input_dim, num_classes}, {Activation::none}};
    return {{input_dim, hidden_dim, num_classes}, {Activation::relu, Activation::none}};
}

void ModelSpec::validate() const {
    if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
    if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
    if (kind == ModelKind::mlp1 && hidden_dim < 1) {
        throw std::invalid_argument("hidden_dim must be >= 1");
    }
}

void TrainConfig::validate() const {
    if (local_epochs < 1) throw std::invalid_argument("local_epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be finite and non-negative");
    }
}

FlatModel init_model(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    const Architecture arch = spec.architecture();
    FlatModel model{arch, std::vector<double>(arch.parameter_count(), 0.0)};
    for (const auto& v : layer_views(arch)) {
        const double bound = std::sqrt(6.0 / static_cast<double>(v.in + v.out));
        for (std::size_t i = 0; i < v.in * v.out; ++i) {
            model.weights[v.w_offset + i] = (2.0 * rng.uniform() - 1.0) * bound;
        }
    }
    return model;
}

std::vector<double> predict_proba(const FlatModel& model, std::span<const double> x) {
    check_layout(model);
    std::vector<std::vector<double>> acts;
    forward(model.weights, layer_views(model.arch), x, acts);
    softmax_inplace(acts.back());
    return acts.back();
}

EvalResult evaluate(const FlatModel& model, const Dataset& shard) {
    if (shard.empty()) throw std::invalid_argument("degenerate evaluation: empty shard");
    check_shard(model, shard);
    const auto views = layer_views(model.arch);
    std::vector<std::vector<double>> acts;
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < shard.size(); ++i) {
        forward(model.weights, views, shard.row(i), acts);
        auto& logits = acts.back();
        const auto y = static_cast<std::size_t>(shard.labels[i]);
        const auto best = static_cast<std::size_t>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (best == y) ++correct;
        const double zy = logits[y];
        loss += softmax_inplace(logits) - zy;
    }
    const double n = static_cast<double>(shard.size());
    return {std::max(0.0, loss / n), static_cast<double>(correct) / n};
}

std::vector<double> gradient(const FlatModel& model, const Dataset& data,
                             std::span<const std::size_t> rows) {
    if (rows.empty()) throw std::invalid_argument("gradient of an empty batch");
    check_shard(model, data);
    const auto views = layer_views(model.arch);
    const auto& w = model.weights;
    std::vector<double> grad(w.size(), 0.0);
    std::vector<std::vector<double>> acts;
    std::vector<double> delta;
    std::vector<double> prev_delta;

    for (std::size_t r : rows) {
        forward(w, views, data.row(r), acts);
        delta = acts.back();
        softmax_inplace(delta);
        delta[static_cast<std::size_t>(data.labels[r])] -= 1.0;

        for (std::size_t l = views.size(); l-- > 0;) {
            const auto& v = views[l];
            const auto& a = acts[l];
            for (std::size_t i = 0; i < v.in; ++i) {
                const double ai = a[i];
                if (ai == 0.0) continue;
                double* g = grad.data() + v.w_offset + i * v.out;
                for (std::size_t j = 0; j < v.out; ++j) g[j] += ai * delta[j];
            }
            for (std::size_t j = 0; j < v.out; ++j) grad[v.b_offset + j] += delta[j];
            if (l == 0) break;

            prev_delta.assign(v.in, 0.0);
            for (std::size_t i = 0; i < v.in; ++i) {
                const double* row = w.data() + v.w_offset + i * v.out;
                double s = 0.0;
                for (std::size_t j = 0; j < v.out; ++j) s += row[j] * delta[j];
                prev_delta[i] = s;
            }
            // a = relu(z), so relu'(z) is 1 exactly where a > 0.
            if (views[l - 1].act == Activation::relu) {
                for (std::size_t i = 0; i < v.in; ++i) {
                    if (a[i] <= 0.0) prev_delta[i] = 0.0;
                }
            }
            delta.swap(prev_delta);
        }
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (auto& g : grad) g *= inv;
    return grad;
}

std::vector<double> gradient(const FlatModel& model, const Dataset& data) {
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return gradient(model, data, rows);
}

FlatModel local_update(const FlatModel& model_in, const Dataset& train, const TrainConfig& cfg,
                       Rng& rng) {
    cfg.validate();
    if (train.empty()) throw std::invalid_argument("local_update on an empty shard");
    check_shard(model_in, train);

    FlatModel model = model_in;
    const std::size_t n = train.size();
    const std::size_t batch = std::min(cfg.batch_size, n);
    std::vector<std::size_t> order(n);

    for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (batch < n) rng.shuffle(std::span<std::size_t>(order));
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += batch, ++batch_index) {
            const std::size_t len = std::min(batch, n - start);
            auto g = gradient(model, train, std::span<const std::size_t>(order).subspan(start, len));
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (!std::isfinite(g[i])) {
                    throw std::runtime_error("non-finite gradient in epoch " +
                                             std::to_string(epoch + 1) + ", batch " +
                                             std::to_string(batch_index + 1));
                }
                model.weights[i] -= cfg.learning_rate * g[i];
            }
        }
    }
    return model;
}

ClientUpdateResult client_update(const ClientState& client, const FlatModel& global,
                                 const TrainConfig& cfg, std::size_t round, Rng& rng,
                                 const FitnessParams& fitness, const ModelTransform& tamper) {
    if (round < 1) throw std::invalid_argument("rounds are numbered from 1");
    ClientUpdateResult out;
    out.model = local_update(global, client.train, cfg, rng);
    if (tamper) tamper(out.model);
    if (round == 1) return out;
    out.global_eval = evaluate(global, client.test);
    out.local_eval = evaluate(out.model, client.test);
    out.theta = compute_theta(out.global_eval, out.local_eval, fitness);
    return out;
}

}  // namespace fedfits
