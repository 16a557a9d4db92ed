#include "fedfits/core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fedfits {

std::size_t Architecture::parameter_count() const {
    std::size_t total = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        total += widths[i] * widths[i + 1] + widths[i + 1];
    }
    return total;
}

bool FlatModel::all_finite() const {
    for (double w : weights) {
        if (!std::isfinite(w)) return false;
    }
    return true;
}

void check_layout(const FlatModel& model) {
    const std::size_t expected = model.arch.parameter_count();
    if (model.weights.size() != expected) {
        throw std::invalid_argument("model has " + std::to_string(model.weights.size()) +
                                    " weights but its architecture implies " +
                                    std::to_string(expected));
    }
}

FlatModel flatten(const Architecture& arch, std::span<const LayerParams> layers) {
    if (layers.size() != arch.num_layers()) {
        throw std::invalid_argument("expected " + std::to_string(arch.num_layers()) +
                                    " layers, got " + std::to_string(layers.size()));
    }
    FlatModel model{arch, {}};
    model.weights.reserve(arch.parameter_count());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        const std::size_t in = arch.widths[l];
        const std::size_t out = arch.widths[l + 1];
        if (layer.fan_in != in || layer.fan_out != out || layer.weights.size() != in * out ||
            layer.bias.size() != out) {
            throw std::invalid_argument(
                "layer " + std::to_string(l) + ": expected " + std::to_string(in) + "x" +
                std::to_string(out) + " weights and " + std::to_string(out) +
                " biases, got " + std::to_string(layer.fan_in) + "x" +
                std::to_string(layer.fan_out) + " (" + std::to_string(layer.weights.size()) +
                " weights, " + std::to_string(layer.bias.size()) + " biases)");
        }
        model.weights.insert(model.weights.end(), layer.weights.begin(), layer.weights.end());
        model.weights.insert(model.weights.end(), layer.bias.begin(), layer.bias.end());
    }
    return model;
}

std::vector<LayerParams> unflatten(const FlatModel& model) {
    check_layout(model);
    std::vector<LayerParams> layers;
    const auto& widths = model.arch.widths;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < model.arch.num_layers(); ++l) {
        LayerParams layer;
        layer.fan_in = widths[l];
        layer.fan_out = widths[l + 1];
        auto first = model.weights.begin() + static_cast<std::ptrdiff_t>(offset);
        auto mid = first + static_cast<std::ptrdiff_t>(layer.fan_in * layer.fan_out);
        auto last = mid + static_cast<std::ptrdiff_t>(layer.fan_out);
        layer.weights.assign(first, mid);
        layer.bias.assign(mid, last);
        offset += layer.fan_in * layer.fan_out + layer.fan_out;
        layers.push_back(std::move(layer));
    }
    return layers;
}

void Dataset::push_back(std::span<const double> x, int label) {
    if (x.size() != dim) {
        throw std::invalid_argument("row has " + std::to_string(x.size()) +
                                    " features, dataset dim is " + std::to_string(dim));
    }
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out{dim, num_classes, {}, {}};
    out.features.reserve(rows.size() * dim);
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(row(r), labels.at(r));
    return out;
}

void Dataset::validate() const {
    if (features.size() != labels.size() * dim) {
        throw std::invalid_argument("feature matrix size does not match labels x dim");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw std::invalid_argument("label " + std::to_string(labels[i]) + " at row " +
                                        std::to_string(i) + " outside [0, " +
                                        std::to_string(num_classes) + ")");
        }
    }
    for (double v : features) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
    }
}

}  // namespace fedfits
