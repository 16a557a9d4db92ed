#include "fedfits/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedfits {

namespace {

constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, Stream stream) : seed_(seed), stream_(stream) {
    std::uint64_t k = mix64(seed + golden_gamma);
    k = mix64(k ^ (static_cast<std::uint64_t>(stream.domain) * 0xD1B54A32D192ED03ULL));
    k = mix64(k ^ (stream.client + 1) * 0xAEF17502108EF2D9ULL);
    k = mix64(k ^ (stream.round + 1) * 0xDB4F0B9175AE2165ULL);
    key_ = k;
}

std::uint64_t Rng::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * golden_gamma);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    double u1 = uniform();
    double u2 = uniform();
    // 1 - u1 lies in (0, 1], keeping the log finite.
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be positive");
    if (shape < 1.0) {
        double u = uniform();
        return gamma(shape + 1.0) * std::pow(1.0 - u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::size_t Rng::below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below requires n > 0");
    const std::uint64_t bound = n;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t r = next_u64();
        if (r >= threshold) return static_cast<std::size_t>(r % bound);
    }
}

std::vector<double> Rng::draw(std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = uniform();
    return out;
}

std::vector<double> rng_draw(Rng& rng, std::size_t n) { return rng.draw(n); }

}  // namespace fedfits
