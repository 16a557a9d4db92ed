#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace fedfits {

/// Consumers of randomness. Every draw in the simulator goes through a stream
/// keyed by one of these tags, so adding a consumer never shifts another's sequence.
enum class StreamDomain : std::uint32_t {
    data = 1,
    server_split,
    partition,
    client_split,
    init,
    shuffle,
    selection,
    label_flip,
    model_poison,
    test_fixture,
    objective,
};

struct Stream {
    StreamDomain domain = StreamDomain::data;
    std::uint64_t client = 0;
    std::uint64_t round = 0;
};

/// Counter-based generator: the i-th output is a pure function of
/// (seed, stream, i), so results do not depend on which thread draws them.
class Rng {
public:
    Rng(std::uint64_t seed, Stream stream);

    std::uint64_t seed() const { return seed_; }
    const Stream& stream() const { return stream_; }

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    /// Standard normal via Box-Muller.
    double normal();
    /// Gamma(shape, 1); Marsaglia-Tsang with the shape < 1 boost.
    double gamma(double shape);
    /// Uniform integer in [0, n); n must be positive.
    std::size_t below(std::size_t n);

    std::vector<double> draw(std::size_t n);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    Stream stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::vector<double> rng_draw(Rng& rng, std::size_t n);

}  // namespace fedfits
