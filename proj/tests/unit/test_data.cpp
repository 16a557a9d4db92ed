#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"

#include "fedfits/attacks.hpp"
#include "fedfits/csv.hpp"
#include "fedfits/data.hpp"
#include "fedfits/models.hpp"

using namespace fedfits;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("fedfits_unit_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

double centralized_accuracy(const Dataset& ds) {
    ModelSpec spec;
    spec.input_dim = ds.dim;
    spec.num_classes = ds.num_classes;
    Rng init(1, {StreamDomain::init, 0, 0});
    Rng shuffle(1, {StreamDomain::shuffle, 0, 0});
    const FlatModel m = local_update(init_model(spec, init), ds, {5, 32, 0.1}, shuffle);
    return evaluate(m, ds).accuracy;
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                           static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(bytes, 4);
}

void write_idx(const fs::path& images, const fs::path& labels, std::uint32_t n_images,
               std::uint32_t n_labels) {
    std::ofstream img(images, std::ios::binary);
    put_be32(img, 0x00000803);
    put_be32(img, n_images);
    put_be32(img, 28);
    put_be32(img, 28);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        for (int p = 0; p < 784; ++p) img.put(static_cast<char>(p == 0 ? 255 : (i == 1 ? 51 : 0)));
    }
    std::ofstream lab(labels, std::ios::binary);
    put_be32(lab, 0x00000801);
    put_be32(lab, n_labels);
    for (std::uint32_t i = 0; i < n_labels; ++i) lab.put(static_cast<char>(i % 2 == 0 ? 3 : 7));
}

}  // namespace

TEST_SUITE("data") {
    TEST_CASE("well separated blobs are learnable") {
        Rng rng(1, {StreamDomain::data, 0, 0});
        CHECK(centralized_accuracy(synth_blobs(2, 5, 200, 10.0, rng)) >= 0.99);
    }

    TEST_CASE("coincident blobs are not") {
        Rng rng(1, {StreamDomain::data, 0, 0});
        CHECK(std::abs(centralized_accuracy(synth_blobs(2, 5, 200, 0.0, rng)) - 0.5) <= 0.1);
    }

    TEST_CASE("blobs are deterministic and validated") {
        Rng a(5, {StreamDomain::data, 0, 0}), b(5, {StreamDomain::data, 0, 0});
        const Dataset x = synth_blobs(3, 4, 10, 2.0, a);
        const Dataset y = synth_blobs(3, 4, 10, 2.0, b);
        CHECK(x.features == y.features);
        CHECK(x.labels == y.labels);
        CHECK(x.size() == 30);
        CHECK_THROWS_AS(synth_blobs(0, 4, 10, 2.0, a), std::invalid_argument);
    }

    TEST_CASE("large concentration approaches the global mix") {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            Rng data(seed, {StreamDomain::data, 0, 0});
            const Dataset ds = synth_blobs(2, 2, 1000, 1.0, data);
            Rng rng(seed, {StreamDomain::partition, 0, 0});
            const Partition parts = partition_dirichlet(ds, 10, 1000.0, 10, rng);
            for (const auto& rows : parts) {
                double ones = 0;
                for (auto r : rows) ones += ds.labels[r];
                CHECK(std::abs(ones / rows.size() - 0.5) <= 0.05);
            }
        }
    }

    TEST_CASE("small concentration leaves some client without a class") {
        int seeds_with_gap = 0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            Rng data(seed, {StreamDomain::data, 0, 0});
            const Dataset ds = synth_blobs(3, 2, 500, 1.0, data);
            Rng rng(seed, {StreamDomain::partition, 0, 0});
            const Partition parts = partition_dirichlet(ds, 10, 0.1, 2, rng);
            bool gap = false;
            for (const auto& rows : parts) {
                std::set<int> seen;
                for (auto r : rows) seen.insert(ds.labels[r]);
                gap = gap || seen.size() < 3;
            }
            seeds_with_gap += gap;
        }
        CHECK(seeds_with_gap >= 8);
    }

    TEST_CASE("partitions cover every row exactly once") {
        Rng data(2, {StreamDomain::data, 0, 0});
        const Dataset ds = synth_blobs(2, 2, 100, 1.0, data);
        for (auto scheme : {PartitionScheme::dirichlet, PartitionScheme::uniform_iid,
                            PartitionScheme::by_shards}) {
            PartitionSpec spec;
            spec.scheme = scheme;
            spec.num_clients = 5;
            Rng rng(2, {StreamDomain::partition, 0, 0});
            const Partition parts = make_partition(ds, spec, rng);
            std::vector<int> hits(ds.size(), 0);
            for (const auto& rows : parts) {
                for (auto r : rows) ++hits[r];
            }
            CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
        }
    }

    TEST_CASE("infeasible minimum shard size fails after bounded retries") {
        Rng data(1, {StreamDomain::data, 0, 0});
        const Dataset ds = synth_blobs(2, 2, 20, 1.0, data);
        Rng rng(1, {StreamDomain::partition, 0, 0});
        CHECK_THROWS(partition_dirichlet(ds, 10, 0.5, 5, rng));
    }

    TEST_CASE("stratified split holds out a fifth") {
        Rng data(1, {StreamDomain::data, 0, 0});
        const Dataset ds = synth_blobs(2, 2, 10, 1.0, data);
        std::vector<std::size_t> rows(ds.size());
        std::iota(rows.begin(), rows.end(), 0);
        Rng rng(1, {StreamDomain::client_split, 0, 0});
        auto [kept, held] = stratified_split(ds, rows, 0.2, rng);
        CHECK(held.size() == 4);
        CHECK(kept.size() + held.size() == ds.size());
    }

    TEST_CASE("csv loading") {
        const fs::path dir = scratch_dir("csv");
        csv::write_file((dir / "a.csv").string(), "x1,x2,label\n1.5,2,0\n-3,4e-1,1\n5,6,0\n");
        const Dataset ds = load_csv((dir / "a.csv").string());
        CHECK(ds.dim == 2);
        CHECK(ds.num_classes == 2);
        CHECK(ds.features == std::vector<double>{1.5, 2, -3, 0.4, 5, 6});
        CHECK(ds.labels == std::vector<int>{0, 1, 0});

        csv::write_file((dir / "b.csv").string(), "x,y\n1,cat\n2,dog\n3,cat\n");
        std::vector<std::string> names;
        const Dataset named = load_csv((dir / "b.csv").string(), &names);
        CHECK(named.labels == std::vector<int>{0, 1, 0});
        CHECK(names == std::vector<std::string>{"cat", "dog"});

        csv::write_file((dir / "ragged.csv").string(), "x1,x2,label\n1,2,0\n3,1\n");
        CHECK_THROWS_WITH(load_csv((dir / "ragged.csv").string()),
                          doctest::Contains("ragged.csv:3"));
        csv::write_file((dir / "text.csv").string(), "x1,x2,label\n1,abc,0\n");
        CHECK_THROWS_WITH(load_csv((dir / "text.csv").string()), doctest::Contains("non-numeric"));
    }

    TEST_CASE("csv round trip") {
        const fs::path dir = scratch_dir("csv_rt");
        Rng data(3, {StreamDomain::data, 0, 0});
        const Dataset ds = synth_blobs(3, 4, 5, 1.0, data);
        write_csv(ds, (dir / "rt.csv").string());
        const Dataset back = load_csv((dir / "rt.csv").string());
        CHECK(back.features == ds.features);
        CHECK(back.labels == ds.labels);
    }

    TEST_CASE("idx loading") {
        const fs::path dir = scratch_dir("idx");
        write_idx(dir / "img", dir / "lab", 2, 2);
        const Dataset ds = load_idx((dir / "img").string(), (dir / "lab").string());
        CHECK(ds.size() == 2);
        CHECK(ds.dim == 784);
        CHECK(ds.features[0] == 1.0);
        CHECK(ds.features[784 + 1] == doctest::Approx(0.2));
        CHECK(ds.labels == std::vector<int>{3, 7});

        write_idx(dir / "img3", dir / "lab2", 3, 2);
        CHECK_THROWS_WITH(load_idx((dir / "img3").string(), (dir / "lab2").string()),
                          doctest::Contains("count mismatch"));
    }
}

TEST_SUITE("attacks") {
    TEST_CASE("full flip inverts every binary label") {
        Rng data(1, {StreamDomain::data, 0, 0});
        const Dataset ds = synth_blobs(2, 2, 10, 1.0, data);
        Rng rng(1, {StreamDomain::label_flip, 0, 0});
        const Dataset flipped = poison_labels(ds, 1.0, rng);
        for (std::size_t i = 0; i < ds.size(); ++i) CHECK(flipped.labels[i] == 1 - ds.labels[i]);
        CHECK(flipped.features == ds.features);
    }

    TEST_CASE("partial flip changes exactly the requested count") {
        Rng data(1, {StreamDomain::data, 0, 0});
        const Dataset ds = synth_blobs(2, 2, 50, 1.0, data);
        Rng rng(1, {StreamDomain::label_flip, 0, 0});
        const Dataset flipped = poison_labels(ds, 0.5, rng);
        int changed = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) changed += flipped.labels[i] != ds.labels[i];
        CHECK(changed == 50);
    }

    TEST_CASE("model poisoning") {
        FlatModel m{{{1, 1}, {Activation::none}}, {1, -2}};
        Rng rng(1, {StreamDomain::model_poison, 0, 0});
        CHECK(poison_update(m, AttackKind::noise_inject, 0.0, rng) == m);
        CHECK(poison_update(m, AttackKind::sign_flip, 1.0, rng).weights == std::vector<double>{-1, 2});

        FlatModel zeros{{{999, 1}, {Activation::none}}, std::vector<double>(1000, 0.0)};
        const FlatModel noisy = poison_update(zeros, AttackKind::noise_inject, 2.0, rng);
        double sq = 0;
        for (double v : noisy.weights) sq += v * v;
        CHECK(std::sqrt(sq / 1000) == doctest::Approx(2.0).epsilon(0.1));
    }

    TEST_CASE("malicious id resolution") {
        AttackSpec spec;
        CHECK(spec.resolve_ids(10).empty());
        spec.kind = AttackKind::label_flip;
        spec.last_m = 3;
        CHECK(spec.resolve_ids(10) == std::vector<ClientId>{7, 8, 9});
        spec.last_m.reset();
        spec.malicious_fraction = 0.2;
        CHECK(spec.resolve_ids(10) == std::vector<ClientId>{8, 9});
        spec.malicious_ids = {4, 1};
        CHECK(spec.resolve_ids(10) == std::vector<ClientId>{1, 4});
        spec.malicious_ids = {12};
        CHECK_THROWS_AS(spec.resolve_ids(10), std::invalid_argument);
    }
}
