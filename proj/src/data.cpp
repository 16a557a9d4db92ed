#include "fedfits/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fedfits/csv.hpp"

namespace fedfits {

namespace {

std::vector<std::vector<std::size_t>> rows_by_class(const Dataset& ds,
                                                    std::span<const std::size_t> rows) {
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
    for (std::size_t r : rows) by_class[static_cast<std::size_t>(ds.labels[r])].push_back(r);
    return by_class;
}

std::vector<std::size_t> all_rows(const Dataset& ds) {
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw std::runtime_error(path + ": truncated IDX header");
    }
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

bool parse_double(const std::string& text, double& out) {
    // from_chars rejects leading whitespace and '+'; trim the former.
    auto first = text.find_first_not_of(" \t");
    auto last = text.find_last_not_of(" \t");
    if (first == std::string::npos) return false;
    const char* b = text.data() + first;
    const char* e = text.data() + last + 1;
    if (*b == '+') ++b;
    auto res = std::from_chars(b, e, out);
    return res.ec == std::errc{} && res.ptr == e && std::isfinite(out);
}

}  // namespace

void PartitionSpec::validate() const {
    if (num_clients < 1) throw std::invalid_argument("num_clients must be >= 1");
    if (min_samples_per_client < 2) throw std::invalid_argument("min_samples_per_client must be >= 2");
    if (scheme == PartitionScheme::dirichlet && !(concentration > 0.0)) {
        throw std::invalid_argument("concentration must be positive for the dirichlet scheme");
    }
    if (scheme == PartitionScheme::by_shards && shards_per_client < 1) {
        throw std::invalid_argument("shards_per_client must be >= 1");
    }
}

Dataset synth_blobs(std::size_t num_classes, std::size_t dim, std::size_t samples_per_class,
                    double separation, Rng& rng) {
    if (num_classes < 1 || dim < 1 || samples_per_class < 1) {
        throw std::invalid_argument("synth_blobs: sizes must be positive");
    }
    if (!(separation >= 0.0)) throw std::invalid_argument("synth_blobs: separation must be >= 0");

    std::vector<double> centres(num_classes * dim, 0.0);
    const double scale = separation / std::sqrt(2.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (num_classes <= dim) {
            centres[c * dim + c] = scale;
        } else {
            // Random directions when there are more classes than axes.
            double norm = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                centres[c * dim + j] = rng.normal();
                norm += centres[c * dim + j] * centres[c * dim + j];
            }
            norm = std::sqrt(norm);
            for (std::size_t j = 0; j < dim; ++j) centres[c * dim + j] *= scale / norm;
        }
    }

    Dataset ds{dim, num_classes, {}, {}};
    ds.features.reserve(num_classes * samples_per_class * dim);
    std::vector<double> x(dim);
    // Interleave classes so prefixes of the dataset stay balanced.
    for (std::size_t i = 0; i < samples_per_class; ++i) {
        for (std::size_t c = 0; c < num_classes; ++c) {
            for (std::size_t j = 0; j < dim; ++j) x[j] = centres[c * dim + j] + rng.normal();
            ds.push_back(x, static_cast<int>(c));
        }
    }
    return ds;
}

Partition partition_dirichlet(const Dataset& ds, std::size_t num_clients, double concentration,
                              std::size_t min_samples, Rng& rng) {
    if (num_clients < 1) throw std::invalid_argument("num_clients must be >= 1");
    if (!(concentration > 0.0)) throw std::invalid_argument("concentration must be positive");
    if (ds.size() < min_samples * num_clients) {
        throw std::invalid_argument("dataset of " + std::to_string(ds.size()) +
                                    " rows cannot give " + std::to_string(num_clients) +
                                    " clients " + std::to_string(min_samples) + " rows each");
    }
    const auto rows = all_rows(ds);
    auto by_class = rows_by_class(ds, rows);

    for (int attempt = 0; attempt < dirichlet_max_retries; ++attempt) {
        Partition parts(num_clients);
        for (auto& cls : by_class) {
            rng.shuffle(std::span<std::size_t>(cls));
            std::vector<double> p(num_clients);
            double total = 0.0;
            for (auto& v : p) {
                v = rng.gamma(concentration);
                total += v;
            }
            double cumulative = 0.0;
            std::size_t start = 0;
            for (std::size_t k = 0; k < num_clients; ++k) {
                cumulative += p[k] / total;
                std::size_t end = k + 1 == num_clients
                                      ? cls.size()
                                      : std::min(cls.size(), static_cast<std::size_t>(std::floor(
                                                                 cumulative * static_cast<double>(cls.size()) + 0.5)));
                end = std::max(end, start);
                parts[k].insert(parts[k].end(), cls.begin() + static_cast<std::ptrdiff_t>(start),
                                cls.begin() + static_cast<std::ptrdiff_t>(end));
                start = end;
            }
        }
        bool ok = std::all_of(parts.begin(), parts.end(),
                              [&](const auto& p) { return p.size() >= min_samples; });
        if (ok) {
            for (auto& p : parts) std::sort(p.begin(), p.end());
            return parts;
        }
    }
    throw std::runtime_error("dirichlet partition: no draw gave every client " +
                             std::to_string(min_samples) + " rows after " +
                             std::to_string(dirichlet_max_retries) + " attempts");
}

Partition partition_uniform(const Dataset& ds, std::size_t num_clients, Rng& rng) {
    if (num_clients < 1) throw std::invalid_argument("num_clients must be >= 1");
    auto rows = all_rows(ds);
    rng.shuffle(std::span<std::size_t>(rows));
    Partition parts(num_clients);
    for (std::size_t i = 0; i < rows.size(); ++i) parts[i % num_clients].push_back(rows[i]);
    for (auto& p : parts) std::sort(p.begin(), p.end());
    return parts;
}

Partition partition_shards(const Dataset& ds, std::size_t num_clients,
                           std::size_t shards_per_client, Rng& rng) {
    if (num_clients < 1 || shards_per_client < 1) {
        throw std::invalid_argument("num_clients and shards_per_client must be >= 1");
    }
    const std::size_t num_shards = num_clients * shards_per_client;
    if (ds.size() < num_shards) throw std::invalid_argument("fewer rows than shards");
    auto rows = all_rows(ds);
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) { return ds.labels[a] < ds.labels[b]; });
    std::vector<std::size_t> shard_order(num_shards);
    std::iota(shard_order.begin(), shard_order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(shard_order));
    Partition parts(num_clients);
    for (std::size_t s = 0; s < num_shards; ++s) {
        const std::size_t shard = shard_order[s];
        const std::size_t begin = shard * rows.size() / num_shards;
        const std::size_t end = (shard + 1) * rows.size() / num_shards;
        auto& dest = parts[s / shards_per_client];
        dest.insert(dest.end(), rows.begin() + static_cast<std::ptrdiff_t>(begin),
                    rows.begin() + static_cast<std::ptrdiff_t>(end));
    }
    for (auto& p : parts) std::sort(p.begin(), p.end());
    return parts;
}

Partition make_partition(const Dataset& ds, const PartitionSpec& spec, Rng& rng) {
    spec.validate();
    Partition parts;
    switch (spec.scheme) {
        case PartitionScheme::dirichlet:
            return partition_dirichlet(ds, spec.num_clients, spec.concentration,
                                       spec.min_samples_per_client, rng);
        case PartitionScheme::uniform_iid:
            parts = partition_uniform(ds, spec.num_clients, rng);
            break;
        case PartitionScheme::by_shards:
            parts = partition_shards(ds, spec.num_clients, spec.shards_per_client, rng);
            break;
    }
    for (std::size_t k = 0; k < parts.size(); ++k) {
        if (parts[k].size() < spec.min_samples_per_client) {
            throw std::runtime_error("client " + std::to_string(k) + " received " +
                                     std::to_string(parts[k].size()) + " rows, below the minimum of " +
                                     std::to_string(spec.min_samples_per_client));
        }
    }
    return parts;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const Dataset& ds, std::span<const std::size_t> rows, double fraction, Rng& rng) {
    if (!(fraction >= 0.0 && fraction < 1.0)) {
        throw std::invalid_argument("split fraction must lie in [0, 1)");
    }
    auto by_class = rows_by_class(ds, rows);
    std::vector<std::size_t> ordered;
    ordered.reserve(rows.size());
    for (auto& cls : by_class) {
        rng.shuffle(std::span<std::size_t>(cls));
        ordered.insert(ordered.end(), cls.begin(), cls.end());
    }
    const std::size_t n = ordered.size();
    std::vector<bool> held(n, false);
    std::size_t held_count = 0;
    // Spread held-out positions evenly over the class-ordered list.
    for (std::size_t i = 0; i < n; ++i) {
        const auto before = static_cast<std::size_t>(std::floor(static_cast<double>(i) * fraction));
        const auto after = static_cast<std::size_t>(std::floor(static_cast<double>(i + 1) * fraction));
        if (after > before) {
            held[i] = true;
            ++held_count;
        }
    }
    if (held_count == 0 && fraction > 0.0 && n >= 2) held[n - 1] = true;

    std::vector<std::size_t> kept, out;
    for (std::size_t i = 0; i < n; ++i) (held[i] ? out : kept).push_back(ordered[i]);
    std::sort(kept.begin(), kept.end());
    std::sort(out.begin(), out.end());
    return {kept, out};
}

Dataset load_csv(const std::string& path, std::vector<std::string>* label_names) {
    const auto rows = csv::parse(csv::read_file(path));
    if (rows.size() < 2) throw std::runtime_error(path + ": need a header and at least one data row");
    const std::size_t width = rows[0].size();
    if (width < 2) throw std::runtime_error(path + ": need at least one feature and a label column");

    Dataset ds{width - 1, 0, {}, {}};
    std::vector<std::string> raw_labels;
    std::vector<double> x(width - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto line = std::to_string(r + 1);
        if (rows[r].size() != width) {
            throw std::runtime_error(path + ":" + line + ": expected " + std::to_string(width) +
                                     " fields, got " + std::to_string(rows[r].size()));
        }
        for (std::size_t j = 0; j + 1 < width; ++j) {
            if (!parse_double(rows[r][j], x[j])) {
                throw std::runtime_error(path + ":" + line + ": non-numeric feature '" +
                                         rows[r][j] + "' in column " + std::to_string(j + 1));
            }
        }
        ds.features.insert(ds.features.end(), x.begin(), x.end());
        raw_labels.push_back(rows[r][width - 1]);
    }

    bool integer_labels = true;
    std::vector<int> parsed(raw_labels.size());
    for (std::size_t i = 0; i < raw_labels.size() && integer_labels; ++i) {
        const auto& s = raw_labels[i];
        auto res = std::from_chars(s.data(), s.data() + s.size(), parsed[i]);
        integer_labels = res.ec == std::errc{} && res.ptr == s.data() + s.size() && parsed[i] >= 0;
    }
    std::vector<std::string> names;
    if (integer_labels) {
        int max_label = *std::max_element(parsed.begin(), parsed.end());
        ds.labels = parsed;
        ds.num_classes = static_cast<std::size_t>(max_label) + 1;
        for (int c = 0; c <= max_label; ++c) names.push_back(std::to_string(c));
    } else {
        std::map<std::string, int> ids;
        for (const auto& s : raw_labels) {
            auto [it, inserted] = ids.emplace(s, static_cast<int>(names.size()));
            if (inserted) names.push_back(s);
            ds.labels.push_back(it->second);
        }
        ds.num_classes = names.size();
    }
    ds.num_classes = std::max<std::size_t>(ds.num_classes, 2);
    if (label_names) *label_names = names;
    return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
    std::string out;
    csv::Row header;
    for (std::size_t j = 0; j < ds.dim; ++j) header.push_back("f" + std::to_string(j));
    header.push_back("label");
    out += csv::format_row(header);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        csv::Row row;
        for (double v : ds.row(i)) row.push_back(csv::format_number(v));
        row.push_back(std::to_string(ds.labels[i]));
        out += csv::format_row(row);
    }
    csv::write_file(path, out);
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw std::runtime_error("cannot open " + images_path);
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw std::runtime_error("cannot open " + labels_path);

    if (auto magic = read_be32(images, images_path); magic != 0x00000803) {
        throw std::runtime_error(images_path + ": bad IDX image magic " + std::to_string(magic));
    }
    const std::uint32_t n_images = read_be32(images, images_path);
    const std::uint32_t height = read_be32(images, images_path);
    const std::uint32_t width = read_be32(images, images_path);
    if (auto magic = read_be32(labels, labels_path); magic != 0x00000801) {
        throw std::runtime_error(labels_path + ": bad IDX label magic " + std::to_string(magic));
    }
    const std::uint32_t n_labels = read_be32(labels, labels_path);
    if (n_images != n_labels) {
        throw std::runtime_error("IDX count mismatch: " + std::to_string(n_images) + " images, " +
                                 std::to_string(n_labels) + " labels");
    }
    const std::size_t pixels = std::size_t{height} * width;
    if (pixels == 0) throw std::runtime_error(images_path + ": zero-sized images");

    Dataset ds{pixels, 0, {}, {}};
    ds.features.resize(std::size_t{n_images} * pixels);
    std::vector<unsigned char> buf(pixels);
    int max_label = 0;
    for (std::size_t i = 0; i < n_images; ++i) {
        if (!images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels))) {
            throw std::runtime_error(images_path + ": truncated at image " + std::to_string(i));
        }
        for (std::size_t p = 0; p < pixels; ++p) ds.features[i * pixels + p] = buf[p] / 255.0;
        char label;
        if (!labels.get(label)) {
            throw std::runtime_error(labels_path + ": truncated at label " + std::to_string(i));
        }
        const int y = static_cast<unsigned char>(label);
        max_label = std::max(max_label, y);
        ds.labels.push_back(y);
    }
    ds.num_classes = std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
    return ds;
}

}  // namespace fedfits
