#include "fedfits/config.hpp"

#include <array>
#include <concepts>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include <openssl/evp.h>

namespace fedfits {

using nlohmann::json;

ConfigError::ConfigError(std::string path, const std::string& message)
    : std::invalid_argument(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

namespace {

template <typename E>
using Names = std::vector<std::pair<const char*, E>>;

const Names<DatasetKind> dataset_kinds = {
    {"blobs", DatasetKind::blobs}, {"csv", DatasetKind::csv}, {"idx", DatasetKind::idx}};
const Names<PartitionScheme> partition_schemes = {{"dirichlet", PartitionScheme::dirichlet},
                                                  {"uniform_iid", PartitionScheme::uniform_iid},
                                                  {"by_shards", PartitionScheme::by_shards}};
const Names<ModelKind> model_kinds = {{"logreg", ModelKind::logreg}, {"mlp1", ModelKind::mlp1}};
const Names<StrategyKind> strategy_kinds = {{"fedfits", StrategyKind::fedfits},
                                            {"fedavg_full", StrategyKind::fedavg_full},
                                            {"fedrand", StrategyKind::fedrand},
                                            {"fedpow", StrategyKind::fedpow}};
const Names<TeamThetaMode> theta_modes = {{"sum", TeamThetaMode::sum}, {"mean", TeamThetaMode::mean}};
const Names<AggregatorKind> aggregator_kinds = {{"weighted_mean", AggregatorKind::weighted_mean},
                                                {"coord_median", AggregatorKind::coord_median},
                                                {"trimmed_mean", AggregatorKind::trimmed_mean},
                                                {"krum", AggregatorKind::krum}};
const Names<AttackKind> attack_kinds = {{"none", AttackKind::none},
                                        {"label_flip", AttackKind::label_flip},
                                        {"noise_inject", AttackKind::noise_inject},
                                        {"sign_flip", AttackKind::sign_flip}};

template <typename E>
const char* name_of(const Names<E>& names, E value) {
    for (const auto& [n, v] : names) {
        if (v == value) return n;
    }
    throw std::logic_error("enum value without a name");
}

std::string join_path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

const char* type_name(const json& v) {
    if (v.is_number_unsigned()) return "non-negative integer";
    if (v.is_number_integer()) return "integer";
    return v.type_name();
}

/// Reads the keys of one JSON object, remembering which ones were consumed.
class Section {
public:
    Section(const json& doc, std::string path) : path_(std::move(path)) {
        if (!doc.is_object()) throw ConfigError(path_, std::string("expected an object, got ") + type_name(doc));
        doc_ = &doc;
    }

    const std::string& path() const { return path_; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = doc_->find(key);
        return it == doc_->end() ? nullptr : &*it;
    }

    std::string at(const std::string& key) const { return join_path(path_, key); }

    template <std::unsigned_integral T>
    void read(const std::string& key, T& out) {
        if (const json* v = find(key)) out = static_cast<T>(as_size(*v, at(key)));
    }
    void read(const std::string& key, double& out) {
        if (const json* v = find(key)) out = as_double(*v, at(key));
    }
    void read(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(at(key), std::string("expected a boolean, got ") + type_name(*v));
            out = v->get<bool>();
        }
    }
    void read(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(at(key), std::string("expected a string, got ") + type_name(*v));
            out = v->get<std::string>();
        }
    }
    template <typename E>
    void read(const std::string& key, E& out, const Names<E>& names) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_string()) throw ConfigError(at(key), std::string("expected a string, got ") + type_name(*v));
        const auto text = v->get<std::string>();
        for (const auto& [n, e] : names) {
            if (text == n) {
                out = e;
                return;
            }
        }
        std::string options;
        for (const auto& [n, e] : names) options += options.empty() ? n : std::string(", ") + n;
        throw ConfigError(at(key), "unknown value '" + text + "' (expected one of " + options + ")");
    }

    /// Rejects any key that no read() asked for.
    void finish() const {
        for (auto it = doc_->begin(); it != doc_->end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
        }
    }

    static std::size_t as_size(const json& v, const std::string& path) {
        if (v.is_number_unsigned()) return v.get<std::size_t>();
        if (v.is_number_integer()) throw ConfigError(path, "must be non-negative");
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (d >= 0.0 && d == std::floor(d) && d < 9.0e15) return static_cast<std::size_t>(d);
        }
        throw ConfigError(path, std::string("expected a non-negative integer, got ") + type_name(v));
    }

    static double as_double(const json& v, const std::string& path) {
        if (!v.is_number()) throw ConfigError(path, std::string("expected a number, got ") + type_name(v));
        return v.get<double>();
    }

private:
    const json* doc_ = nullptr;
    std::string path_;
    std::set<std::string> seen_;
};

json sub_object(Section& parent, const std::string& key) {
    const json* v = parent.find(key);
    return v ? *v : json::object();
}

/// Runs a validate() call and rewrites its error to point at `section`, or at
/// the field the message starts with when that is a key of the section.
void checked(const std::string& section, const std::set<std::string>& keys,
             const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        const auto end = msg.find_first_of(" :");
        const std::string lead = msg.substr(0, end);
        throw ConfigError(keys.count(lead) ? join_path(section, lead) : section, msg);
    }
}

DatasetSpec read_dataset(Section& s) {
    DatasetSpec d;
    s.read("kind", d.kind, dataset_kinds);
    s.read("num_classes", d.num_classes);
    s.read("dim", d.dim);
    s.read("samples_per_class", d.samples_per_class);
    s.read("separation", d.separation);
    s.read("path", d.path);
    s.read("images_path", d.images_path);
    s.read("labels_path", d.labels_path);
    s.finish();
    if (d.kind == DatasetKind::csv && d.path.empty()) throw ConfigError(s.at("path"), "required for csv datasets");
    if (d.kind == DatasetKind::idx) {
        if (d.images_path.empty()) throw ConfigError(s.at("images_path"), "required for idx datasets");
        if (d.labels_path.empty()) throw ConfigError(s.at("labels_path"), "required for idx datasets");
    }
    if (!std::isfinite(d.separation) || d.separation < 0.0) {
        throw ConfigError(s.at("separation"), "must be finite and non-negative");
    }
    return d;
}

}  // namespace

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("", "override '" + assignment + "' is not key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::string walked;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError(key, "empty path segment in override");
        walked = join_path(walked, part);
        if (!node->is_object()) throw ConfigError(walked, "override goes through a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

ExperimentConfig parse_config(json doc, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) apply_override(doc, o);

    ExperimentConfig c;
    Section top(doc, "");
    top.read("name", c.name);
    top.read("seed", c.seed);
    top.read("rounds", c.rounds);
    top.read("server_eval_fraction", c.server_eval_fraction);
    top.read("algorithm", c.strategy.kind, strategy_kinds);
    top.read("theta_mode", c.theta_mode, theta_modes);
    if (const json* v = top.find("target_accuracy"); v && !v->is_null()) {
        c.target_accuracy = Section::as_double(*v, "target_accuracy");
    }

    {
        const json sub = sub_object(top, "dataset");
        Section s(sub, "dataset");
        c.dataset = read_dataset(s);
    }
    {
        const json sub = sub_object(top, "partition");
        Section s(sub, "partition");
        s.read("num_clients", c.partition.num_clients);
        s.read("scheme", c.partition.scheme, partition_schemes);
        s.read("concentration", c.partition.concentration);
        s.read("shards_per_client", c.partition.shards_per_client);
        s.read("min_samples_per_client", c.partition.min_samples_per_client);
        s.finish();
    }
    {
        const json sub = sub_object(top, "model");
        Section s(sub, "model");
        s.read("kind", c.model.kind, model_kinds);
        s.read("hidden_dim", c.model.hidden_dim);
        s.finish();
    }
    {
        const json sub = sub_object(top, "train");
        Section s(sub, "train");
        s.read("local_epochs", c.train.local_epochs);
        s.read("learning_rate", c.train.learning_rate);
        if (const json* v = s.find("batch_size")) {
            if (v->is_string() && v->get<std::string>() == "full") {
                c.train.batch_size = full_batch;
            } else if (v->is_string()) {
                throw ConfigError(s.at("batch_size"), "expected a positive integer or \"full\"");
            } else {
                c.train.batch_size = Section::as_size(*v, s.at("batch_size"));
            }
        }
        s.finish();
    }
    {
        const json sub = sub_object(top, "strategy");
        Section s(sub, "strategy");
        s.read("fraction", c.strategy.fraction);
        s.read("candidates", c.strategy.candidates);
        s.read("team_size", c.strategy.team_size);
        s.finish();
    }
    {
        const json sub = sub_object(top, "fitness");
        Section s(sub, "fitness");
        if (const json* v = s.find("alpha")) {
            if (v->is_string() && v->get<std::string>() == "dynamic") {
                c.fitness.alpha.reset();
            } else if (v->is_number()) {
                c.fitness.alpha = v->get<double>();
            } else {
                throw ConfigError(s.at("alpha"), std::string("expected a number or \"dynamic\", got ") + type_name(*v));
            }
        }
        s.read("beta", c.fitness.beta);
        s.read("theta_normalized", c.fitness.theta_normalized);
        s.read("verbatim_theta_formula", c.fitness.verbatim_theta_formula);
        s.finish();
    }
    {
        const json sub = sub_object(top, "slots");
        Section s(sub, "slots");
        s.read("msl", c.slots.msl);
        s.read("pft", c.slots.pft);
        s.finish();
    }
    {
        const json sub = sub_object(top, "aggregator");
        Section s(sub, "aggregator");
        s.read("kind", c.aggregator.kind, aggregator_kinds);
        s.read("trim_fraction", c.aggregator.trim_fraction);
        s.read("byzantine_f", c.aggregator.byzantine_f);
        s.read("verbatim_weights", c.aggregator.verbatim_weights);
        s.finish();
    }
    {
        const json sub = sub_object(top, "attack");
        Section s(sub, "attack");
        s.read("kind", c.attack.kind, attack_kinds);
        s.read("flip_fraction", c.attack.flip_fraction);
        s.read("sigma", c.attack.sigma);
        s.read("scale", c.attack.scale);
        s.read("malicious_fraction", c.attack.malicious_fraction);
        s.read("start_round", c.attack.start_round);
        if (const json* v = s.find("malicious_ids")) {
            if (!v->is_array()) throw ConfigError(s.at("malicious_ids"), std::string("expected an array, got ") + type_name(*v));
            c.attack.malicious_ids.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                c.attack.malicious_ids.push_back(
                    Section::as_size((*v)[i], s.at("malicious_ids") + "[" + std::to_string(i) + "]"));
            }
        }
        if (const json* v = s.find("last_m"); v && !v->is_null()) {
            c.attack.last_m = Section::as_size(*v, s.at("last_m"));
        }
        s.finish();
    }
    top.finish();

    checked("", {"rounds", "target_accuracy", "server_eval_fraction"}, [&] {
        if (c.rounds < 2) throw std::invalid_argument("rounds must be >= 2");
        if (c.target_accuracy && !(*c.target_accuracy >= 0.0 && *c.target_accuracy <= 1.0)) {
            throw std::invalid_argument("target_accuracy must lie in [0, 1]");
        }
        if (!(c.server_eval_fraction > 0.0 && c.server_eval_fraction < 1.0)) {
            throw std::invalid_argument("server_eval_fraction must lie in (0, 1)");
        }
    });
    checked("dataset", {"num_classes", "dim", "samples_per_class"}, [&] {
        if (c.dataset.kind == DatasetKind::blobs &&
            (c.dataset.num_classes < 2 || c.dataset.dim < 1 || c.dataset.samples_per_class < 1)) {
            throw std::invalid_argument("num_classes, dim and samples_per_class must be positive (num_classes >= 2) for blobs");
        }
    });
    checked("partition", {"num_clients", "concentration", "shards_per_client", "min_samples_per_client"},
            [&] { c.partition.validate(); });
    checked("model", {"hidden_dim"}, [&] {
        if (c.model.kind == ModelKind::mlp1 && c.model.hidden_dim < 1) {
            throw std::invalid_argument("hidden_dim must be >= 1");
        }
    });
    checked("train", {"local_epochs", "batch_size", "learning_rate"}, [&] { c.train.validate(); });
    checked("fitness", {"alpha", "beta"}, [&] { c.fitness.validate(); });
    checked("slots", {"msl", "pft"}, [&] { c.slots.validate(); });
    checked("aggregator", {"trim_fraction", "byzantine_f"}, [&] { c.aggregator.validate(); });
    checked("attack", {"flip_fraction", "sigma", "scale", "malicious_fraction", "start_round", "malicious_ids"},
            [&] {
                c.attack.validate();
                (void)c.attack.resolve_ids(c.partition.num_clients);
            });
    checked("strategy", {"fraction", "candidates", "team_size"},
            [&] { c.strategy.validate(c.partition.num_clients); });
    checked("", {}, [&] { c.validate(); });
    return c;
}

ExperimentConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return parse_config(std::move(doc), overrides);
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["rounds"] = c.rounds;
    j["server_eval_fraction"] = c.server_eval_fraction;
    j["algorithm"] = name_of(strategy_kinds, c.strategy.kind);
    j["theta_mode"] = name_of(theta_modes, c.theta_mode);
    j["target_accuracy"] = c.target_accuracy ? json(*c.target_accuracy) : json(nullptr);
    j["dataset"] = {{"kind", name_of(dataset_kinds, c.dataset.kind)},
                    {"num_classes", c.dataset.num_classes},
                    {"dim", c.dataset.dim},
                    {"samples_per_class", c.dataset.samples_per_class},
                    {"separation", c.dataset.separation},
                    {"path", c.dataset.path},
                    {"images_path", c.dataset.images_path},
                    {"labels_path", c.dataset.labels_path}};
    j["partition"] = {{"num_clients", c.partition.num_clients},
                      {"scheme", name_of(partition_schemes, c.partition.scheme)},
                      {"concentration", c.partition.concentration},
                      {"shards_per_client", c.partition.shards_per_client},
                      {"min_samples_per_client", c.partition.min_samples_per_client}};
    j["model"] = {{"kind", name_of(model_kinds, c.model.kind)}, {"hidden_dim", c.model.hidden_dim}};
    j["train"] = {{"local_epochs", c.train.local_epochs},
                  {"batch_size", c.train.batch_size == full_batch ? json("full") : json(c.train.batch_size)},
                  {"learning_rate", c.train.learning_rate}};
    j["strategy"] = {{"fraction", c.strategy.fraction},
                     {"candidates", c.strategy.candidates},
                     {"team_size", c.strategy.team_size}};
    j["fitness"] = {{"alpha", c.fitness.alpha ? json(*c.fitness.alpha) : json("dynamic")},
                    {"beta", c.fitness.beta},
                    {"theta_normalized", c.fitness.theta_normalized},
                    {"verbatim_theta_formula", c.fitness.verbatim_theta_formula}};
    j["slots"] = {{"msl", c.slots.msl}, {"pft", c.slots.pft}};
    j["aggregator"] = {{"kind", name_of(aggregator_kinds, c.aggregator.kind)},
                       {"trim_fraction", c.aggregator.trim_fraction},
                       {"byzantine_f", c.aggregator.byzantine_f},
                       {"verbatim_weights", c.aggregator.verbatim_weights}};
    j["attack"] = {{"kind", name_of(attack_kinds, c.attack.kind)},
                   {"flip_fraction", c.attack.flip_fraction},
                   {"sigma", c.attack.sigma},
                   {"scale", c.attack.scale},
                   {"malicious_fraction", c.attack.malicious_fraction},
                   {"malicious_ids", c.attack.malicious_ids},
                   {"last_m", c.attack.last_m ? json(*c.attack.last_m) : json(nullptr)},
                   {"start_round", c.attack.start_round}};
    return j;
}

std::string config_digest(const ExperimentConfig& config) {
    const std::string text = config_to_json(config).dump();
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

json summary_json(const RunResult& result, const ExperimentConfig& config) {
    json j;
    j["final_accuracy"] = result.final_accuracy();
    j["best_accuracy"] = result.best_accuracy();
    j["time_to_target_round"] =
        result.time_to_target_round ? json(*result.time_to_target_round) : json(nullptr);
    j["participation_ratio"] = result.participation_ratio;
    j["total_wall_ms"] = result.total_wall_ms();
    j["config_digest"] = config_digest(config);
    return j;
}

}  // namespace fedfits
