#include "fedfits/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "fedfits/parallel.hpp"

namespace fedfits {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

bool is_baseline(StrategyKind kind) { return kind != StrategyKind::fedfits; }

Dataset load_dataset(const ExperimentConfig& config) {
    const auto& spec = config.dataset;
    switch (spec.kind) {
        case DatasetKind::blobs: {
            Rng rng(config.seed, {StreamDomain::data, 0, 0});
            return synth_blobs(spec.num_classes, spec.dim, spec.samples_per_class, spec.separation,
                               rng);
        }
        case DatasetKind::csv:
            return load_csv(spec.path);
        case DatasetKind::idx:
            return load_idx(spec.images_path, spec.labels_path);
    }
    throw std::logic_error("unhandled dataset kind");
}

std::vector<ClientId> all_ids(std::size_t k) {
    std::vector<ClientId> ids(k);
    for (std::size_t i = 0; i < k; ++i) ids[i] = i;
    return ids;
}

ModelTransform make_tamper(const ExperimentConfig& config, const ClientState& client,
                           std::size_t round) {
    const auto& attack = config.attack;
    if (!client.malicious || round < attack.start_round) return {};
    if (attack.kind != AttackKind::noise_inject && attack.kind != AttackKind::sign_flip) return {};
    const double param = attack.kind == AttackKind::noise_inject ? attack.sigma : attack.scale;
    const std::uint64_t seed = config.seed;
    const ClientId id = client.id;
    const AttackKind kind = attack.kind;
    return [=](FlatModel& model) {
        Rng rng(seed, {StreamDomain::model_poison, id, round});
        model = poison_update(std::move(model), kind, param, rng);
    };
}

}  // namespace

std::string ExperimentConfig::label() const {
    return name.empty() ? std::string(strategy_name(strategy.kind)) : name;
}

void ExperimentConfig::validate() const {
    if (rounds < 2) throw std::invalid_argument("rounds must be >= 2");
    partition.validate();
    train.validate();
    fitness.validate();
    slots.validate();
    aggregator.validate();
    attack.validate();
    strategy.validate(partition.num_clients);
    (void)attack.resolve_ids(partition.num_clients);
    if (target_accuracy && !(*target_accuracy >= 0.0 && *target_accuracy <= 1.0)) {
        throw std::invalid_argument("target_accuracy must lie in [0, 1]");
    }
    if (!(server_eval_fraction > 0.0 && server_eval_fraction < 1.0)) {
        throw std::invalid_argument("server_eval_fraction must lie in (0, 1)");
    }
    if (dataset.kind == DatasetKind::blobs &&
        (dataset.num_classes < 2 || dataset.dim < 1 || dataset.samples_per_class < 1)) {
        throw std::invalid_argument("num_classes, dim and samples_per_class must be positive (num_classes >= 2) for blobs");
    }
}

double RunResult::final_accuracy() const {
    return rounds.empty() ? 0.0 : rounds.back().global_eval.accuracy;
}

double RunResult::best_accuracy() const {
    double best = 0.0;
    for (const auto& r : rounds) best = std::max(best, r.global_eval.accuracy);
    return best;
}

std::int64_t RunResult::total_wall_ms() const {
    std::int64_t total = 0;
    for (const auto& r : rounds) total += r.wall_ms;
    return total;
}

std::vector<std::size_t> RunResult::selection_counts() const {
    std::vector<std::size_t> counts(num_clients, 0);
    for (const auto& ev : selection_trace) {
        for (ClientId id : ev.selected) ++counts.at(id);
    }
    return counts;
}

Federation build_federation(const ExperimentConfig& config) {
    Dataset full = load_dataset(config);
    full.validate();

    std::vector<std::size_t> rows(full.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    Rng server_rng(config.seed, {StreamDomain::server_split, 0, 0});
    auto [pool_rows, server_rows] =
        stratified_split(full, rows, config.server_eval_fraction, server_rng);

    Federation fed;
    fed.server_eval = full.subset(server_rows);
    const Dataset pool = full.subset(pool_rows);

    Rng part_rng(config.seed, {StreamDomain::partition, 0, 0});
    const Partition parts = make_partition(pool, config.partition, part_rng);
    const auto malicious = config.attack.resolve_ids(parts.size());

    for (std::size_t k = 0; k < parts.size(); ++k) {
        Rng split_rng(config.seed, {StreamDomain::client_split, k, 0});
        auto [train_rows, test_rows] = stratified_split(pool, parts[k], 0.2, split_rng);
        ClientState client;
        client.id = k;
        client.train = pool.subset(train_rows);
        client.test = pool.subset(test_rows);
        client.num_samples = parts[k].size();
        client.malicious = std::binary_search(malicious.begin(), malicious.end(), k);
        if (client.malicious && config.attack.kind == AttackKind::label_flip) {
            Rng flip_rng(config.seed, {StreamDomain::label_flip, k, 0});
            client.train = poison_labels(std::move(client.train), config.attack.flip_fraction, flip_rng);
        }
        fed.total_samples += client.num_samples;
        fed.clients.push_back(std::move(client));
    }
    return fed;
}

ModelSpec resolve_model_spec(const ExperimentConfig& config, const Federation& federation) {
    ModelSpec spec = config.model;
    spec.input_dim = federation.server_eval.dim;
    spec.num_classes = federation.server_eval.num_classes;
    return spec;
}

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    return run(config, build_federation(config), options);
}

RunResult run(const ExperimentConfig& config, const Federation& federation,
              const RunOptions& options) {
    config.validate();
    const auto& clients = federation.clients;
    const std::size_t num_clients = clients.size();
    if (num_clients == 0) throw std::invalid_argument("federation has no clients");
    config.strategy.validate(num_clients);
    for (std::size_t k = 0; k < num_clients; ++k) {
        if (clients[k].id != k) throw std::invalid_argument("client ids must be 0..K-1 in order");
    }
    const bool baseline = is_baseline(config.strategy.kind);
    const auto ids = all_ids(num_clients);
    const double n_total = static_cast<double>(federation.total_samples);

    RunResult result;
    result.algorithm = strategy_name(config.strategy.kind);
    result.num_clients = num_clients;
    for (const auto& c : clients) {
        if (c.malicious) result.malicious.push_back(c.id);
    }

    Rng init_rng(config.seed, {StreamDomain::init, 0, 0});
    FlatModel global = init_model(resolve_model_spec(config, federation), init_rng);

    SlotState slot;
    bool reselect = true;  // h(1)
    double alpha_in_force = nan;
    std::set<ClientId> ever_selected;
    std::set<ClientId> ever_elected;
    std::vector<ClientUpdateResult> updates(num_clients);

    for (std::size_t t = 1; t <= config.rounds; ++t) {
        const auto started = std::chrono::steady_clock::now();
        RoundRecord record;
        record.round = t;
        record.threshold = nan;

        // Who trains this round.
        std::vector<ClientId> trainers;
        std::vector<ClientId> team;
        std::optional<SelectionEvent> event;

        if (baseline) {
            event.emplace();
            event->round = t;
            event->threshold = nan;
            event->alpha = nan;
            switch (config.strategy.kind) {
                case StrategyKind::fedavg_full:
                    team = ids;
                    break;
                case StrategyKind::fedrand: {
                    Rng rng(config.seed, {StreamDomain::selection, 0, t});
                    team = select_fedrand(ids, config.strategy.fraction, rng);
                    break;
                }
                case StrategyKind::fedpow: {
                    Rng rng(config.seed, {StreamDomain::selection, 0, t});
                    auto loss_of = [&](ClientId id) { return evaluate(global, clients[id].train).loss; };
                    team = select_fedpow(ids, loss_of, config.strategy.candidates,
                                         config.strategy.team_size, rng);
                    break;
                }
                default:
                    throw std::logic_error("unhandled baseline");
            }
            if (team.empty()) team = ids;
            event->selected = team;
            trainers = team;
            record.selection_event = true;
        } else {
            record.selection_event = reselect;
            trainers = reselect ? ids : slot.team;
        }

        parallel_for(trainers.size(), options.threads, [&](std::size_t i) {
            const ClientId id = trainers[i];
            const auto& client = clients[id];
            Rng rng(config.seed, {StreamDomain::shuffle, id, t});
            auto tamper = make_tamper(config, client, t);
            try {
                if (baseline) {
                    ClientUpdateResult u;
                    u.model = local_update(global, client.train, config.train, rng);
                    if (tamper) tamper(u.model);
                    updates[id] = std::move(u);
                } else {
                    updates[id] =
                        client_update(client, global, config.train, t, rng, config.fitness, tamper);
                }
            } catch (const std::exception& e) {
                throw std::runtime_error("round " + std::to_string(t) + ", client " +
                                         std::to_string(id) + ": " + e.what());
            }
        });

        if (!baseline) {
            if (reselect && t == 1) {
                team = ids;
                event.emplace();
                event->round = t;
                event->threshold = nan;
                event->alpha = nan;
                event->selected = team;
                event->elected = false;
            } else if (reselect) {
                event.emplace();
                event->round = t;
                event->scores.resize(num_clients);
                for (ClientId k = 0; k < num_clients; ++k) {
                    auto& s = event->scores[k];
                    s.client_id = k;
                    s.q = static_cast<double>(clients[k].num_samples) / n_total;
                    s.theta = updates[k].theta;
                }
                alpha_in_force = config.fitness.dynamic_alpha()
                                     ? dynamic_alpha(event->scores, config.fitness.theta_normalized)
                                     : *config.fitness.alpha;
                for (auto& s : event->scores) s.score = compute_score(s.q, s.theta, alpha_in_force);
                event->alpha = alpha_in_force;
                event->threshold = compute_threshold(event->scores, config.fitness.beta);
                event->selected = select_fedfits(event->scores, config.fitness.beta);
                team = event->selected;
                record.threshold = event->threshold;
                slot.round_of_last_selection = t;
            } else {
                team = slot.team;
            }
            slot.team = team;
        }

        std::vector<WeightedModel> contributions;
        contributions.reserve(team.size());
        for (ClientId id : team) {
            contributions.push_back(
                {&updates[id].model, static_cast<double>(clients[id].num_samples)});
        }
        global = aggregate(config.aggregator, contributions);
        if (!global.all_finite()) {
            throw std::runtime_error("round " + std::to_string(t) +
                                     ": aggregated model has non-finite weights");
        }

        double cost = 0.0;
        for (ClientId id : trainers) {
            cost = std::max(cost, static_cast<double>(clients[id].train.size() *
                                                      config.train.local_epochs));
        }

        if (!baseline) {
            double theta_t = 0.0;
            for (ClientId id : team) theta_t += updates[id].theta;
            if (config.theta_mode == TeamThetaMode::mean) theta_t /= static_cast<double>(team.size());
            record.theta_sum = theta_t;
            slot = update_decline_counter(std::move(slot), theta_t, t);
            reselect = should_reselect(slot.p, t + 1, config.slots);
        }

        if (event) {
            ever_selected.insert(event->selected.begin(), event->selected.end());
            if (event->elected) ever_elected.insert(event->selected.begin(), event->selected.end());
            result.selection_trace.push_back(std::move(*event));
        }

        record.team = team;
        record.alpha_used = baseline ? nan : alpha_in_force;
        record.simulated_cost = cost;
        record.global_eval = evaluate(global, federation.server_eval);
        record.participation_cumulative =
            static_cast<double>(ever_selected.size()) / static_cast<double>(num_clients);
        if (config.target_accuracy && !result.time_to_target_round &&
            record.global_eval.accuracy >= *config.target_accuracy) {
            result.time_to_target_round = t;
        }
        record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
        result.rounds.push_back(std::move(record));
    }

    result.participation_ratio =
        static_cast<double>(ever_selected.size()) / static_cast<double>(num_clients);
    result.elected_participation_ratio =
        static_cast<double>(ever_elected.size()) / static_cast<double>(num_clients);
    result.final_model = std::move(global);
    return result;
}

RunResult run_baseline(const ExperimentConfig& config, const RunOptions& options) {
    if (!is_baseline(config.strategy.kind)) {
        throw std::invalid_argument("run_baseline needs fedavg_full, fedrand or fedpow");
    }
    return run(config, options);
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

ComparisonSummary compare(std::span<const ExperimentConfig> configs,
                          std::span<const std::uint64_t> seeds, const RunOptions& options) {
    if (configs.empty() || seeds.empty()) throw std::invalid_argument("compare needs configs and seeds");
    for (std::size_t i = 1; i < configs.size(); ++i) {
        if (!(configs[i].dataset == configs[0].dataset) ||
            !(configs[i].partition == configs[0].partition) ||
            !(configs[i].model == configs[0].model)) {
            throw std::invalid_argument("config '" + configs[i].label() +
                                        "' differs from '" + configs[0].label() +
                                        "' in dataset, partition or model");
        }
    }
    ComparisonSummary summary;
    for (const auto& base : configs) {
        ComparisonEntry entry;
        entry.label = base.label();
        entry.algorithm = strategy_name(base.strategy.kind);
        std::vector<double> acc, ttt, part, cost;
        for (std::uint64_t seed : seeds) {
            ExperimentConfig cfg = base;
            cfg.seed = seed;
            RunResult r = run(cfg, options);
            acc.push_back(r.final_accuracy());
            part.push_back(r.participation_ratio);
            double total_cost = 0.0;
            for (const auto& rec : r.rounds) total_cost += rec.simulated_cost;
            cost.push_back(total_cost);
            if (r.time_to_target_round) ttt.push_back(static_cast<double>(*r.time_to_target_round));
            entry.seeds.push_back(seed);
            entry.runs.push_back(std::move(r));
        }
        entry.median_final_accuracy = median(acc);
        entry.median_participation = median(part);
        entry.median_simulated_cost = median(cost);
        if (!ttt.empty()) entry.median_time_to_target = median(ttt);
        summary.entries.push_back(std::move(entry));
    }
    return summary;
}

}  // namespace fedfits
