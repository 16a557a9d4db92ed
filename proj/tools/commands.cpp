#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "fedfits/config.hpp"
#include "fedfits/convergence.hpp"
#include "fedfits/csv.hpp"
#include "fedfits/data.hpp"
#include "fedfits/reporting.hpp"
#include "properties/properties.hpp"

namespace fedfits::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& doc) {
    csv::write_file(path.string(), doc.dump(2) + "\n");
}

json load_json(const std::string& path) {
    const std::string text = csv::read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::string optional_text(const std::optional<double>& v) {
    return v ? csv::format_number(*v) : std::string();
}

const char* override_key(const std::string& axis) {
    if (axis == "alpha") return "fitness.alpha";
    if (axis == "beta") return "fitness.beta";
    if (axis == "msl") return "slots.msl";
    if (axis == "pft") return "slots.pft";
    throw std::invalid_argument("grid axis '" + axis + "' is not one of alpha, beta, msl, pft");
}

std::vector<std::string> family_of(const std::string& axis) {
    override_key(axis);
    if (axis == "alpha" || axis == "beta") return {"alpha", "beta"};
    return {"msl", "pft"};
}

std::string axis_value(const ExperimentConfig& c, const std::string& axis) {
    if (axis == "alpha") return c.fitness.alpha ? csv::format_number(*c.fitness.alpha) : "dynamic";
    if (axis == "beta") return csv::format_number(c.fitness.beta);
    if (axis == "msl") return std::to_string(c.slots.msl);
    return std::to_string(c.slots.pft);
}

double total_cost(const RunResult& r) {
    double t = 0.0;
    for (const auto& rec : r.rounds) t += rec.simulated_cost;
    return t;
}

}  // namespace

std::size_t thread_budget() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FEDFITS_THREADS")) {
        char* end = nullptr;
        const unsigned long cap = std::strtoul(env, &end, 10);
        if (end == env || *end != '\0' || cap == 0) {
            throw std::invalid_argument(std::string("FEDFITS_THREADS must be a positive integer, got '") + env + "'");
        }
        n = std::min<std::size_t>(n, cap);
    }
    return n;
}

void write_config_echo(const fs::path& dir, const ExperimentConfig& config) {
    fs::create_directories(dir);
    write_json(dir / "config.echo.json", config_to_json(config));
}

void write_run_outputs(const fs::path& dir, const ExperimentConfig& config, const RunResult& result) {
    fs::create_directories(dir);
    csv::write_file((dir / "metrics.csv").string(), metrics_table(result).to_csv());
    write_json(dir / "summary.json", summary_json(result, config));
}

Grid parse_grid(const std::string& spec) {
    json doc;
    const auto first = spec.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && spec[first] == '{') {
        doc = json::parse(spec, nullptr, false);
        if (doc.is_discarded()) throw std::invalid_argument("grid: inline JSON does not parse");
    } else if (fs::exists(spec)) {
        doc = load_json(spec);
    } else {
        // axis=v1,v2;axis=v3
        doc = json::object();
        std::stringstream parts(spec);
        std::string part;
        while (std::getline(parts, part, ';')) {
            if (part.empty()) continue;
            const auto eq = part.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("grid: '" + part + "' is not axis=values");
            json values = json::array();
            std::stringstream vs(part.substr(eq + 1));
            std::string v;
            while (std::getline(vs, v, ',')) {
                json parsed = json::parse(v, nullptr, false);
                values.push_back(parsed.is_discarded() ? json(v) : parsed);
            }
            doc[part.substr(0, eq)] = values;
        }
    }
    if (!doc.is_object() || doc.empty()) throw std::invalid_argument("grid: expected a non-empty object");

    Grid grid;
    if (doc.contains("cells")) {
        if (doc.size() != 1) throw std::invalid_argument("grid: 'cells' cannot be mixed with axis lists");
        const json& cells = doc["cells"];
        if (!cells.is_array() || cells.empty()) throw std::invalid_argument("grid: 'cells' must be a non-empty array");
        for (const auto& cell : cells) {
            if (!cell.is_object() || cell.empty()) throw std::invalid_argument("grid: each cell must be a non-empty object");
            std::vector<std::pair<std::string, json>> assignments;
            for (auto it = cell.begin(); it != cell.end(); ++it) {
                if (grid.axes.empty()) grid.axes = family_of(it.key());
                if (family_of(it.key()) != grid.axes) {
                    throw std::invalid_argument("grid: cannot mix alpha/beta with msl/pft");
                }
                assignments.emplace_back(it.key(), it.value());
            }
            grid.cells.push_back(std::move(assignments));
        }
        return grid;
    }

    std::vector<std::pair<std::string, std::vector<json>>> axes;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (grid.axes.empty()) grid.axes = family_of(it.key());
        if (family_of(it.key()) != grid.axes) throw std::invalid_argument("grid: cannot mix alpha/beta with msl/pft");
        const json& values = it.value();
        if (!values.is_array() || values.empty()) {
            throw std::invalid_argument("grid: axis '" + it.key() + "' needs a non-empty array");
        }
        axes.emplace_back(it.key(), std::vector<json>(values.begin(), values.end()));
    }
    // Keep the family's own axis order (alpha before beta, msl before pft).
    std::sort(axes.begin(), axes.end(), [&](const auto& a, const auto& b) {
        return std::find(grid.axes.begin(), grid.axes.end(), a.first) <
               std::find(grid.axes.begin(), grid.axes.end(), b.first);
    });
    grid.cells = {{}};
    for (const auto& [axis, values] : axes) {
        std::vector<std::vector<std::pair<std::string, json>>> next;
        for (const auto& cell : grid.cells) {
            for (const auto& v : values) {
                auto c = cell;
                c.emplace_back(axis, v);
                next.push_back(std::move(c));
            }
        }
        grid.cells = std::move(next);
    }
    return grid;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides, const fs::path& out_dir,
            std::ostream& out) {
    const ExperimentConfig config = parse_config_file(config_path, overrides);
    write_config_echo(out_dir, config);
    const RunResult result = run(config, RunOptions{thread_budget()});
    write_run_outputs(out_dir, config, result);
    out << config.label() << ": final accuracy " << result.final_accuracy() << ", participation "
        << result.participation_ratio << ", " << result.rounds.size() << " rounds -> " << out_dir.string() << "\n";
    return 0;
}

int cmd_compare(const std::vector<std::string>& config_paths, const std::vector<std::uint64_t>& seeds,
                const std::vector<std::string>& overrides, const fs::path& out_dir, std::ostream& out) {
    if (config_paths.empty()) throw std::invalid_argument("compare needs at least one config");
    if (seeds.empty()) throw std::invalid_argument("compare needs at least one seed");
    std::vector<ExperimentConfig> configs;
    for (const auto& p : config_paths) configs.push_back(parse_config_file(p, overrides));
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < configs.size(); ++i) {
        write_config_echo(out_dir / (std::to_string(i) + "_" + configs[i].label()), configs[i]);
    }
    const ComparisonSummary summary = compare(configs, seeds, RunOptions{thread_budget()});

    Table t;
    t.header = {"configuration", "algorithm", "seeds", "median_final_accuracy", "median_time_to_target",
                "median_participation", "median_simulated_cost"};
    for (std::size_t i = 0; i < summary.entries.size(); ++i) {
        const auto& e = summary.entries[i];
        t.rows.push_back({e.label, e.algorithm, std::to_string(e.seeds.size()),
                          csv::format_number(e.median_final_accuracy), optional_text(e.median_time_to_target),
                          csv::format_number(e.median_participation), csv::format_number(e.median_simulated_cost)});
        const fs::path dir = out_dir / (std::to_string(i) + "_" + e.label);
        for (std::size_t s = 0; s < e.runs.size(); ++s) {
            ExperimentConfig c = configs[i];
            c.seed = e.seeds[s];
            write_run_outputs(dir / ("seed_" + std::to_string(e.seeds[s])), c, e.runs[s]);
        }
    }
    csv::write_file((out_dir / "comparison.csv").string(), t.to_csv());
    const Table part = participation_table(summary.entries);
    csv::write_file((out_dir / "participation.csv").string(), part.to_csv());
    out << t.to_markdown() << "\n" << part.to_markdown();
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_spec, const std::vector<std::uint64_t>& seeds,
              const std::vector<std::string>& overrides, const fs::path& out_dir, std::ostream& out) {
    const Grid grid = parse_grid(grid_spec);
    const json doc = load_json(config_path);

    struct Job {
        std::size_t cell;
        ExperimentConfig config;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
        std::vector<std::string> cell_overrides = overrides;
        for (const auto& [axis, value] : grid.cells[i]) {
            cell_overrides.push_back(std::string(override_key(axis)) + "=" + value.dump());
        }
        const ExperimentConfig base = parse_config(doc, cell_overrides);
        for (std::uint64_t seed : seeds.empty() ? std::vector<std::uint64_t>{base.seed} : seeds) {
            ExperimentConfig c = base;
            c.seed = seed;
            jobs.push_back({i, std::move(c)});
        }
    }
    // Every cell's config is validated and echoed before any training starts.
    auto dir_of = [&](const Job& j) {
        return out_dir / ("cell_" + std::to_string(j.cell) + "_seed_" + std::to_string(j.config.seed));
    };
    for (const auto& j : jobs) write_config_echo(dir_of(j), j.config);

    Table t;
    t.header = {grid.axes[0], grid.axes[1], "seed", "final_accuracy", "best_accuracy", "time_to_target_round",
                "participation_ratio", "total_simulated_cost", "total_wall_ms", "config_digest"};
    for (const auto& j : jobs) {
        const RunResult r = run(j.config, RunOptions{thread_budget()});
        write_run_outputs(dir_of(j), j.config, r);
        t.rows.push_back({axis_value(j.config, grid.axes[0]), axis_value(j.config, grid.axes[1]),
                          std::to_string(j.config.seed), csv::format_number(r.final_accuracy()),
                          csv::format_number(r.best_accuracy()),
                          r.time_to_target_round ? std::to_string(*r.time_to_target_round) : std::string(),
                          csv::format_number(r.participation_ratio), csv::format_number(total_cost(r)),
                          std::to_string(r.total_wall_ms()), config_digest(j.config)});
    }
    csv::write_file((out_dir / "sweep.csv").string(), t.to_csv());
    out << grid.cells.size() << " cells x " << (jobs.size() / grid.cells.size()) << " seeds -> "
        << (out_dir / "sweep.csv").string() << "\n";
    return 0;
}

int cmd_validate(const fs::path& out_dir, bool mutate_theta, std::ostream& out) {
    properties::Options options;
    options.threads = thread_budget();
    options.mutate_theta = mutate_theta;
    const auto results = properties::run_all(options);
    json report = json::object();
    report["mutate_theta"] = mutate_theta;
    report["properties"] = json::array();
    bool all = true;
    for (const auto& r : results) {
        out << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << ": " << r.detail << "\n";
        report["properties"].push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
        all = all && r.passed;
    }

    // Convergence numbers in full for plotting.
    QuadraticSpec spec;
    const ConvergenceConfig cfg;
    const auto het = validate_convergence(make_quadratic_objective(spec), cfg);
    spec.shared_center = true;
    const auto hom = validate_convergence(make_quadratic_objective(spec), cfg);
    auto conv = [](const ConvergenceReport& r) {
        return json{{"excess", r.excess},
                    {"min_grad_norm_sq", r.min_grad_norm_sq},
                    {"plateau", r.plateau},
                    {"decay_rate", r.decay_rate},
                    {"decay_fit_r_squared", r.decay_fit.r_squared},
                    {"decay_fit_rounds", r.decay_fit.count},
                    {"stationarity_c1", r.stationarity_c1},
                    {"stationarity_c2", r.stationarity_c2}};
    };
    report["convergence"] = {{"heterogeneous", conv(het)}, {"homogeneous", conv(hom)}};
    report["passed"] = all;
    fs::create_directories(out_dir);
    write_json(out_dir / "validation.json", report);
    out << (all ? "all properties pass" : "property failures") << " -> " << (out_dir / "validation.json").string()
        << "\n";
    return all ? 0 : 1;
}

int cmd_partition_stats(const std::string& config_path, const std::vector<std::string>& overrides,
                        const fs::path& out_dir, std::ostream& out) {
    const ExperimentConfig config = parse_config_file(config_path, overrides);
    write_config_echo(out_dir, config);
    const Federation fed = build_federation(config);
    const std::size_t classes = fed.server_eval.num_classes;
    Table t;
    t.header = {"client", "train", "test", "n_k", "q_k", "malicious"};
    for (std::size_t c = 0; c < classes; ++c) t.header.push_back("class_" + std::to_string(c));
    for (const auto& client : fed.clients) {
        std::vector<std::size_t> hist(classes, 0);
        for (int y : client.train.labels) ++hist.at(static_cast<std::size_t>(y));
        for (int y : client.test.labels) ++hist.at(static_cast<std::size_t>(y));
        std::vector<std::string> row = {std::to_string(client.id), std::to_string(client.train.size()),
                                        std::to_string(client.test.size()), std::to_string(client.num_samples),
                                        csv::format_number(static_cast<double>(client.num_samples) /
                                                           static_cast<double>(fed.total_samples)),
                                        client.malicious ? "1" : "0"};
        for (auto h : hist) row.push_back(std::to_string(h));
        t.rows.push_back(std::move(row));
    }
    csv::write_file((out_dir / "partition_stats.csv").string(), t.to_csv());
    out << t.to_markdown() << "server evaluation shard: " << fed.server_eval.size() << " rows\n";
    return 0;
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Federated learning simulator with fitness-based client selection"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> config_paths;
    std::vector<std::string> overrides;
    std::vector<std::uint64_t> seeds;
    std::string grid;
    std::string out_dir = "out";
    bool mutate_theta = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--set", overrides, "Override a config key, e.g. fitness.beta=0.5 (repeatable)");
        sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    };

    auto* run_cmd = app.add_subcommand("run", "Run one experiment");
    run_cmd->add_option("--config", config_path, "Config JSON")->required()->check(CLI::ExistingFile);
    add_common(run_cmd);

    auto* compare_cmd = app.add_subcommand("compare", "Run several configs over several seeds");
    compare_cmd->add_option("--configs", config_paths, "Config JSON files")->required()->check(CLI::ExistingFile);
    compare_cmd->add_option("--seeds", seeds, "Seeds, comma separated")->required()->delimiter(',');
    add_common(compare_cmd);

    auto* sweep_cmd = app.add_subcommand("sweep", "Grid over alpha x beta or msl x pft");
    sweep_cmd->add_option("--config", config_path, "Base config JSON")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--grid", grid, "Grid: inline JSON, JSON file, or axis=v1,v2;axis=v3")->required();
    sweep_cmd->add_option("--seeds", seeds, "Seeds, comma separated (default: the config seed)")->delimiter(',');
    add_common(sweep_cmd);

    auto* validate_cmd = app.add_subcommand("validate", "Run the convergence and property checks");
    validate_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    validate_cmd->add_flag("--mutate-theta", mutate_theta,
                           "Swap in the verbatim theta formula to confirm the oracle notices");

    auto* stats_cmd = app.add_subcommand("partition-stats", "Per-client shard sizes and class counts");
    stats_cmd->add_option("--config", config_path, "Config JSON")->required()->check(CLI::ExistingFile);
    add_common(stats_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, overrides, out_dir, std::cout);
        if (compare_cmd->parsed()) return cmd_compare(config_paths, seeds, overrides, out_dir, std::cout);
        if (sweep_cmd->parsed()) return cmd_sweep(config_path, grid, seeds, overrides, out_dir, std::cout);
        if (validate_cmd->parsed()) return cmd_validate(out_dir, mutate_theta, std::cout);
        if (stats_cmd->parsed()) return cmd_partition_stats(config_path, overrides, out_dir, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace fedfits::cli
