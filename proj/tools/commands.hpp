#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedfits/orchestrator.hpp"

namespace fedfits::cli {

/// Worker threads for client updates: hardware concurrency, capped by
/// FEDFITS_THREADS when set.
std::size_t thread_budget();

/// config.echo.json, metrics.csv and summary.json for one run.
void write_config_echo(const std::filesystem::path& dir, const ExperimentConfig& config);
void write_run_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                       const RunResult& result);

/// Cells of a sweep. Each cell sets some of alpha, beta (fitness) or msl, pft (slots).
struct Grid {
    std::vector<std::string> axes;  // {"alpha", "beta"} or {"msl", "pft"}
    std::vector<std::vector<std::pair<std::string, nlohmann::json>>> cells;
};

/// Accepts inline JSON, a path to a JSON file, or "axis=v1,v2;axis=v3".
/// JSON is either {"alpha": [...], "beta": [...]} (cartesian product) or
/// {"cells": [{"alpha": 0.5, "beta": 0.1}, ...]}.
Grid parse_grid(const std::string& spec);

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::filesystem::path& out_dir, std::ostream& out);
int cmd_compare(const std::vector<std::string>& config_paths, const std::vector<std::uint64_t>& seeds,
                const std::vector<std::string>& overrides, const std::filesystem::path& out_dir,
                std::ostream& out);
int cmd_sweep(const std::string& config_path, const std::string& grid_spec,
              const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& overrides,
              const std::filesystem::path& out_dir, std::ostream& out);
int cmd_validate(const std::filesystem::path& out_dir, bool mutate_theta, std::ostream& out);
int cmd_partition_stats(const std::string& config_path, const std::vector<std::string>& overrides,
                        const std::filesystem::path& out_dir, std::ostream& out);

/// Parses argv and dispatches. Returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace fedfits::cli
