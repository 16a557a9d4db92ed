#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedfits/orchestrator.hpp"

namespace fedfits {

/// A header plus string cells. Emits CSV or a markdown pipe table.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
    std::string to_markdown() const;
    /// First record is the header. Throws if a row has the wrong width.
    static Table from_csv(std::string_view text);

    bool operator==(const Table&) const = default;
};

inline const std::vector<std::string> metrics_columns = {
    "round",     "algorithm", "team_size",      "selection_event",          "global_accuracy",
    "global_loss", "theta_sum", "alpha_used", "threshold", "participation_cumulative",
    "wall_ms",   "simulated_cost"};

/// One row per round in metrics_columns order. Reals use 17 significant
/// digits; absent values (NaN) are empty fields.
Table metrics_table(const RunResult& result);

/// Copy of `table` with every cell of the named column blanked.
Table blank_column(Table table, const std::string& column);

/// |unique ids over all recorded teams| / K, from the selection trace alone.
/// Throws std::logic_error if it disagrees with RunResult::participation_ratio.
double participation_from_trace(const RunResult& result);

/// One row per entry: configuration, algorithm, median participation and
/// elected-only participation (percent), run count. Sorted by participation,
/// highest first; ties keep input order.
Table participation_table(std::span<const ComparisonEntry> entries);

enum class RunMode { normal, attack };

const char* mode_name(RunMode mode);

struct ModeEntry {
    RunMode mode = RunMode::normal;
    ComparisonEntry entry;
};

/// Rows per (mode, K, configuration): median final accuracy and median total
/// simulated cost. All normal rows come first. Every (K, configuration) must
/// appear exactly once in each mode.
Table accuracy_table(std::span<const ModeEntry> entries);

}  // namespace fedfits
