#include "fedfits/reporting.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

#include "fedfits/csv.hpp"

namespace fedfits {

namespace {

std::string percent(double ratio) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * ratio);
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string markdown_cell(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out;
}

}  // namespace

std::string Table::to_csv() const {
    std::string out = csv::format_row(header);
    for (const auto& r : rows) out += csv::format_row(r);
    return out;
}

std::string Table::to_markdown() const {
    auto line = [](const std::vector<std::string>& cells) {
        std::string s = "|";
        for (const auto& c : cells) s += " " + markdown_cell(c) + " |";
        return s + "\n";
    };
    std::string out = line(header);
    out += "|";
    for (std::size_t i = 0; i < header.size(); ++i) out += " --- |";
    out += "\n";
    for (const auto& r : rows) out += line(r);
    return out;
}

Table Table::from_csv(std::string_view text) {
    auto records = csv::parse(text);
    if (records.empty()) throw std::invalid_argument("table: no header row");
    Table t;
    t.header = std::move(records.front());
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].size() != t.header.size()) {
            throw std::invalid_argument("table: row " + std::to_string(i) + " has " +
                                        std::to_string(records[i].size()) + " fields, header has " +
                                        std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(records[i]));
    }
    return t;
}

Table metrics_table(const RunResult& result) {
    Table t;
    t.header = metrics_columns;
    for (const auto& r : result.rounds) {
        t.rows.push_back({std::to_string(r.round), result.algorithm, std::to_string(r.team.size()),
                          r.selection_event ? "1" : "0", csv::format_number(r.global_eval.accuracy),
                          csv::format_number(r.global_eval.loss), csv::format_number(r.theta_sum),
                          csv::format_number(r.alpha_used), csv::format_number(r.threshold),
                          csv::format_number(r.participation_cumulative), std::to_string(r.wall_ms),
                          csv::format_number(r.simulated_cost)});
    }
    return t;
}

Table blank_column(Table table, const std::string& column) {
    const auto it = std::find(table.header.begin(), table.header.end(), column);
    if (it == table.header.end()) throw std::invalid_argument("no column named " + column);
    const auto idx = static_cast<std::size_t>(it - table.header.begin());
    for (auto& row : table.rows) row.at(idx).clear();
    return table;
}

double participation_from_trace(const RunResult& result) {
    if (result.num_clients == 0) throw std::invalid_argument("participation: run has no clients");
    std::set<ClientId> seen;
    for (const auto& ev : result.selection_trace) seen.insert(ev.selected.begin(), ev.selected.end());
    const double ratio = static_cast<double>(seen.size()) / static_cast<double>(result.num_clients);
    if (ratio != result.participation_ratio) {
        throw std::logic_error("participation: selection trace gives " + std::to_string(ratio) +
                               " but the run reports " + std::to_string(result.participation_ratio));
    }
    return ratio;
}

Table participation_table(std::span<const ComparisonEntry> entries) {
    if (entries.empty()) throw std::invalid_argument("participation_table: no results");
    struct Row {
        double ratio;
        std::vector<std::string> cells;
    };
    std::vector<Row> rows;
    for (const auto& e : entries) {
        if (e.runs.empty()) throw std::invalid_argument("participation_table: '" + e.label + "' has no runs");
        std::vector<double> all, elected;
        for (const auto& r : e.runs) {
            all.push_back(participation_from_trace(r));
            elected.push_back(r.elected_participation_ratio);
        }
        const double m = median(all);
        rows.push_back({m, {e.label, e.algorithm, percent(m), percent(median(elected)),
                            std::to_string(e.runs.size())}});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.ratio > b.ratio; });
    Table t;
    t.header = {"configuration", "algorithm", "participation_pct", "elected_participation_pct", "runs"};
    for (auto& r : rows) t.rows.push_back(std::move(r.cells));
    return t;
}

const char* mode_name(RunMode mode) {
    return mode == RunMode::normal ? "normal" : "attack";
}

Table accuracy_table(std::span<const ModeEntry> entries) {
    if (entries.empty()) throw std::invalid_argument("accuracy_table: no results");
    using Key = std::pair<std::size_t, std::string>;  // (K, configuration)
    std::vector<Key> order;
    std::map<Key, const ComparisonEntry*> normal, attack;
    for (const auto& me : entries) {
        if (me.entry.runs.empty()) {
            throw std::invalid_argument("accuracy_table: '" + me.entry.label + "' has no runs");
        }
        const Key key{me.entry.runs.front().num_clients, me.entry.label};
        auto& slot = me.mode == RunMode::normal ? normal : attack;
        if (!slot.emplace(key, &me.entry).second) {
            throw std::invalid_argument("accuracy_table: '" + key.second + "' with K=" +
                                        std::to_string(key.first) + " appears twice in " +
                                        mode_name(me.mode) + " mode");
        }
        if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
    }
    for (const auto& key : order) {
        for (auto [slot, missing] : {std::pair{&normal, RunMode::normal}, std::pair{&attack, RunMode::attack}}) {
            if (!slot->count(key)) {
                throw std::invalid_argument("accuracy_table: '" + key.second + "' with K=" +
                                            std::to_string(key.first) + " has no " +
                                            mode_name(missing) + " run");
            }
        }
    }
    Table t;
    t.header = {"mode", "K", "configuration", "algorithm", "median_accuracy", "median_simulated_cost", "runs"};
    for (auto [slot, mode] : {std::pair{&normal, RunMode::normal}, std::pair{&attack, RunMode::attack}}) {
        for (const auto& key : order) {
            const ComparisonEntry& e = *slot->at(key);
            t.rows.push_back({mode_name(mode), std::to_string(key.first), e.label, e.algorithm,
                              fixed(e.median_final_accuracy, 4), fixed(e.median_simulated_cost, 0),
                              std::to_string(e.runs.size())});
        }
    }
    return t;
}

}  // namespace fedfits
