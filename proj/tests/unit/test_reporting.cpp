#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "fedfits/csv.hpp"
#include "fedfits/reporting.hpp"

using namespace fedfits;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.dataset.dim = 4;
    c.dataset.samples_per_class = 100;
    c.partition.num_clients = 10;
    c.partition.min_samples_per_client = 5;
    c.rounds = 3;
    return c;
}

ComparisonEntry entry(const std::string& label, double participation, std::size_t k) {
    ComparisonEntry e;
    e.label = label;
    e.algorithm = label;
    e.seeds = {1};
    RunResult r;
    r.num_clients = k;
    r.participation_ratio = participation;
    r.elected_participation_ratio = participation;
    RoundRecord rec;
    rec.round = 1;
    rec.global_eval = {0.5, 0.75};
    rec.simulated_cost = 10;
    r.rounds = {rec};
    SelectionEvent ev;
    ev.round = 1;
    for (std::size_t id = 0; id < static_cast<std::size_t>(participation * k + 0.5); ++id) {
        ev.selected.push_back(id);
    }
    r.selection_trace = {ev};
    e.runs = {r};
    e.median_final_accuracy = 0.75;
    e.median_participation = participation;
    e.median_simulated_cost = 10;
    return e;
}

}  // namespace

TEST_SUITE("reporting") {
    TEST_CASE("csv quoting and parsing") {
        CHECK(csv::escape("plain") == "plain");
        CHECK(csv::escape("a,b") == "\"a,b\"");
        CHECK(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
        const auto rows = csv::parse("a,\"b,c\",\"d\"\"e\"\r\n1,2,3\n");
        REQUIRE(rows.size() == 2);
        CHECK(rows[0] == csv::Row{"a", "b,c", "d\"e"});
        CHECK(rows[1] == csv::Row{"1", "2", "3"});
    }

    TEST_CASE("numbers round trip exactly") {
        for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) {
            CHECK(std::stod(csv::format_number(v)) == v);
        }
        CHECK(csv::format_number(std::nan("")).empty());
    }

    TEST_CASE("metrics table round trips through csv") {
        const RunResult r = run(small_config());
        const Table t = metrics_table(r);
        CHECK(t.header == metrics_columns);
        CHECK(t.rows.size() == 3);
        CHECK(Table::from_csv(t.to_csv()) == t);
        // round 1 has no threshold
        CHECK(t.rows[0][8].empty());
        CHECK(std::stod(t.rows[2][4]) == r.rounds[2].global_eval.accuracy);
    }

    TEST_CASE("blank column") {
        Table t{{"a", "b"}, {{"1", "2"}, {"3", "4"}}};
        const Table b = blank_column(t, "b");
        CHECK(b.rows[0][1].empty());
        CHECK(b.rows[1][0] == "3");
        CHECK_THROWS_AS(blank_column(t, "c"), std::invalid_argument);
    }

    TEST_CASE("participation from the trace matches the run") {
        const RunResult r = run(small_config());
        CHECK(participation_from_trace(r) == r.participation_ratio);
        RunResult tampered = r;
        tampered.participation_ratio = 0.1;
        CHECK_THROWS_AS(participation_from_trace(tampered), std::logic_error);
    }

    TEST_CASE("participation table is sorted highest first") {
        const std::vector<ComparisonEntry> es{entry("low", 0.5, 10), entry("high", 1.0, 10),
                                              entry("mid", 0.8, 10)};
        const Table t = participation_table(es);
        REQUIRE(t.rows.size() == 3);
        CHECK(t.rows[0][0] == "high");
        CHECK(t.rows[1][0] == "mid");
        CHECK(t.rows[2][0] == "low");
    }

    TEST_CASE("accuracy table with one pair has two rows") {
        const std::vector<ModeEntry> es{{RunMode::normal, entry("fedfits", 1.0, 10)},
                                        {RunMode::attack, entry("fedfits", 1.0, 10)}};
        const Table t = accuracy_table(es);
        REQUIRE(t.rows.size() == 2);
        CHECK(t.rows[0][0] == "normal");
        CHECK(t.rows[1][0] == "attack");
        CHECK(t.to_markdown().find("| mode |") != std::string::npos);
    }

    TEST_CASE("accuracy table rejects a missing pair") {
        const std::vector<ModeEntry> es{{RunMode::normal, entry("fedfits", 1.0, 10)},
                                        {RunMode::attack, entry("fedfits", 1.0, 20)}};
        CHECK_THROWS_AS(accuracy_table(es), std::invalid_argument);
    }
}
