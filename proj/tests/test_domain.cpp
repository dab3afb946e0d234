#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "crashprob/csv.hpp"
#include "crashprob/rng.hpp"
#include "crashprob/types.hpp"
#include "support/builders.hpp"

using namespace crashprob;
using testing::obs;

TEST_CASE("outcome and surface names round-trip") {
    for (Outcome k : kAllOutcomes) {
        CHECK(parse_outcome(outcome_name(k)) == k);
    }
    CHECK(std::string(outcome_name(Outcome::ror)) == "ROR");
    CHECK_THROWS_WITH_AS(parse_outcome("RLC"), doctest::Contains("unknown outcome"),
                         ValidationError);
    CHECK(parse_surface("dry") == Surface::dry);
    CHECK(parse_surface("wet") == Surface::wet);
    CHECK_THROWS_AS(parse_surface("icy"), ValidationError);
}

TEST_CASE("coefficient access by packed index") {
    CHECK(std::string(coefficient_name(0)) == "re.b0");
    CHECK(std::string(coefficient_name(4)) == "lc.b0");
    CHECK(std::string(coefficient_name(8)) == "lc.b4");
    CHECK(std::string(coefficient_name(11)) == "ror.b2");

    ModelParameters p;
    for (int i = 0; i < kNumCoefficients; ++i) {
        p.set_coefficient(i, 100.0 + i);
    }
    CHECK(p.beta_re[3] == 103.0);
    CHECK(p.beta_lc[0] == 104.0);
    CHECK(p.beta_ror[2] == 111.0);
    for (int i = 0; i < kNumCoefficients; ++i) {
        CHECK(p.coefficient(i) == 100.0 + i);
    }
    CHECK(p.n_free_coefficients() == 12);
    p.free_mask[5] = false;
    p.free_mask[7] = false;
    CHECK(p.n_free_coefficients() == 10);
}

TEST_CASE("cell keys order and label") {
    CellKey a{"E1", 0, 0, 0};
    CellKey b{"E1", 1, 0, 0};
    CHECK(a < b);
    CHECK(a.label() == "E1/r0/s0/p0");
    CHECK(CellKey{"E7", 2, 1, 3}.label() == "E7/r2/s1/p3");
}

TEST_CASE("cell windows are half-open below the anchor") {
    EventRecord ev;
    ev.event_id = "E1";
    ev.anchor_position = 100.0;
    ev.anchor_time = 300.0;
    ev.cell_length = 50.0;
    ev.cell_duration = 300.0;

    auto at = [](double position, double time) {
        VehicleObservation o = obs(1, position, 20);
        o.time = time;
        return o;
    };
    std::vector<VehicleObservation> rows{
        at(100.0, 300.0),  // both coordinates on the anchor: included
        at(50.0, 300.0),   // position == anchor - length: excluded
        at(50.001, 1.0),   // just inside in space, just inside in time
        at(100.0, 0.0),    // time == anchor - duration: excluded
        at(101.0, 300.0),  // beyond the anchor: excluded
        at(100.0, 301.0),  // after the anchor time: excluded
    };
    auto cells = build_cells(rows, ev);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].first == CellKey{"E1", 0, 0, 0});
    CHECK(cells[0].second == std::vector<std::size_t>{0, 2});
}

TEST_CASE("each replication gets its own cell") {
    EventRecord ev;
    ev.event_id = "E1";
    ev.anchor_position = 100.0;
    ev.anchor_time = 300.0;

    std::vector<VehicleObservation> rows;
    for (int rep : {0, 0, 1, 2}) {
        VehicleObservation o = obs(1, 80, 20);
        o.replication = rep;
        o.time = 100;
        rows.push_back(o);
    }
    auto cells = build_cells(rows, ev);
    REQUIRE(cells.size() == 3);
    CHECK(cells[0].first.replication == 0);
    CHECK(cells[0].second.size() == 2);
    CHECK(cells[1].first.replication == 1);
    CHECK(cells[2].first.replication == 2);
}

TEST_CASE("an event with no in-window observations is an error") {
    EventRecord ev;
    ev.event_id = "E9";
    ev.anchor_position = 100.0;
    ev.anchor_time = 300.0;
    std::vector<VehicleObservation> rows{obs(1, 10.0, 20)};  // far outside in space
    rows[0].time = 200;
    CHECK_THROWS_WITH_AS(build_cells(rows, ev), doctest::Contains("E9"), ValidationError);
}

TEST_CASE("format_double round-trips random doubles exactly") {
    Rng rng(42);
    for (int i = 0; i < 2000; ++i) {
        double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-6.0, 6.0));
        std::string s = format_double(v);
        CHECK(std::stod(s) == v);
        CHECK(s.find(',') == std::string::npos);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.5) == "-2.5");
    CHECK(format_double(0.0) == "0");
    CHECK(format_int(-12) == "-12");
}

TEST_CASE("csv reader enforces header and column counts") {
    CsvReader r("mem.csv", "a,b,c\n1,2,3\n4,5,6\n");
    CHECK(r.header() == std::vector<std::string>{"a", "b", "c"});
    CHECK(r.column("b") == 1);
    CHECK_THROWS_WITH_AS(r.column("z"), doctest::Contains("z"), ValidationError);
    std::vector<std::string_view> row;
    REQUIRE(r.next_row(row));
    CHECK(r.line() == 2);
    CHECK(row[0] == "1");
    REQUIRE(r.next_row(row));
    CHECK(row == std::vector<std::string_view>{"4", "5", "6"});
    CHECK_FALSE(r.next_row(row));
}

TEST_CASE("csv rows with the wrong field count fail with the line number") {
    CsvReader r("bad.csv", "a,b\n1,2\n1,2,3\n");
    std::vector<std::string_view> row;
    REQUIRE(r.next_row(row));
    try {
        r.next_row(row);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("bad.csv:3:") != std::string::npos);
        CHECK(msg.find("expected 2 fields, got 3") != std::string::npos);
    }
}

TEST_CASE("csv field parsers reject malformed numbers with position info") {
    CsvReader r("nums.csv", "x\n1.5\nnope\n");
    std::vector<std::string_view> row;
    REQUIRE(r.next_row(row));
    CHECK(r.parse_double(row[0], "x") == 1.5);
    REQUIRE(r.next_row(row));
    try {
        r.parse_double(row[0], "x");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("nums.csv:3:") != std::string::npos);
        CHECK(msg.find("column 'x'") != std::string::npos);
    }
    CHECK_THROWS_AS(r.parse_int("2.5", "x"), ValidationError);
    CHECK(r.parse_int("-7", "x") == -7);
    CHECK_FALSE(r.parse_optional_int("", "x").has_value());
    CHECK(r.parse_optional_int("12", "x") == 12);
}

TEST_CASE("csv writer emits LF rows and checks the field count") {
    CsvWriter w({"a", "b"});
    w.row({"1", "x"});
    CHECK(w.str() == "a,b\n1,x\n");
    CHECK_THROWS_AS(w.row({"only-one"}), std::logic_error);
}

TEST_CASE("seeded rng streams are independent and reproducible") {
    Rng a = Rng::stream(7, 3, 1);
    Rng b = Rng::stream(7, 3, 1);
    Rng c = Rng::stream(7, 3, 2);
    bool all_equal = true;
    bool any_diff = false;
    for (int i = 0; i < 100; ++i) {
        std::uint64_t va = a.next();
        all_equal = all_equal && (va == b.next());
        any_diff = any_diff || (va != c.next());
    }
    CHECK(all_equal);
    CHECK(any_diff);

    Rng u(123);
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}
