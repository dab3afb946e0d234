#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "crashprob/csv.hpp"
#include "crashprob/dataset.hpp"
#include "crashprob/synthetic.hpp"

using namespace crashprob;

namespace {

ScenarioConfig small_config() {
    ScenarioConfig cfg;
    cfg.n_events = 6;
    cfg.duration = 95.0;
    cfg.cell_duration = 60.0;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("the default corridor is contiguous and zone-structured") {
    ScenarioConfig cfg;
    std::vector<RoadSection> sections = scenario_sections(cfg);
    REQUIRE(!sections.empty());
    CHECK(sections.size() % 3 == 0);
    CHECK(sections[0].start == 0.0);
    for (std::size_t i = 0; i < sections.size(); ++i) {
        CHECK(sections[i].end > sections[i].start);
        CHECK(sections[i].n_lanes >= 1);
        CHECK(sections[i].n_lanes <= 3);
        if (i > 0) CHECK(sections[i].start == sections[i - 1].end);
        if (sections[i].radius) CHECK(*sections[i].radius > 0);
    }
    // Same seed, same corridor.
    CHECK(scenario_sections(cfg) == sections);

    ScenarioConfig other = cfg;
    other.seed = 2;
    CHECK(scenario_sections(other) != sections);
}

TEST_CASE("provided sections must fit at least one cell") {
    ScenarioConfig cfg = small_config();
    cfg.sections = {RoadSection{"S1", 0.0, 80.0, 2, std::nullopt, 0.0, 0.0}};
    cfg.cell_length = 50.0;
    CHECK_THROWS_WITH_AS(scenario_sections(cfg), doctest::Contains("too short"),
                         ValidationError);
    cfg.sections[0].end = 400.0;
    CHECK(scenario_sections(cfg) == cfg.sections);
}

TEST_CASE("event scenarios draw anchors on the cell-period grid") {
    ScenarioConfig cfg;
    cfg.duration = 945.0;
    cfg.cell_duration = 300.0;
    cfg.n_events = 200;
    std::set<double> anchors;
    for (int e = 0; e < cfg.n_events; ++e) {
        EventScenario s = event_scenario(cfg, e);
        anchors.insert(s.anchor_time);
        CHECK(s.event_id.size() == 7);
        CHECK(s.zone_end > s.zone_start);
        CHECK(s.anchor_position > s.zone_start);
        CHECK(s.anchor_position < s.zone_end);
        CHECK(s.speed_factor > 0.5);
        CHECK(s.arrival_factor > 0.5);
    }
    for (double a : anchors) {
        CHECK((a == 940.0 || a == 640.0 || a == 340.0));
    }
    CHECK(anchors.size() >= 2);

    ScenarioConfig single = small_config();
    for (int e = 0; e < single.n_events; ++e) {
        CHECK(event_scenario(single, e).anchor_time == 90.0);
    }
}

TEST_CASE("wet fraction 0 and 1 are degenerate") {
    ScenarioConfig cfg = small_config();
    cfg.n_events = 40;
    cfg.wet_fraction = 0.0;
    for (int e = 0; e < cfg.n_events; ++e) {
        CHECK(event_scenario(cfg, e).surface == Surface::dry);
    }
    cfg.wet_fraction = 1.0;
    for (int e = 0; e < cfg.n_events; ++e) {
        CHECK(event_scenario(cfg, e).surface == Surface::wet);
    }
}

TEST_CASE("generation is deterministic and physically consistent") {
    ScenarioConfig cfg = small_config();
    GeneratedTrajectories a = generate_trajectories(cfg);
    GeneratedTrajectories b = generate_trajectories(cfg);
    CHECK(a.observations == b.observations);
    CHECK(a.sections == b.sections);
    REQUIRE(!a.observations.empty());

    double road_start = a.sections.front().start;
    double road_end = a.sections.back().end;
    for (const VehicleObservation& o : a.observations) {
        CHECK(o.speed >= 0.0);
        CHECK(o.position >= road_start);
        CHECK(o.position < road_end);
        CHECK(o.length > 0.0);
    }

    // No two vehicles in the same lane may overlap, with a hard minimum
    // bumper separation.
    std::map<std::tuple<std::string, int, double, int>, std::vector<const VehicleObservation*>>
        groups;
    for (const VehicleObservation& o : a.observations) {
        groups[{o.event_id, o.replication, o.time, o.lane}].push_back(&o);
    }
    for (auto& [key, rows] : groups) {
        std::sort(rows.begin(), rows.end(),
                  [](const VehicleObservation* x, const VehicleObservation* y) {
                      return x->position < y->position;
                  });
        for (std::size_t i = 1; i < rows.size(); ++i) {
            double gap = rows[i]->position - rows[i]->length - rows[i - 1]->position;
            CHECK(gap >= 0.399);
        }
    }
}

TEST_CASE("per-event simulation is independent of the batch") {
    ScenarioConfig cfg = small_config();
    GeneratedTrajectories all = generate_trajectories(cfg);
    std::vector<VehicleObservation> third = simulate_event(cfg, 2, 0);
    std::vector<VehicleObservation> from_batch;
    std::string id = event_scenario(cfg, 2).event_id;
    for (const VehicleObservation& o : all.observations) {
        if (o.event_id == id) from_batch.push_back(o);
    }
    CHECK(third == from_batch);
}

TEST_CASE("replications differ but share the event scenario") {
    ScenarioConfig cfg = small_config();
    cfg.n_events = 2;
    cfg.replications = 2;
    GeneratedTrajectories g = generate_trajectories(cfg);
    bool saw[2] = {false, false};
    for (const VehicleObservation& o : g.observations) {
        REQUIRE(o.replication >= 0);
        REQUIRE(o.replication <= 1);
        saw[o.replication] = true;
    }
    CHECK(saw[0]);
    CHECK(saw[1]);
    std::vector<VehicleObservation> r0 = simulate_event(cfg, 0, 0);
    std::vector<VehicleObservation> r1 = simulate_event(cfg, 0, 1);
    CHECK(r0 != r1);
}

TEST_CASE("zero arrival rate produces no traffic") {
    ScenarioConfig cfg = small_config();
    cfg.arrival_rate = 0.0;
    CHECK(generate_trajectories(cfg).observations.empty());
}

TEST_CASE("saturated entry is reported, not simulated") {
    ScenarioConfig cfg;
    cfg.n_events = 1;
    cfg.duration = 120.0;
    cfg.cell_duration = 60.0;
    cfg.cell_length = 50.0;
    cfg.arrival_rate = 10.0;
    cfg.sections = {RoadSection{"S1", 0.0, 400.0, 1, std::nullopt, 0.0, 0.0}};
    CHECK_THROWS_WITH_AS(simulate_event(cfg, 0, 0),
                         doctest::Contains("infeasible arrival density"), ValidationError);
}

TEST_CASE("sampled outcomes follow the probability vector") {
    std::array<double, 4> half{0.5, 0.5, 0.0, 0.0};
    int na = 0;
    for (int i = 0; i < 10000; ++i) {
        Rng rng = Rng::stream(3, static_cast<std::uint64_t>(i), 0);
        Outcome k = sample_outcome(half, rng);
        CHECK((k == Outcome::na || k == Outcome::re));
        if (k == Outcome::na) ++na;
    }
    CHECK(na > 4800);
    CHECK(na < 5200);

    std::array<double, 4> sure{1.0, 0.0, 0.0, 0.0};
    std::array<double, 4> ror_only{0.0, 0.0, 0.0, 1.0};
    for (int i = 0; i < 100; ++i) {
        Rng rng = Rng::stream(4, static_cast<std::uint64_t>(i), 0);
        CHECK(sample_outcome(sure, rng) == Outcome::na);
        Rng rng2 = Rng::stream(5, static_cast<std::uint64_t>(i), 0);
        CHECK(sample_outcome(ror_only, rng2) == Outcome::ror);
    }
}

TEST_CASE("pooled cell probabilities are a distribution") {
    ScenarioConfig cfg = small_config();
    cfg.replications = 2;
    GeneratedTrajectories g = generate_trajectories(cfg);
    EventScenario s = event_scenario(cfg, 0);
    std::vector<VehicleObservation> rows;
    for (const VehicleObservation& o : g.observations) {
        if (o.event_id == s.event_id) rows.push_back(o);
    }
    REQUIRE(!rows.empty());
    EventRecord ev;
    ev.event_id = s.event_id;
    ev.surface = s.surface;
    ev.anchor_position = s.anchor_position;
    ev.anchor_time = s.anchor_time;
    ev.cell_length = cfg.cell_length;
    ev.cell_duration = cfg.cell_duration;
    auto p = pooled_cell_probabilities(rows, ev, g.sections, demo_parameters(), ScalingConfig{},
                                       FrictionConfig{});
    double sum = 0;
    for (double x : p) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
        sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[0] > 0.5);  // accidents are rare under the demo parameters
}

TEST_CASE("hopeless constants label everything as no accident") {
    ScenarioConfig cfg = small_config();
    GeneratedTrajectories g = generate_trajectories(cfg);
    ModelParameters safe;
    safe.beta_re[0] = -40.0;
    safe.beta_lc[0] = -40.0;
    safe.beta_ror[0] = -40.0;
    safe.mu = 1.5;
    std::vector<EventRecord> events =
        label_outcomes(g.observations, safe, ScalingConfig{}, FrictionConfig{}, cfg);
    REQUIRE(static_cast<int>(events.size()) == cfg.n_events);
    for (int e = 0; e < cfg.n_events; ++e) {
        EventScenario s = event_scenario(cfg, e);
        CHECK(events[static_cast<std::size_t>(e)].event_id == s.event_id);
        CHECK(events[static_cast<std::size_t>(e)].outcome == Outcome::na);
        CHECK(events[static_cast<std::size_t>(e)].anchor_position == s.anchor_position);
        CHECK(events[static_cast<std::size_t>(e)].anchor_time == s.anchor_time);
        CHECK(events[static_cast<std::size_t>(e)].cell_length == cfg.cell_length);
        CHECK(events[static_cast<std::size_t>(e)].cell_duration == cfg.cell_duration);
    }
}

TEST_CASE("generated files round-trip and cross-validate") {
    ScenarioConfig cfg = small_config();
    GeneratedTrajectories g = generate_trajectories(cfg);
    std::vector<EventRecord> events =
        label_outcomes(g.observations, demo_parameters(), ScalingConfig{}, FrictionConfig{}, cfg);

    TrajectoryFile tf =
        parse_trajectories("t.csv", serialize_trajectories(g.observations));
    std::vector<RoadSection> sections =
        parse_geometry("g.csv", serialize_geometry(g.sections));
    std::vector<EventRecord> parsed_events = parse_events(
        "e.csv", serialize_events(events), cfg.cell_length, cfg.cell_duration);

    CHECK(sections == g.sections);
    CHECK(parsed_events == events);

    Dataset data = assemble_dataset(std::move(tf), std::move(sections), std::move(parsed_events));
    std::vector<VehicleObservation> sorted = g.observations;
    std::sort(sorted.begin(), sorted.end(),
              [](const VehicleObservation& x, const VehicleObservation& y) {
                  return std::tie(x.event_id, x.replication, x.vehicle_id, x.time) <
                         std::tie(y.event_id, y.replication, y.vehicle_id, y.time);
              });
    CHECK(data.observations == sorted);
}

TEST_CASE("choice-based sampling keeps all accidents and corrects the weights") {
    std::vector<EventRecord> events;
    auto add = [&](int n, Outcome y) {
        for (int i = 0; i < n; ++i) {
            EventRecord ev;
            ev.event_id = "E" + format_int(static_cast<std::int64_t>(events.size()));
            ev.outcome = y;
            events.push_back(ev);
        }
    };
    add(100, Outcome::na);
    add(10, Outcome::re);
    add(6, Outcome::lc);
    add(4, Outcome::ror);

    ChoiceBasedSample s = choice_based_sample(events, {20, 10, 6, 4}, 5);
    CHECK(s.events.size() == 40);
    CHECK(s.population_counts == std::array<std::int64_t, 4>{100, 10, 6, 4});
    CHECK(s.sample_counts == std::array<std::int64_t, 4>{20, 10, 6, 4});
    CHECK(s.weights.of(Outcome::na) == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK(s.weights.of(Outcome::re) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(s.weights.of(Outcome::lc) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(s.weights.of(Outcome::ror) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // Every accident event survives; the output preserves input order.
    int accidents = 0;
    for (std::size_t i = 1; i < s.events.size(); ++i) {
        CHECK(std::stoll(s.events[i].event_id.substr(1)) >
              std::stoll(s.events[i - 1].event_id.substr(1)));
    }
    for (const EventRecord& ev : s.events) {
        if (ev.outcome != Outcome::na) ++accidents;
    }
    CHECK(accidents == 20);

    ChoiceBasedSample again = choice_based_sample(events, {20, 10, 6, 4}, 5);
    CHECK(again.events == s.events);
    ChoiceBasedSample other = choice_based_sample(events, {20, 10, 6, 4}, 6);
    CHECK(other.events != s.events);

    CHECK_THROWS_WITH_AS(choice_based_sample(events, {200, 10, 6, 4}, 5),
                         doctest::Contains("exceeds"), ValidationError);
}
