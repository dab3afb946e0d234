#include "crashprob/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "crashprob/csv.hpp"

namespace crashprob {

namespace {

double parse_finite(const CsvReader& r, std::string_view field, const std::string& column) {
    double v = r.parse_double(field, column);
    if (!std::isfinite(v)) r.fail(column, "value must be finite");
    return v;
}

/// Identity of one observation row within its file.
struct ObsKey {
    std::int64_t event_ref;  // interned event id
    int replication;
    std::uint64_t time_bits;
    std::int64_t vehicle_id;

    bool operator==(const ObsKey&) const = default;
};

struct ObsKeyHash {
    std::size_t operator()(const ObsKey& k) const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        auto step = [&h](std::uint64_t x) {
            h ^= x;
            h *= 0x100000001b3ull;
            h ^= h >> 29;
        };
        step(static_cast<std::uint64_t>(k.event_ref));
        step(static_cast<std::uint64_t>(k.replication));
        step(k.time_bits);
        step(static_cast<std::uint64_t>(k.vehicle_id));
        return static_cast<std::size_t>(h);
    }
};

}  // namespace

TrajectoryFile parse_trajectories(const std::string& path, const std::string& content,
                                  bool speeds_kmh) {
    CsvReader reader(path, content);
    const std::size_t c_event = reader.column("event_id");
    const std::size_t c_rep = reader.column("replication");
    const std::size_t c_veh = reader.column("vehicle_id");
    const std::size_t c_time = reader.column("time_s");
    const std::size_t c_lane = reader.column("lane_id");
    const std::size_t c_pos = reader.column("pos_m");
    const std::size_t c_speed = reader.column("speed");
    const std::size_t c_accel = reader.column("accel");
    const std::size_t c_len = reader.column("length_m");
    const std::size_t c_type = reader.column("veh_type");
    const std::size_t c_leader = reader.column("leader_id");
    const std::size_t c_lc = reader.column("lc_state");
    const std::size_t c_lead = reader.column("lead_neighbor_id");
    const std::size_t c_lag = reader.column("lag_neighbor_id");

    TrajectoryFile out;
    out.path = path;
    std::vector<std::string_view> row;
    while (reader.next_row(row)) {
        VehicleObservation o;
        o.event_id = std::string(row[c_event]);
        if (o.event_id.empty()) reader.fail("event_id", "must not be empty");
        std::int64_t rep = reader.parse_int(row[c_rep], "replication");
        if (rep < 0) reader.fail("replication", "must be >= 0");
        o.replication = static_cast<int>(rep);
        o.vehicle_id = reader.parse_int(row[c_veh], "vehicle_id");
        o.time = parse_finite(reader, row[c_time], "time_s");
        o.lane = static_cast<int>(reader.parse_int(row[c_lane], "lane_id"));
        if (o.lane < 1) reader.fail("lane_id", "must be >= 1");
        o.position = parse_finite(reader, row[c_pos], "pos_m");
        o.speed = parse_finite(reader, row[c_speed], "speed");
        if (speeds_kmh) o.speed /= 3.6;
        if (o.speed < 0) reader.fail("speed", "must be >= 0");
        o.accel = parse_finite(reader, row[c_accel], "accel");
        o.length = parse_finite(reader, row[c_len], "length_m");
        if (!(o.length > 0)) reader.fail("length_m", "must be > 0");
        if (row[c_type] == "car") {
            o.vehicle_type = VehicleType::car;
        } else if (row[c_type] == "heavy") {
            o.vehicle_type = VehicleType::heavy;
        } else {
            reader.fail("veh_type", "expected car or heavy, got '" + std::string(row[c_type]) +
                                        "'");
        }
        o.leader_id = reader.parse_optional_int(row[c_leader], "leader_id");
        if (row[c_lc] == "none") {
            o.lc_state = LcState::none;
        } else if (row[c_lc] == "changing") {
            o.lc_state = LcState::changing;
        } else {
            reader.fail("lc_state", "expected none or changing, got '" + std::string(row[c_lc]) +
                                        "'");
        }
        o.lead_neighbor_id = reader.parse_optional_int(row[c_lead], "lead_neighbor_id");
        o.lag_neighbor_id = reader.parse_optional_int(row[c_lag], "lag_neighbor_id");
        out.rows.push_back(std::move(o));
        out.lines.push_back(reader.line());
    }
    return out;
}

TrajectoryFile load_trajectories(const std::string& path, bool speeds_kmh) {
    return parse_trajectories(path, read_file(path), speeds_kmh);
}

std::vector<RoadSection> parse_geometry(const std::string& path, const std::string& content) {
    CsvReader reader(path, content);
    const std::size_t c_id = reader.column("section_id");
    const std::size_t c_start = reader.column("start_m");
    const std::size_t c_end = reader.column("end_m");
    const std::size_t c_lanes = reader.column("n_lanes");
    const std::size_t c_radius = reader.column("radius_m");
    const std::size_t c_super = reader.column("superelevation");
    const std::size_t c_grade = reader.column("grade");

    std::vector<RoadSection> sections;
    std::vector<std::size_t> lines;
    std::vector<std::string_view> row;
    while (reader.next_row(row)) {
        RoadSection s;
        s.section_id = std::string(row[c_id]);
        if (s.section_id.empty()) reader.fail("section_id", "must not be empty");
        s.start = parse_finite(reader, row[c_start], "start_m");
        s.end = parse_finite(reader, row[c_end], "end_m");
        if (!(s.start < s.end)) reader.fail("end_m", "section end must exceed its start");
        std::int64_t lanes = reader.parse_int(row[c_lanes], "n_lanes");
        if (lanes < 1) reader.fail("n_lanes", "must be >= 1");
        s.n_lanes = static_cast<int>(lanes);
        if (!row[c_radius].empty()) {
            double radius = parse_finite(reader, row[c_radius], "radius_m");
            if (!(radius > 0)) reader.fail("radius_m", "must be > 0 when present");
            s.radius = radius;
        }
        s.superelevation = parse_finite(reader, row[c_super], "superelevation");
        s.grade = parse_finite(reader, row[c_grade], "grade");
        sections.push_back(std::move(s));
        lines.push_back(reader.line());
    }
    if (sections.empty()) {
        throw ValidationError(path + ": no road sections");
    }
    std::vector<std::size_t> order(sections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sections[a].start < sections[b].start;
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        const RoadSection& prev = sections[order[i - 1]];
        const RoadSection& cur = sections[order[i]];
        if (std::abs(cur.start - prev.end) > 1e-9) {
            throw ValidationError(
                path + ":" + std::to_string(lines[order[i]]) + ": section '" + cur.section_id +
                "' is not contiguous with '" + prev.section_id + "' (starts at " +
                format_double(cur.start) + ", previous ends at " + format_double(prev.end) + ")");
        }
    }
    std::vector<RoadSection> sorted;
    sorted.reserve(sections.size());
    for (std::size_t i : order) sorted.push_back(std::move(sections[i]));
    return sorted;
}

std::vector<RoadSection> load_geometry(const std::string& path) {
    return parse_geometry(path, read_file(path));
}

std::vector<EventRecord> parse_events(const std::string& path, const std::string& content,
                                      double cell_length, double cell_duration) {
    if (!(cell_length > 0) || !(cell_duration > 0)) {
        throw ValidationError("cell_length and cell_duration must be > 0");
    }
    CsvReader reader(path, content);
    const std::size_t c_id = reader.column("event_id");
    const std::size_t c_outcome = reader.column("outcome");
    const std::size_t c_surface = reader.column("surface");
    const std::size_t c_pos = reader.column("anchor_pos_m");
    const std::size_t c_time = reader.column("anchor_time_s");

    std::vector<EventRecord> events;
    std::unordered_set<std::string> seen;
    std::vector<std::string_view> row;
    while (reader.next_row(row)) {
        EventRecord e;
        e.event_id = std::string(row[c_id]);
        if (e.event_id.empty()) reader.fail("event_id", "must not be empty");
        if (!seen.insert(e.event_id).second) {
            reader.fail("event_id", "duplicate event_id '" + e.event_id + "'");
        }
        try {
            e.outcome = parse_outcome(std::string(row[c_outcome]));
        } catch (const ValidationError& err) {
            reader.fail("outcome", err.what());
        }
        try {
            e.surface = parse_surface(std::string(row[c_surface]));
        } catch (const ValidationError& err) {
            reader.fail("surface", err.what());
        }
        e.anchor_position = parse_finite(reader, row[c_pos], "anchor_pos_m");
        e.anchor_time = parse_finite(reader, row[c_time], "anchor_time_s");
        e.cell_length = cell_length;
        e.cell_duration = cell_duration;
        events.push_back(std::move(e));
    }
    if (events.empty()) {
        throw ValidationError(path + ": no events");
    }
    return events;
}

std::vector<EventRecord> load_events(const std::string& path, double cell_length,
                                     double cell_duration) {
    return parse_events(path, read_file(path), cell_length, cell_duration);
}

const RoadSection& section_at(const std::vector<RoadSection>& sections, double position) {
    if (!sections.empty() && position >= sections.front().start &&
        position <= sections.back().end) {
        auto it = std::upper_bound(
            sections.begin(), sections.end(), position,
            [](double pos, const RoadSection& s) { return pos < s.start; });
        if (it != sections.begin()) {
            const RoadSection& s = *(it - 1);
            if (position <= s.end) return s;
        }
    }
    throw ValidationError("position " + format_double(position) +
                          " lies outside the covered geometry");
}

Dataset assemble_dataset(TrajectoryFile trajectories, std::vector<RoadSection> sections,
                         std::vector<EventRecord> events) {
    Dataset ds;
    ds.sections = std::move(sections);

    std::sort(events.begin(), events.end(),
              [](const EventRecord& a, const EventRecord& b) { return a.event_id < b.event_id; });
    ds.events = std::move(events);

    std::unordered_map<std::string, std::int64_t> event_ref;
    event_ref.reserve(ds.events.size());
    for (std::size_t i = 0; i < ds.events.size(); ++i) {
        event_ref.emplace(ds.events[i].event_id, static_cast<std::int64_t>(i));
        const EventRecord& e = ds.events[i];
        if (e.anchor_position < ds.sections.front().start ||
            e.anchor_position > ds.sections.back().end) {
            throw ValidationError("event '" + e.event_id + "': anchor position " +
                                  format_double(e.anchor_position) +
                                  " lies outside the covered geometry");
        }
    }

    const std::vector<VehicleObservation>& rows = trajectories.rows;
    std::unordered_map<ObsKey, std::size_t, ObsKeyHash> index;
    index.reserve(rows.size() * 2);
    std::vector<std::int64_t> refs(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto ev = event_ref.find(rows[i].event_id);
        if (ev == event_ref.end()) {
            throw ValidationError(trajectories.path + ":" +
                                  std::to_string(trajectories.lines[i]) + ": event_id '" +
                                  rows[i].event_id + "' has no record in the events file");
        }
        refs[i] = ev->second;
        ObsKey key{refs[i], rows[i].replication, std::bit_cast<std::uint64_t>(rows[i].time),
                   rows[i].vehicle_id};
        if (!index.emplace(key, i).second) {
            throw ValidationError(trajectories.path + ":" +
                                  std::to_string(trajectories.lines[i]) +
                                  ": duplicate observation for vehicle " +
                                  format_int(rows[i].vehicle_id) + " at t=" +
                                  format_double(rows[i].time));
        }
    }
    auto check_reference = [&](std::size_t i, std::int64_t other_id, const char* what,
                               bool require_ahead) {
        ObsKey key{refs[i], rows[i].replication, std::bit_cast<std::uint64_t>(rows[i].time),
                   other_id};
        auto it = index.find(key);
        if (it == index.end()) {
            throw ValidationError(trajectories.path + ":" +
                                  std::to_string(trajectories.lines[i]) + ": " + what + " " +
                                  format_int(other_id) +
                                  " has no observation at the same event/replication/time");
        }
        if (require_ahead && !(rows[it->second].position > rows[i].position)) {
            throw ValidationError(trajectories.path + ":" +
                                  std::to_string(trajectories.lines[i]) + ": " + what + " " +
                                  format_int(other_id) + " is not ahead of vehicle " +
                                  format_int(rows[i].vehicle_id));
        }
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].leader_id) check_reference(i, *rows[i].leader_id, "leader", true);
        if (rows[i].lead_neighbor_id) {
            check_reference(i, *rows[i].lead_neighbor_id, "lead neighbor", false);
        }
        if (rows[i].lag_neighbor_id) {
            check_reference(i, *rows[i].lag_neighbor_id, "lag neighbor", false);
        }
    }

    ds.observations = std::move(trajectories.rows);
    std::sort(ds.observations.begin(), ds.observations.end(),
              [](const VehicleObservation& a, const VehicleObservation& b) {
                  if (a.event_id != b.event_id) return a.event_id < b.event_id;
                  if (a.replication != b.replication) return a.replication < b.replication;
                  if (a.vehicle_id != b.vehicle_id) return a.vehicle_id < b.vehicle_id;
                  return a.time < b.time;
              });
    return ds;
}

namespace {

std::string opt_id(const std::optional<std::int64_t>& id) {
    return id ? format_int(*id) : std::string();
}

}  // namespace

std::string serialize_trajectories(const std::vector<VehicleObservation>& observations) {
    CsvWriter w({"event_id", "replication", "vehicle_id", "time_s", "lane_id", "pos_m", "speed",
                 "accel", "length_m", "veh_type", "leader_id", "lc_state", "lead_neighbor_id",
                 "lag_neighbor_id"});
    for (const VehicleObservation& o : observations) {
        w.row({o.event_id, format_int(o.replication), format_int(o.vehicle_id),
               format_double(o.time), format_int(o.lane), format_double(o.position),
               format_double(o.speed), format_double(o.accel), format_double(o.length),
               o.vehicle_type == VehicleType::car ? "car" : "heavy", opt_id(o.leader_id),
               o.lc_state == LcState::none ? "none" : "changing", opt_id(o.lead_neighbor_id),
               opt_id(o.lag_neighbor_id)});
    }
    return w.str();
}

std::string serialize_geometry(const std::vector<RoadSection>& sections) {
    CsvWriter w({"section_id", "start_m", "end_m", "n_lanes", "radius_m", "superelevation",
                 "grade"});
    for (const RoadSection& s : sections) {
        w.row({s.section_id, format_double(s.start), format_double(s.end),
               format_int(s.n_lanes), s.radius ? format_double(*s.radius) : std::string(),
               format_double(s.superelevation), format_double(s.grade)});
    }
    return w.str();
}

std::string serialize_events(const std::vector<EventRecord>& events) {
    CsvWriter w({"event_id", "outcome", "surface", "anchor_pos_m", "anchor_time_s"});
    for (const EventRecord& e : events) {
        w.row({e.event_id, outcome_name(e.outcome), surface_name(e.surface),
               format_double(e.anchor_position), format_double(e.anchor_time)});
    }
    return w.str();
}

}  // namespace crashprob
