#include "crashprob/extract.hpp"

#include <algorithm>
#include <bit>
#include <tuple>
#include <unordered_map>

#include "crashprob/csv.hpp"
#include "crashprob/scores.hpp"

namespace crashprob {

std::size_t EventIndex::KeyHash::operator()(const Key& k) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto step = [&h](std::uint64_t x) {
        h ^= x;
        h *= 0x100000001b3ull;
        h ^= h >> 29;
    };
    step(static_cast<std::uint64_t>(k.replication));
    step(k.time_bits);
    step(static_cast<std::uint64_t>(k.vehicle_id));
    return static_cast<std::size_t>(h);
}

EventIndex::EventIndex(std::span<const VehicleObservation> observations) {
    map_.reserve(observations.size() * 2);
    for (const VehicleObservation& o : observations) {
        map_.emplace(Key{o.replication, std::bit_cast<std::uint64_t>(o.time), o.vehicle_id}, &o);
    }
}

const VehicleObservation* EventIndex::find(int replication, double time,
                                           std::int64_t vehicle_id) const {
    auto it = map_.find(Key{replication, std::bit_cast<std::uint64_t>(time), vehicle_id});
    return it == map_.end() ? nullptr : it->second;
}

namespace {

const VehicleObservation& resolve(const VehicleObservation& obs, const EventIndex& index,
                                  std::int64_t other_id, const char* what) {
    const VehicleObservation* other = index.find(obs.replication, obs.time, other_id);
    if (!other) {
        throw ValidationError(std::string(what) + " " + format_int(other_id) +
                              " of vehicle " + format_int(obs.vehicle_id) + " in event '" +
                              obs.event_id + "' has no observation at t=" +
                              format_double(obs.time));
    }
    return *other;
}

}  // namespace

FeatureVector extract_features(const VehicleObservation& obs, const EventIndex& index,
                               const std::vector<RoadSection>& sections, Surface surface,
                               const FrictionConfig& friction) {
    const RoadSection& section = section_at(sections, obs.position);
    Availability av = availability(obs, section);
    FeatureVector f;
    f.avail_re = av.re;
    f.avail_lc = av.lc;
    f.avail_ror = av.ror;
    if (av.re) {
        const VehicleObservation& leader = resolve(obs, index, *obs.leader_id, "leader");
        auto [ra_pos, ra_neg] = ra_need(obs, leader);
        f.ra_need_pos = ra_pos;
        f.ra_need_neg = ra_neg;
        f.ra_lim = ra_lim(obs, leader, section, surface, friction);
    }
    if (av.lc) {
        if (obs.lead_neighbor_id) {
            const VehicleObservation& lead =
                resolve(obs, index, *obs.lead_neighbor_id, "lead neighbor");
            double gap = lead.position - lead.length - obs.position;
            auto [rg_pos, rg_neg] = relative_gap(gap, lead.speed - obs.speed);
            f.rg_lead_pos = rg_pos;
            f.rg_lead_neg = rg_neg;
        }
        if (obs.lag_neighbor_id) {
            const VehicleObservation& lag =
                resolve(obs, index, *obs.lag_neighbor_id, "lag neighbor");
            double gap = obs.position - obs.length - lag.position;
            auto [rg_pos, rg_neg] = relative_gap(gap, obs.speed - lag.speed);
            f.rg_lag_pos = rg_pos;
            f.rg_lag_neg = rg_neg;
        }
    }
    if (av.ror) {
        double a_lat = lateral_acceleration(obs, section, friction);
        double a_crit = critical_lateral_acceleration(obs, section, surface, friction);
        auto [d_pos, d_neg] = delta_a_lat(a_lat, a_crit);
        f.dalat_pos = d_pos;
        f.dalat_neg = d_neg;
    }
    return f;
}

CellDataset build_cell_dataset(const Dataset& dataset, const FrictionConfig& friction) {
    CellDataset out;
    const std::vector<VehicleObservation>& obs = dataset.observations;
    std::size_t begin = 0;
    for (const EventRecord& event : dataset.events) {
        while (begin < obs.size() && obs[begin].event_id < event.event_id) ++begin;
        std::size_t end = begin;
        while (end < obs.size() && obs[end].event_id == event.event_id) ++end;
        std::span<const VehicleObservation> rows(obs.data() + begin, end - begin);
        auto cells = build_cells(rows, event);  // throws when the window is empty
        EventIndex index(rows);
        for (auto& [key, members] : cells) {
            CellFeatures cell;
            cell.key = key;
            cell.outcome = event.outcome;
            cell.members.reserve(members.size());
            for (std::size_t m : members) {
                const VehicleObservation& o = rows[m];
                FeatureVector f =
                    extract_features(o, index, dataset.sections, event.surface, friction);
                out.rows.push_back(FeatureRow{o.event_id, o.replication, o.vehicle_id, o.time,
                                              key.s_index, key.p_index, f});
                cell.members.push_back(f);
            }
            out.cells.push_back(std::move(cell));
            out.events.push_back(&event);
        }
        begin = end;
    }
    return out;
}

std::string serialize_features(const std::vector<FeatureRow>& rows) {
    CsvWriter w({"event_id", "replication", "vehicle_id", "time_s", "s_index", "p_index",
                 "ra_need_pos", "ra_need_neg", "ra_lim", "rg_lag_pos", "rg_lag_neg",
                 "rg_lead_pos", "rg_lead_neg", "dalat_pos", "dalat_neg", "avail_re", "avail_lc",
                 "avail_ror"});
    for (const FeatureRow& r : rows) {
        const FeatureVector& f = r.features;
        w.row({r.event_id, format_int(r.replication), format_int(r.vehicle_id),
               format_double(r.time), format_int(r.s_index), format_int(r.p_index),
               format_double(f.ra_need_pos), format_double(f.ra_need_neg),
               format_double(f.ra_lim), format_double(f.rg_lag_pos),
               format_double(f.rg_lag_neg), format_double(f.rg_lead_pos),
               format_double(f.rg_lead_neg), format_double(f.dalat_pos),
               format_double(f.dalat_neg), f.avail_re ? "1" : "0", f.avail_lc ? "1" : "0",
               f.avail_ror ? "1" : "0"});
    }
    return w.str();
}

namespace {

bool parse_flag(const CsvReader& reader, std::string_view field, const std::string& column) {
    if (field == "1") return true;
    if (field == "0") return false;
    reader.fail(column, "expected 0 or 1, got '" + std::string(field) + "'");
}

void check_pair(const CsvReader& reader, double pos, double neg, bool avail,
                const std::string& pos_col) {
    if (pos < 0 || neg > 0) {
        reader.fail(pos_col, "sign-split pair must satisfy pos >= 0 >= neg");
    }
    if (pos != 0 && neg != 0) {
        reader.fail(pos_col, "at most one of a sign-split pair may be nonzero");
    }
    if (!avail && (pos != 0 || neg != 0)) {
        reader.fail(pos_col, "features of an unavailable alternative must be zero");
    }
}

}  // namespace

CellDataset parse_features(const std::string& path, const std::string& content,
                           const std::vector<EventRecord>& events) {
    CsvReader reader(path, content);
    const std::size_t c_event = reader.column("event_id");
    const std::size_t c_rep = reader.column("replication");
    const std::size_t c_veh = reader.column("vehicle_id");
    const std::size_t c_time = reader.column("time_s");
    const std::size_t c_s = reader.column("s_index");
    const std::size_t c_p = reader.column("p_index");
    const std::size_t c_f0 = reader.column("ra_need_pos");
    std::size_t cols[9];
    const char* names[9] = {"ra_need_pos", "ra_need_neg", "ra_lim",
                            "rg_lag_pos",  "rg_lag_neg",  "rg_lead_pos",
                            "rg_lead_neg", "dalat_pos",   "dalat_neg"};
    for (int i = 0; i < 9; ++i) cols[i] = reader.column(names[i]);
    (void)c_f0;
    const std::size_t c_are = reader.column("avail_re");
    const std::size_t c_alc = reader.column("avail_lc");
    const std::size_t c_aror = reader.column("avail_ror");

    std::unordered_map<std::string, const EventRecord*> by_id;
    by_id.reserve(events.size());
    for (const EventRecord& e : events) by_id.emplace(e.event_id, &e);

    CellDataset out;
    std::vector<std::string_view> row;
    while (reader.next_row(row)) {
        FeatureRow r;
        r.event_id = std::string(row[c_event]);
        r.replication = static_cast<int>(reader.parse_int(row[c_rep], "replication"));
        r.vehicle_id = reader.parse_int(row[c_veh], "vehicle_id");
        r.time = reader.parse_double(row[c_time], "time_s");
        r.s_index = static_cast<int>(reader.parse_int(row[c_s], "s_index"));
        r.p_index = static_cast<int>(reader.parse_int(row[c_p], "p_index"));
        double v[9];
        for (int i = 0; i < 9; ++i) v[i] = reader.parse_double(row[cols[i]], names[i]);
        FeatureVector& f = r.features;
        f.ra_need_pos = v[0];
        f.ra_need_neg = v[1];
        f.ra_lim = v[2];
        f.rg_lag_pos = v[3];
        f.rg_lag_neg = v[4];
        f.rg_lead_pos = v[5];
        f.rg_lead_neg = v[6];
        f.dalat_pos = v[7];
        f.dalat_neg = v[8];
        f.avail_re = parse_flag(reader, row[c_are], "avail_re");
        f.avail_lc = parse_flag(reader, row[c_alc], "avail_lc");
        f.avail_ror = parse_flag(reader, row[c_aror], "avail_ror");
        check_pair(reader, f.ra_need_pos, f.ra_need_neg, f.avail_re, "ra_need_pos");
        if (!f.avail_re && f.ra_lim != 0) {
            reader.fail("ra_lim", "features of an unavailable alternative must be zero");
        }
        check_pair(reader, f.rg_lag_pos, f.rg_lag_neg, f.avail_lc, "rg_lag_pos");
        check_pair(reader, f.rg_lead_pos, f.rg_lead_neg, f.avail_lc, "rg_lead_pos");
        check_pair(reader, f.dalat_pos, f.dalat_neg, f.avail_ror, "dalat_pos");

        if (by_id.find(r.event_id) == by_id.end()) {
            reader.fail("event_id",
                        "event '" + r.event_id + "' has no record in the events file");
        }
        out.rows.push_back(std::move(r));
    }
    if (out.rows.empty()) {
        throw ValidationError(path + ": no feature rows");
    }

    // Canonical ordering, so permuted input files rebuild identical cells.
    std::sort(out.rows.begin(), out.rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
        return std::tie(a.event_id, a.replication, a.s_index, a.p_index, a.vehicle_id, a.time) <
               std::tie(b.event_id, b.replication, b.s_index, b.p_index, b.vehicle_id, b.time);
    });
    std::unordered_map<std::string, std::size_t> cell_index;
    for (const FeatureRow& r : out.rows) {
        CellKey key{r.event_id, r.replication, r.s_index, r.p_index};
        auto [it, inserted] = cell_index.emplace(key.label(), out.cells.size());
        if (inserted) {
            const EventRecord* event = by_id.find(r.event_id)->second;
            CellFeatures cell;
            cell.key = key;
            cell.outcome = event->outcome;
            out.cells.push_back(std::move(cell));
            out.events.push_back(event);
        }
        out.cells[it->second].members.push_back(r.features);
    }
    return out;
}

CellDataset load_features(const std::string& path, const std::vector<EventRecord>& events) {
    return parse_features(path, read_file(path), events);
}

}  // namespace crashprob
