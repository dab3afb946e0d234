#include "crashprob/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <tuple>
#include <utility>

#include "crashprob/csv.hpp"
#include "crashprob/extract.hpp"
#include "crashprob/scores.hpp"

namespace crashprob {
namespace {

constexpr double kZoneLength = 700.0;
constexpr double kApproachEnd = 450.0;
constexpr double kFeatureEnd = 600.0;
constexpr double kAnchorOffset = 550.0;
constexpr double kMinSeparation = 0.4;  // bumper clearance enforced after moves
constexpr double kLookahead = 120.0;    // car-following perception range
constexpr double kAnchorLead = 5.0;     // seconds between anchor and simulation end
constexpr double kWarmup = 45.0;        // settling time excluded from anchor placement

// Stream selectors, so every random purpose has its own generator.
constexpr std::uint64_t kStreamScenario = 1;
constexpr std::uint64_t kStreamLabel = 2;
constexpr std::uint64_t kStreamGeometry = 3;
constexpr std::uint64_t kStreamSampling = 4;
constexpr std::uint64_t kStreamDynamics = 16;  // + replication

std::string event_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "E%06d", index);
    return buf;
}

struct Zone {
    double start = 0;
    double end = 0;
    double anchor = 0;
    int n_lanes = 1;
};

struct Corridor {
    std::vector<RoadSection> sections;
    std::vector<Zone> zones;
};

int default_zone_count(const ScenarioConfig& cfg) {
    return std::clamp((cfg.n_events + 7) / 8, 8, 48);
}

Corridor build_corridor(const ScenarioConfig& cfg) {
    Corridor c;
    if (!cfg.sections.empty()) {
        c.sections = cfg.sections;
        std::sort(c.sections.begin(), c.sections.end(),
                  [](const RoadSection& a, const RoadSection& b) { return a.start < b.start; });
        Zone zone;
        zone.start = c.sections.front().start;
        zone.end = c.sections.back().end;
        double length = zone.end - zone.start;
        if (length < 2.0 * cfg.cell_length) {
            throw ValidationError("configured sections are too short for one cell of length " +
                                  format_double(cfg.cell_length));
        }
        double steps = std::floor(0.75 * length / cfg.cell_length);
        zone.anchor = zone.start + std::max(cfg.cell_length, steps * cfg.cell_length);
        zone.n_lanes = c.sections.front().n_lanes;
        for (const RoadSection& s : c.sections) zone.n_lanes = std::min(zone.n_lanes, s.n_lanes);
        c.zones.push_back(zone);
        return c;
    }
    int n = default_zone_count(cfg);
    for (int z = 0; z < n; ++z) {
        Rng rng(Rng::stream(cfg.seed, static_cast<std::uint64_t>(z), kStreamGeometry));
        double start = kZoneLength * z;
        double lane_draw = rng.uniform();
        int n_lanes = lane_draw < 0.10 ? 1 : (lane_draw < 0.65 ? 2 : 3);
        bool curved = rng.uniform() < 0.55;
        double radius = rng.uniform(250.0, 900.0);
        double superelevation = rng.uniform(0.005, 0.06);
        double grade = rng.uniform(-0.04, 0.04);
        char id[24];
        std::snprintf(id, sizeof id, "Z%02dA", z);
        c.sections.push_back({id, start, start + kApproachEnd, n_lanes, std::nullopt, 0.0, 0.0});
        std::snprintf(id, sizeof id, "Z%02dF", z);
        c.sections.push_back({id, start + kApproachEnd, start + kFeatureEnd, n_lanes,
                              curved ? std::optional<double>(radius) : std::nullopt,
                              curved ? superelevation : 0.0, grade});
        std::snprintf(id, sizeof id, "Z%02dX", z);
        c.sections.push_back(
            {id, start + kFeatureEnd, start + kZoneLength, n_lanes, std::nullopt, 0.0, 0.0});
        c.zones.push_back({start, start + kZoneLength, start + kAnchorOffset, n_lanes});
    }
    return c;
}

struct Veh {
    std::int64_t id = 0;
    int lane = 1;
    double pos = 0;
    double speed = 0;
    double accel = 0;
    double length = 4.5;
    double v_des = 27.0;
    VehicleType type = VehicleType::car;
    int lc_steps = 0;  // changing while > 0
    int target_lane = 0;
    std::optional<std::int64_t> lead_id;
    std::optional<std::int64_t> lag_id;
    int pulse_steps = 0;
    double pulse_accel = 0;
};

/// Per-lane member indices ordered by (position, id).
class LaneOrder {
  public:
    LaneOrder(const std::vector<Veh>& vehicles, int n_lanes) : vehicles_(vehicles) {
        lanes_.assign(static_cast<std::size_t>(n_lanes) + 1, {});
        for (std::size_t i = 0; i < vehicles.size(); ++i) {
            lanes_[static_cast<std::size_t>(vehicles[i].lane)].push_back(i);
        }
        for (auto& lane : lanes_) {
            std::sort(lane.begin(), lane.end(), [&](std::size_t a, std::size_t b) {
                return order_key(vehicles[a]) < order_key(vehicles[b]);
            });
        }
    }

    /// Nearest vehicle strictly ahead of (pos, id) in the lane, or nullptr.
    const Veh* lead(int lane, double pos, std::int64_t id) const {
        const auto& l = lanes_[static_cast<std::size_t>(lane)];
        auto it = std::upper_bound(l.begin(), l.end(), std::pair(pos, id),
                                   [&](const auto& key, std::size_t i) {
                                       return key < order_key(vehicles_[i]);
                                   });
        return it == l.end() ? nullptr : &vehicles_[*it];
    }

    /// Nearest vehicle strictly behind (pos, id) in the lane, or nullptr.
    const Veh* lag(int lane, double pos, std::int64_t id) const {
        const auto& l = lanes_[static_cast<std::size_t>(lane)];
        auto it = std::lower_bound(l.begin(), l.end(), std::pair(pos, id),
                                   [&](std::size_t i, const auto& key) {
                                       return order_key(vehicles_[i]) < key;
                                   });
        return it == l.begin() ? nullptr : &vehicles_[*(it - 1)];
    }

    void move(std::size_t index, int from, int to) {
        auto& src = lanes_[static_cast<std::size_t>(from)];
        src.erase(std::find(src.begin(), src.end(), index));
        auto& dst = lanes_[static_cast<std::size_t>(to)];
        auto key = order_key(vehicles_[index]);
        auto it = std::lower_bound(dst.begin(), dst.end(), key, [&](std::size_t i, const auto& k) {
            return order_key(vehicles_[i]) < k;
        });
        dst.insert(it, index);
    }

    std::span<const std::size_t> lane(int lane_id) const {
        return lanes_[static_cast<std::size_t>(lane_id)];
    }

  private:
    static std::pair<double, std::int64_t> order_key(const Veh& v) { return {v.pos, v.id}; }

    const std::vector<Veh>& vehicles_;
    std::vector<std::vector<std::size_t>> lanes_;
};

double gap_behind(const Veh& lead, double follower_pos) {
    return lead.pos - lead.length - follower_pos;
}

double following_accel(const Veh& v, const Veh& lead, double sensitivity) {
    double gap = gap_behind(lead, v.pos);
    double desired = 3.0 + 1.1 * v.speed;
    return sensitivity * (0.55 * (lead.speed - v.speed) + 0.13 * (gap - desired));
}

int anchor_period_count(const ScenarioConfig& cfg) {
    int k = static_cast<int>(std::floor((cfg.duration - kWarmup) / cfg.cell_duration));
    return std::max(1, k);
}

}  // namespace

std::vector<RoadSection> scenario_sections(const ScenarioConfig& cfg) {
    return build_corridor(cfg).sections;
}

EventScenario event_scenario(const ScenarioConfig& cfg, int event_index) {
    Corridor corridor = build_corridor(cfg);
    const Zone& zone =
        corridor.zones[static_cast<std::size_t>(event_index) % corridor.zones.size()];
    Rng rng(Rng::stream(cfg.seed, static_cast<std::uint64_t>(event_index), kStreamScenario));
    EventScenario s;
    s.event_id = event_name(event_index);
    s.surface = rng.uniform() < cfg.wet_fraction ? Surface::wet : Surface::dry;
    s.speed_factor = rng.uniform(0.80, 1.15);
    s.arrival_factor = rng.uniform(0.65, 1.40);
    int period = static_cast<int>(rng.uniform_int(
        static_cast<std::uint64_t>(anchor_period_count(cfg))));
    s.anchor_time = cfg.duration - kAnchorLead - period * cfg.cell_duration;
    s.anchor_position = zone.anchor;
    s.zone_start = zone.start;
    s.zone_end = zone.end;
    s.n_lanes = zone.n_lanes;
    return s;
}

std::vector<VehicleObservation> simulate_event(const ScenarioConfig& cfg, int event_index,
                                               int replication) {
    const EventScenario scen = event_scenario(cfg, event_index);
    Rng rng(Rng::stream(cfg.seed, static_cast<std::uint64_t>(event_index),
                        kStreamDynamics + static_cast<std::uint64_t>(replication)));

    std::vector<VehicleObservation> rows;
    std::vector<Veh> vehicles;
    std::deque<Veh> pending;
    std::int64_t next_id = 1;
    const double lambda = cfg.arrival_rate * scen.arrival_factor;
    double next_arrival = lambda > 0 ? rng.exponential(lambda)
                                     : std::numeric_limits<double>::infinity();
    const double p_lc = cfg.lc_rate / 60.0;
    const int last_step = static_cast<int>(std::llround(scen.anchor_time));

    for (int t = 0; t <= last_step; ++t) {
        // New demand for this step.
        while (next_arrival <= t) {
            Veh v;
            v.id = next_id++;
            v.type = rng.uniform() < cfg.heavy_share ? VehicleType::heavy : VehicleType::car;
            v.length = v.type == VehicleType::heavy ? 12.0 : 4.5;
            double desired = rng.normal(cfg.speed_mean * scen.speed_factor, cfg.speed_sd);
            if (v.type == VehicleType::heavy) desired *= 0.85;
            v.v_des = std::clamp(desired, 12.0, 40.0);
            pending.push_back(v);
            next_arrival += rng.exponential(lambda);
        }

        // Entries, oldest first; blocked vehicles wait at the zone entrance.
        for (std::size_t attempt = 0; attempt < pending.size();) {
            Veh v = pending[attempt];
            v.lane = 1 + static_cast<int>(rng.uniform_int(
                static_cast<std::uint64_t>(scen.n_lanes)));
            const Veh* lead = nullptr;
            for (const Veh& other : vehicles) {
                if (other.lane != v.lane) continue;
                if (lead == nullptr || other.pos < lead->pos) lead = &other;
            }
            double speed = v.v_des;
            if (lead != nullptr) speed = std::min(speed, lead->speed + 1.0);
            double clearance = lead == nullptr ? std::numeric_limits<double>::infinity()
                                               : lead->pos - lead->length - scen.zone_start;
            if (clearance >= 4.0 + 0.6 * speed) {
                v.pos = scen.zone_start;
                v.speed = speed;
                vehicles.push_back(v);
                pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(attempt));
            } else {
                ++attempt;
            }
        }
        if (pending.size() > 150) {
            throw ValidationError("infeasible arrival density: zone entry is saturated in event '" +
                                  scen.event_id + "'");
        }

        LaneOrder order(vehicles, scen.n_lanes);

        // Lane-change state machine.
        for (std::size_t i = 0; i < vehicles.size(); ++i) {
            Veh& v = vehicles[i];
            if (v.lc_steps > 0) {
                const Veh* lead = order.lead(v.target_lane, v.pos, v.id);
                const Veh* lag = order.lag(v.target_lane, v.pos, v.id);
                double lead_gap = lead == nullptr ? std::numeric_limits<double>::infinity()
                                                  : gap_behind(*lead, v.pos);
                double lag_gap = lag == nullptr ? std::numeric_limits<double>::infinity()
                                                : v.pos - v.length - lag->pos;
                if (lead_gap <= kMinSeparation || lag_gap <= kMinSeparation) {
                    v.lc_steps = 0;
                    v.lead_id.reset();
                    v.lag_id.reset();
                    continue;
                }
                v.lead_id = lead == nullptr ? std::nullopt : std::optional(lead->id);
                v.lag_id = lag == nullptr ? std::nullopt : std::optional(lag->id);
                if (--v.lc_steps == 0) {
                    int from = v.lane;
                    v.lane = v.target_lane;
                    v.lead_id.reset();
                    v.lag_id.reset();
                    order.move(i, from, v.lane);
                }
                continue;
            }
            if (scen.n_lanes < 2) continue;
            if (rng.uniform() >= p_lc) continue;
            int target = v.lane;
            bool left_ok = v.lane > 1;
            bool right_ok = v.lane < scen.n_lanes;
            if (left_ok && right_ok) {
                target = rng.uniform() < 0.5 ? v.lane - 1 : v.lane + 1;
            } else {
                target = left_ok ? v.lane - 1 : v.lane + 1;
            }
            double margin = rng.uniform(0.08, 1.0);
            const Veh* lead = order.lead(target, v.pos, v.id);
            const Veh* lag = order.lag(target, v.pos, v.id);
            bool lead_ok = lead == nullptr ||
                           gap_behind(*lead, v.pos) >= std::max(0.5, margin * (1.5 + 0.35 * v.speed));
            bool lag_ok = lag == nullptr ||
                          v.pos - v.length - lag->pos >=
                              std::max(0.5, margin * (1.5 + 0.35 * lag->speed));
            if (lead_ok && lag_ok) {
                v.lc_steps = 3;
                v.target_lane = target;
                v.lead_id = lead == nullptr ? std::nullopt : std::optional(lead->id);
                v.lag_id = lag == nullptr ? std::nullopt : std::optional(lag->id);
            }
        }

        // Acceleration choice.
        for (Veh& v : vehicles) {
            double a = std::min(0.45 * (v.v_des - v.speed), 2.2);
            const Veh* lead = order.lead(v.lane, v.pos, v.id);
            if (lead != nullptr && gap_behind(*lead, v.pos) <= kLookahead) {
                a = std::min(a, following_accel(v, *lead, cfg.cf_sensitivity));
            }
            if (v.lc_steps > 0) {
                const Veh* merge_lead = order.lead(v.target_lane, v.pos, v.id);
                if (merge_lead != nullptr && gap_behind(*merge_lead, v.pos) <= kLookahead) {
                    a = std::min(a, following_accel(v, *merge_lead, cfg.cf_sensitivity));
                }
            }
            if (v.pulse_steps > 0) {
                a = std::min(a, v.pulse_accel);
                --v.pulse_steps;
            } else if (rng.uniform() < 0.004 * cfg.cf_sensitivity) {
                v.pulse_accel = -rng.uniform(2.5, 6.5);
                v.pulse_steps = rng.uniform() < 0.35 ? 2 : 1;
                a = std::min(a, v.pulse_accel);
                --v.pulse_steps;
            }
            a += rng.normal(0.0, 0.2);
            a = std::clamp(a, -8.5, 2.5);
            if (v.speed + a < 0) a = -v.speed;
            if (v.speed + a > 44.0) a = 44.0 - v.speed;
            v.accel = a;
        }

        // Emit this step's in-zone observations.
        for (const Veh& v : vehicles) {
            if (v.pos < scen.zone_start || v.pos >= scen.zone_end) continue;
            const Veh* lead = order.lead(v.lane, v.pos, v.id);
            VehicleObservation o;
            o.event_id = scen.event_id;
            o.replication = replication;
            o.vehicle_id = v.id;
            o.time = t;
            o.lane = v.lane;
            o.position = v.pos;
            o.speed = v.speed;
            o.accel = v.accel;
            o.length = v.length;
            o.vehicle_type = v.type;
            if (lead != nullptr && gap_behind(*lead, v.pos) <= kLookahead) o.leader_id = lead->id;
            if (v.lc_steps > 0) {
                o.lc_state = LcState::changing;
                o.lead_neighbor_id = v.lead_id;
                o.lag_neighbor_id = v.lag_id;
            }
            rows.push_back(std::move(o));
        }

        // Advance kinematics, then enforce separation front to back.
        for (Veh& v : vehicles) {
            v.pos += v.speed + 0.5 * v.accel;
            v.speed = std::max(0.0, v.speed + v.accel);
        }
        for (int lane = 1; lane <= scen.n_lanes; ++lane) {
            auto members = order.lane(lane);
            for (std::size_t j = members.size(); j-- > 1;) {
                const Veh& lead = vehicles[members[j]];
                Veh& follower = vehicles[members[j - 1]];
                double cap = lead.pos - lead.length - kMinSeparation;
                if (follower.pos > cap) {
                    follower.pos = cap;
                    follower.speed = std::min(follower.speed, lead.speed);
                }
            }
        }
        std::erase_if(vehicles, [&](const Veh& v) { return v.pos >= scen.zone_end; });
    }
    return rows;
}

GeneratedTrajectories generate_trajectories(const ScenarioConfig& cfg) {
    GeneratedTrajectories out;
    out.sections = scenario_sections(cfg);
    for (int e = 0; e < cfg.n_events; ++e) {
        for (int r = 0; r < cfg.replications; ++r) {
            std::vector<VehicleObservation> rows = simulate_event(cfg, e, r);
            out.observations.insert(out.observations.end(),
                                    std::make_move_iterator(rows.begin()),
                                    std::make_move_iterator(rows.end()));
        }
    }
    return out;
}

Outcome sample_outcome(const std::array<double, 4>& probs, Rng& rng) {
    double u = rng.uniform();
    double cum = 0;
    Outcome last = Outcome::na;
    for (Outcome k : kAllOutcomes) {
        double p = probs[static_cast<std::size_t>(k)];
        if (p <= 0) continue;
        cum += p;
        last = k;
        if (u < cum) return k;
    }
    return last;
}

std::array<double, 4> pooled_cell_probabilities(const std::vector<VehicleObservation>& rows,
                                                const EventRecord& event,
                                                const std::vector<RoadSection>& sections,
                                                const ModelParameters& params,
                                                const ScalingConfig& scaling,
                                                const FrictionConfig& friction) {
    std::vector<VehicleObservation> sorted = rows;
    std::sort(sorted.begin(), sorted.end(),
              [](const VehicleObservation& a, const VehicleObservation& b) {
                  return std::tie(a.replication, a.vehicle_id, a.time) <
                         std::tie(b.replication, b.vehicle_id, b.time);
              });
    auto cells = build_cells(sorted, event);
    std::vector<std::array<double, 4>> member_probs;
    std::size_t begin = 0;
    while (begin < sorted.size()) {
        std::size_t end = begin;
        while (end < sorted.size() && sorted[end].replication == sorted[begin].replication) ++end;
        std::span<const VehicleObservation> rep_span(sorted.data() + begin, end - begin);
        EventIndex index(rep_span);
        for (const auto& [key, members] : cells) {
            if (key.replication != sorted[begin].replication) continue;
            for (std::size_t m : members) {
                FeatureVector f =
                    extract_features(sorted[m], index, sections, event.surface, friction);
                ScoreVector s = score_observation(f, params, scaling);
                member_probs.push_back(nl_probabilities(s, params.mu));
            }
        }
        begin = end;
    }
    return aggregate_cell(member_probs);
}

std::vector<EventRecord> label_outcomes(const std::vector<VehicleObservation>& trajectories,
                                        const ModelParameters& true_params,
                                        const ScalingConfig& scaling,
                                        const FrictionConfig& friction,
                                        const ScenarioConfig& cfg) {
    std::vector<RoadSection> sections = scenario_sections(cfg);
    std::vector<VehicleObservation> sorted = trajectories;
    std::sort(sorted.begin(), sorted.end(),
              [](const VehicleObservation& a, const VehicleObservation& b) {
                  return std::tie(a.event_id, a.replication, a.vehicle_id, a.time) <
                         std::tie(b.event_id, b.replication, b.vehicle_id, b.time);
              });
    std::vector<EventRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.n_events));
    std::size_t begin = 0;
    for (int e = 0; e < cfg.n_events; ++e) {
        EventScenario scen = event_scenario(cfg, e);
        EventRecord record;
        record.event_id = scen.event_id;
        record.surface = scen.surface;
        record.anchor_position = scen.anchor_position;
        record.anchor_time = scen.anchor_time;
        record.cell_length = cfg.cell_length;
        record.cell_duration = cfg.cell_duration;

        std::size_t end = begin;
        while (end < sorted.size() && sorted[end].event_id == scen.event_id) ++end;
        std::vector<VehicleObservation> event_rows(sorted.begin() + begin, sorted.begin() + end);
        begin = end;
        std::array<double, 4> probs = pooled_cell_probabilities(event_rows, record, sections,
                                                                true_params, scaling, friction);
        Rng rng(Rng::stream(cfg.seed, static_cast<std::uint64_t>(e), kStreamLabel));
        record.outcome = sample_outcome(probs, rng);
        records.push_back(std::move(record));
    }
    return records;
}

ChoiceBasedSample choice_based_sample(const std::vector<EventRecord>& events,
                                      const std::array<std::int64_t, 4>& target_counts,
                                      std::uint64_t seed) {
    ChoiceBasedSample out;
    std::array<std::vector<std::size_t>, 4> by_class;
    for (std::size_t i = 0; i < events.size(); ++i) {
        std::size_t k = static_cast<std::size_t>(events[i].outcome);
        out.population_counts[k] += 1;
        by_class[k].push_back(i);
    }
    for (Outcome k : kAllOutcomes) {
        std::size_t ki = static_cast<std::size_t>(k);
        std::int64_t target = target_counts[ki];
        if (target < 0 || target > out.population_counts[ki]) {
            throw ValidationError("requested sample of " + format_int(target) + " exceeds " +
                                  format_int(out.population_counts[ki]) +
                                  " available events for outcome " + outcome_name(k));
        }
        Rng rng(Rng::stream(seed, static_cast<std::uint64_t>(ki), kStreamSampling));
        rng.shuffle(by_class[ki]);
        by_class[ki].resize(static_cast<std::size_t>(target));
        out.sample_counts[ki] = target;
    }
    out.weights = sampling_weights(out.population_counts, out.sample_counts);
    std::vector<std::size_t> chosen;
    for (const auto& group : by_class) {
        chosen.insert(chosen.end(), group.begin(), group.end());
    }
    std::sort(chosen.begin(), chosen.end());
    out.events.reserve(chosen.size());
    for (std::size_t i : chosen) out.events.push_back(events[i]);
    return out;
}

ModelParameters demo_parameters() {
    ModelParameters p;
    p.beta_re = {-7.2, 2.4, -1.8, 1.7};
    p.beta_lc = {-5.6, -0.5, -6.0, -0.5, -7.0};
    p.beta_ror = {-7.2, 0.15, 0.05};
    p.mu = 1.6;
    return p;
}

}  // namespace crashprob
