#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "crashprob/measures.hpp"
#include "crashprob/nested_logit.hpp"
#include "crashprob/rng.hpp"
#include "crashprob/types.hpp"

namespace crashprob {

/// Configuration of the synthetic corridor world. Every event is an
/// independent mini-simulation on one zone of the corridor; all randomness
/// derives from (seed, event index, replication), so any event can be
/// regenerated in isolation.
struct ScenarioConfig {
    int n_events = 240;
    int replications = 1;
    double duration = 345.0;        // seconds simulated per event
    std::vector<RoadSection> sections;  // empty: build the default corridor
    double arrival_rate = 0.22;     // vehicles per second entering the zone
    double speed_mean = 27.0;       // desired speed, m/s
    double speed_sd = 2.5;
    double cf_sensitivity = 1.0;    // scales braking response and conflict rate
    double lc_rate = 2.0;           // lane-change attempts per vehicle per minute
    double heavy_share = 0.10;
    double wet_fraction = 0.35;
    double cell_length = 50.0;
    double cell_duration = 300.0;
    std::uint64_t seed = 1;
};

/// The configured section layout, or the built-in multi-zone corridor when
/// none is given. Deterministic in (seed, n_events).
std::vector<RoadSection> scenario_sections(const ScenarioConfig& cfg);

/// Deterministic per-event draw of surface, anchor and traffic modifiers.
struct EventScenario {
    std::string event_id;
    Surface surface = Surface::dry;
    double anchor_position = 0;
    double anchor_time = 0;
    double zone_start = 0;
    double zone_end = 0;
    int n_lanes = 1;
    double speed_factor = 1.0;
    double arrival_factor = 1.0;
};

EventScenario event_scenario(const ScenarioConfig& cfg, int event_index);

/// Simulates one event replication at 1 Hz: bounded acceleration toward the
/// desired speed, linear car following, random brake pulses, gap-accepted
/// lane changes with lead/lag neighbors resolved, and a hard no-overlap
/// guard. Returns all in-zone observations up to the anchor time.
std::vector<VehicleObservation> simulate_event(const ScenarioConfig& cfg, int event_index,
                                               int replication);

struct GeneratedTrajectories {
    std::vector<VehicleObservation> observations;
    std::vector<RoadSection> sections;
};

GeneratedTrajectories generate_trajectories(const ScenarioConfig& cfg);

/// Draws one outcome from a cell probability vector.
Outcome sample_outcome(const std::array<double, 4>& probs, Rng& rng);

/// Mean member probabilities of the event's cell, pooled over replications.
/// `rows` holds one event's observations in any order.
std::array<double, 4> pooled_cell_probabilities(const std::vector<VehicleObservation>& rows,
                                                const EventRecord& event,
                                                const std::vector<RoadSection>& sections,
                                                const ModelParameters& params,
                                                const ScalingConfig& scaling,
                                                const FrictionConfig& friction);

/// Labels every event by sampling from the model's own pooled cell
/// probabilities at `true_params`, yielding a well-specified estimation
/// problem. Returns records ordered by event index.
std::vector<EventRecord> label_outcomes(const std::vector<VehicleObservation>& trajectories,
                                        const ModelParameters& true_params,
                                        const ScalingConfig& scaling,
                                        const FrictionConfig& friction,
                                        const ScenarioConfig& cfg);

/// Uniform without-replacement sample within each outcome class, plus the
/// matching correction weights.
struct ChoiceBasedSample {
    std::vector<EventRecord> events;
    SamplingWeights weights;
    std::array<std::int64_t, 4> population_counts{};
    std::array<std::int64_t, 4> sample_counts{};
};

ChoiceBasedSample choice_based_sample(const std::vector<EventRecord>& events,
                                      const std::array<std::int64_t, 4>& target_counts,
                                      std::uint64_t seed);

/// Ground-truth parameters used by the command-line demo.
ModelParameters demo_parameters();

}  // namespace crashprob
