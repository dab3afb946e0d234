#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "crashprob/types.hpp"

namespace crashprob {

/// Rows as loaded from one trajectories file, with their source line
/// numbers retained for error reporting. Not yet canonically sorted.
struct TrajectoryFile {
    std::string path;
    std::vector<VehicleObservation> rows;
    std::vector<std::size_t> lines;
};

/// Parses and field-validates trajectories.csv. With speeds_kmh set, the
/// speed column is converted to m/s on ingest.
TrajectoryFile load_trajectories(const std::string& path, bool speeds_kmh = false);
TrajectoryFile parse_trajectories(const std::string& path, const std::string& content,
                                  bool speeds_kmh = false);

/// Parses geometry.csv and checks sections are valid, non-overlapping and
/// contiguous. Returned sections are sorted by start chainage.
std::vector<RoadSection> load_geometry(const std::string& path);
std::vector<RoadSection> parse_geometry(const std::string& path, const std::string& content);

/// Parses events.csv; cell extents come from the run configuration since
/// the file carries only anchor coordinates.
std::vector<EventRecord> load_events(const std::string& path, double cell_length = 50.0,
                                     double cell_duration = 300.0);
std::vector<EventRecord> parse_events(const std::string& path, const std::string& content,
                                      double cell_length = 50.0, double cell_duration = 300.0);

/// Section containing `position` (start inclusive, end exclusive except for
/// the final section). Throws ValidationError naming the position when it
/// falls outside the covered range.
const RoadSection& section_at(const std::vector<RoadSection>& sections, double position);

struct Dataset {
    std::vector<VehicleObservation> observations;  // sorted (event, rep, vehicle, time)
    std::vector<RoadSection> sections;             // sorted by start
    std::vector<EventRecord> events;               // sorted by event_id
};

/// Cross-record validation and canonical ordering: checks leader references
/// (same event/replication/time, strictly greater position), event-record
/// existence and uniqueness, and anchors within geometry. Messages carry
/// file and line of the offending row.
Dataset assemble_dataset(TrajectoryFile trajectories, std::vector<RoadSection> sections,
                         std::vector<EventRecord> events);

std::string serialize_trajectories(const std::vector<VehicleObservation>& observations);
std::string serialize_geometry(const std::vector<RoadSection>& sections);
std::string serialize_events(const std::vector<EventRecord>& events);

}  // namespace crashprob
