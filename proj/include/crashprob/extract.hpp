#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "crashprob/dataset.hpp"
#include "crashprob/measures.hpp"
#include "crashprob/nested_logit.hpp"
#include "crashprob/types.hpp"

namespace crashprob {

/// Neighbor lookup over one event's observations, keyed by
/// (replication, time, vehicle_id).
class EventIndex {
  public:
    explicit EventIndex(std::span<const VehicleObservation> observations);

    const VehicleObservation* find(int replication, double time, std::int64_t vehicle_id) const;

  private:
    struct Key {
        int replication;
        std::uint64_t time_bits;
        std::int64_t vehicle_id;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const;
    };
    std::unordered_map<Key, const VehicleObservation*, KeyHash> map_;
};

/// Surrogate measures for one observation; neighbor references are resolved
/// through the index and must exist. Features of unavailable alternatives
/// stay zero.
FeatureVector extract_features(const VehicleObservation& obs, const EventIndex& index,
                               const std::vector<RoadSection>& sections, Surface surface,
                               const FrictionConfig& friction);

/// One feature row of the scored dataset: a cell member with its identity.
struct FeatureRow {
    std::string event_id;
    int replication = 0;
    std::int64_t vehicle_id = 0;
    double time = 0;
    int s_index = 0;
    int p_index = 0;
    FeatureVector features;
};

/// Cells with features plus their event records, aligned by index.
struct CellDataset {
    std::vector<CellFeatures> cells;
    std::vector<const EventRecord*> events;
    std::vector<FeatureRow> rows;  // member-level rows in output order
};

/// Full extraction pipeline: for every event, resolve neighbors over all of
/// the event's observations, window members into the anchored cell and
/// compute their features.
CellDataset build_cell_dataset(const Dataset& dataset, const FrictionConfig& friction);

std::string serialize_features(const std::vector<FeatureRow>& rows);

/// Reassembles cells from a features file written by serialize_features,
/// joining outcomes from the event records.
CellDataset parse_features(const std::string& path, const std::string& content,
                           const std::vector<EventRecord>& events);
CellDataset load_features(const std::string& path, const std::vector<EventRecord>& events);

}  // namespace crashprob
