#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crashprob {

enum class Outcome : int { na = 0, re = 1, lc = 2, ror = 3 };
inline constexpr int kNumOutcomes = 4;
inline constexpr std::array<Outcome, 4> kAllOutcomes{Outcome::na, Outcome::re, Outcome::lc,
                                                     Outcome::ror};

const char* outcome_name(Outcome k);
Outcome parse_outcome(const std::string& name);

enum class Surface : int { dry = 0, wet = 1 };
const char* surface_name(Surface s);
Surface parse_surface(const std::string& name);

enum class VehicleType : int { car = 0, heavy = 1 };
enum class LcState : int { none = 0, changing = 1 };

/// One vehicle's kinematic state at one timestamp. Positions are front-bumper
/// longitudinal chainage; speed/accel are signed SI values.
struct VehicleObservation {
    std::string event_id;
    int replication = 0;
    std::int64_t vehicle_id = 0;
    double time = 0;
    int lane = 0;
    double position = 0;
    double speed = 0;
    double accel = 0;
    double length = 0;
    VehicleType vehicle_type = VehicleType::car;
    std::optional<std::int64_t> leader_id;
    LcState lc_state = LcState::none;
    std::optional<std::int64_t> lead_neighbor_id;
    std::optional<std::int64_t> lag_neighbor_id;

    bool operator==(const VehicleObservation&) const = default;
};

/// Homogeneous geometry slice. Absent radius means a straight section.
struct RoadSection {
    std::string section_id;
    double start = 0;
    double end = 0;
    int n_lanes = 1;
    std::optional<double> radius;
    double superelevation = 0;
    double grade = 0;

    bool operator==(const RoadSection&) const = default;
};

/// An observed outcome anchored in space and time. The cell covers
/// (anchor_position - cell_length, anchor_position] x
/// (anchor_time - cell_duration, anchor_time].
struct EventRecord {
    std::string event_id;
    Outcome outcome = Outcome::na;
    Surface surface = Surface::dry;
    double anchor_position = 0;
    double anchor_time = 0;
    double cell_length = 50.0;
    double cell_duration = 300.0;

    bool operator==(const EventRecord&) const = default;
};

/// Surrogate-measure inputs for one observation, in raw SI units unless
/// scaled explicitly. Unavailable alternatives carry all-zero features.
struct FeatureVector {
    double ra_need_pos = 0;
    double ra_need_neg = 0;
    double ra_lim = 0;
    double rg_lag_pos = 0;
    double rg_lag_neg = 0;
    double rg_lead_pos = 0;
    double rg_lead_neg = 0;
    double dalat_pos = 0;
    double dalat_neg = 0;
    bool avail_re = false;
    bool avail_lc = false;
    bool avail_ror = false;

    bool operator==(const FeatureVector&) const = default;
};

inline constexpr int kNumCoefficients = 12;  // 4 RE + 5 LC + 3 ROR

/// Coefficient names in packed order, e.g. "re.b0" .. "ror.b2".
const char* coefficient_name(int index);

/// Coefficients with free_mask[i] false are pinned: score evaluation uses
/// their stored value and the optimizer never moves them.
struct ModelParameters {
    std::array<double, 4> beta_re{};   // constant, RA+need, RA-need, RAlim
    std::array<double, 5> beta_lc{};   // constant, RG+lag, RG-lag, RG+lead, RG-lead
    std::array<double, 3> beta_ror{};  // constant, dA+lat, dA-lat
    double mu = 1.0;
    std::array<bool, kNumCoefficients> free_mask = all_free();

    static constexpr std::array<bool, kNumCoefficients> all_free() {
        std::array<bool, kNumCoefficients> m{};
        m.fill(true);
        return m;
    }

    double coefficient(int index) const;
    void set_coefficient(int index, double value);
    int n_free_coefficients() const;

    bool operator==(const ModelParameters&) const = default;
};

/// Multiplicative feature scaling applied before score evaluation. Stored
/// with the model so saved coefficients are self-describing.
struct ScalingConfig {
    double rg_scale = 0.1;      // relative gap variation, per 10 1/s
    double dalat_scale = 10.0;  // lateral excess, per 0.1 m/s^2
    bool operator==(const ScalingConfig&) const = default;
};

struct CellKey {
    std::string event_id;
    int replication = 0;
    int s_index = 0;
    int p_index = 0;

    auto operator<=>(const CellKey&) const = default;
    std::string label() const;
};

/// One space-time aggregation unit entering the likelihood.
struct CellObservation {
    CellKey key;
    std::array<double, 4> probs{};
    std::int64_t n_obs = 0;
    Outcome outcome = Outcome::na;
    Outcome weight_class = Outcome::na;
};

/// Groups observations into the event's anchored cell. Offsets are
/// floor((anchor - coordinate) / width); only the (0, 0) cell lies inside
/// the event window, everything else is dropped.
std::vector<std::pair<CellKey, std::vector<std::size_t>>> build_cells(
    std::span<const VehicleObservation> observations, const EventRecord& event);

}  // namespace crashprob
