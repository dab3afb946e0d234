#pragma once

#include <optional>
#include <utility>

#include "crashprob/types.hpp"

namespace crashprob {

/// Tire-road friction model: linear in speed between the 0 and vmax
/// endpoints, clamped above vmax.
struct FrictionConfig {
    double dry_long_at_0 = 0.85;
    double dry_long_at_vmax = 0.75;
    double wet_long_at_0 = 0.70;
    double wet_long_at_vmax = 0.20;
    double vmax = 130.0 / 3.6;  // m/s
    double lateral_factor = 1.10;
    double heavy_dry_factor = 0.70;
    double g = 9.81;
    double lc_peak_factor = 0.5;  // lateral add-on during a lane change, in g

    bool operator==(const FrictionConfig&) const = default;
};

/// Bumper-to-bumper distance from the follower to its leader. Both
/// positions are front-bumper chainage.
double leader_gap(const VehicleObservation& follower, const VehicleObservation& leader);

/// Deceleration rate required to avoid a crash: closing speed squared over
/// twice the gap; 0 when the pair is not closing.
double drac(const VehicleObservation& follower, const VehicleObservation& leader);

/// Time to collision; absent when the pair is not closing.
std::optional<double> ttc(const VehicleObservation& follower, const VehicleObservation& leader);

/// Relative needed deceleration ratio, split into (nonnegative, nonpositive)
/// parts of (drac + accel difference) / ttc. Both zero when ttc is absent.
std::pair<double, double> ra_need(const VehicleObservation& follower,
                                  const VehicleObservation& leader);

double mu_long(double speed, VehicleType vehicle_type, Surface surface,
               const FrictionConfig& cfg);

/// Excess of the needed deceleration over the friction-limited maximum,
/// relative to ttc; 0 when ttc is absent.
double ra_lim(const VehicleObservation& follower, const VehicleObservation& leader,
              const RoadSection& section, Surface surface, const FrictionConfig& cfg);

/// Relative gap variation dv/gap split into (nonnegative, nonpositive).
std::pair<double, double> relative_gap(double gap, double dv);

/// Curve demand v^2/R (0 on straights) plus the lane-change peak add-on.
double lateral_acceleration(const VehicleObservation& obs, const RoadSection& section,
                            const FrictionConfig& cfg);

/// (mu_lat + superelevation) * g with mu_lat = lateral_factor * mu_long.
double critical_lateral_acceleration(const VehicleObservation& obs, const RoadSection& section,
                                     Surface surface, const FrictionConfig& cfg);

/// Split of a_lat - a_crit into (nonnegative, nonpositive) parts.
std::pair<double, double> delta_a_lat(double a_lat, double a_crit);

}  // namespace crashprob
