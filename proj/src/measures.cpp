#include "crashprob/measures.hpp"

#include <algorithm>
#include <cmath>

#include "crashprob/csv.hpp"

namespace crashprob {

namespace {

[[noreturn]] void overlap_error(const VehicleObservation& follower, double gap) {
    throw ValidationError("overlap/negative gap (" + format_double(gap) + " m) behind vehicle " +
                          format_int(follower.vehicle_id) + " in event '" + follower.event_id +
                          "' at t=" + format_double(follower.time));
}

}  // namespace

double leader_gap(const VehicleObservation& follower, const VehicleObservation& leader) {
    return leader.position - follower.position - leader.length;
}

double drac(const VehicleObservation& follower, const VehicleObservation& leader) {
    double gap = leader_gap(follower, leader);
    if (gap <= 0) overlap_error(follower, gap);
    double closing = follower.speed - leader.speed;
    if (closing <= 0) return 0.0;
    return closing * closing / (2.0 * gap);
}

std::optional<double> ttc(const VehicleObservation& follower, const VehicleObservation& leader) {
    double gap = leader_gap(follower, leader);
    if (gap <= 0) overlap_error(follower, gap);
    double closing = follower.speed - leader.speed;
    if (closing <= 0) return std::nullopt;
    return gap / closing;
}

std::pair<double, double> ra_need(const VehicleObservation& follower,
                                  const VehicleObservation& leader) {
    std::optional<double> t = ttc(follower, leader);
    if (!t) return {0.0, 0.0};
    double da = drac(follower, leader) + (follower.accel - leader.accel);
    return {std::max(da, 0.0) / *t, std::min(da, 0.0) / *t};
}

double mu_long(double speed, VehicleType vehicle_type, Surface surface,
               const FrictionConfig& cfg) {
    double at0 = surface == Surface::dry ? cfg.dry_long_at_0 : cfg.wet_long_at_0;
    double atv = surface == Surface::dry ? cfg.dry_long_at_vmax : cfg.wet_long_at_vmax;
    double frac = std::min(std::max(speed, 0.0), cfg.vmax) / cfg.vmax;
    double mu = at0 + (atv - at0) * frac;
    if (vehicle_type == VehicleType::heavy && surface == Surface::dry) {
        mu *= cfg.heavy_dry_factor;
    }
    return mu;
}

double ra_lim(const VehicleObservation& follower, const VehicleObservation& leader,
              const RoadSection& section, Surface surface, const FrictionConfig& cfg) {
    std::optional<double> t = ttc(follower, leader);
    if (!t) return 0.0;
    double limit = (mu_long(follower.speed, follower.vehicle_type, surface, cfg) + section.grade) *
                   cfg.g;
    return (drac(follower, leader) - limit) / *t;
}

std::pair<double, double> relative_gap(double gap, double dv) {
    if (gap <= 0) {
        throw ValidationError("overlap/negative gap (" + format_double(gap) +
                              " m) in neighbor pair");
    }
    double rg = dv / gap;
    return {std::max(rg, 0.0), std::min(rg, 0.0)};
}

double lateral_acceleration(const VehicleObservation& obs, const RoadSection& section,
                            const FrictionConfig& cfg) {
    double a = 0.0;
    if (section.radius) a = obs.speed * obs.speed / *section.radius;
    if (obs.lc_state == LcState::changing) a += cfg.lc_peak_factor * cfg.g;
    return a;
}

double critical_lateral_acceleration(const VehicleObservation& obs, const RoadSection& section,
                                     Surface surface, const FrictionConfig& cfg) {
    double mu_lat = cfg.lateral_factor * mu_long(obs.speed, obs.vehicle_type, surface, cfg);
    return (mu_lat + section.superelevation) * cfg.g;
}

std::pair<double, double> delta_a_lat(double a_lat, double a_crit) {
    double d = a_lat - a_crit;
    return {std::max(d, 0.0), std::min(d, 0.0)};
}

}  // namespace crashprob
