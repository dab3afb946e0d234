#include <doctest.h>

#include "crashprob/scores.hpp"
#include "support/builders.hpp"

using namespace crashprob;
using testing::curve;
using testing::obs;
using testing::straight;

namespace {

ModelParameters demo() {
    ModelParameters p;
    p.beta_re = {-13.09, 2.917, -1.92, 2.03};
    p.beta_lc = {-7.08, -0.011, -0.568, -0.311, -0.628};
    p.beta_ror = {-12.45, 0.023, 1.775};
    p.mu = 1.622;
    return p;
}

}  // namespace

TEST_CASE("feature scaling multiplies gap-variation and lateral-excess terms") {
    FeatureVector f;
    f.ra_need_pos = 0.8;
    f.ra_lim = 0.576;
    f.rg_lag_pos = 2.0;
    f.rg_lag_neg = -20.0;
    f.rg_lead_neg = -1.5;
    f.dalat_pos = 1.0;
    f.dalat_neg = -0.4;
    f.avail_re = true;
    FeatureVector s = scale_features(f, ScalingConfig{});
    CHECK(s.ra_need_pos == 0.8);
    CHECK(s.ra_lim == 0.576);
    CHECK(s.rg_lag_pos == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(s.rg_lag_neg == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(s.rg_lead_neg == doctest::Approx(-0.15).epsilon(1e-14));
    CHECK(s.dalat_pos == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(s.dalat_neg == doctest::Approx(-4.0).epsilon(1e-14));
    CHECK(s.avail_re);
    CHECK_FALSE(s.avail_lc);
}

TEST_CASE("linear scores on already-scaled features") {
    ModelParameters p = demo();
    FeatureVector scaled;
    scaled.ra_need_pos = 0.8;
    scaled.ra_lim = 0.576;
    CHECK(score_re(scaled, p) == doctest::Approx(-9.587119999999999).epsilon(1e-14));

    FeatureVector lag;
    lag.rg_lag_neg = -2.0;
    CHECK(score_lc(lag, p) == doctest::Approx(-5.944).epsilon(1e-14));

    FeatureVector lat;
    lat.dalat_pos = 10.0;
    CHECK(score_ror(lat, p) == doctest::Approx(-12.219999999999999).epsilon(1e-14));
}

TEST_CASE("pinned coefficients keep their stored value in scores") {
    ModelParameters p = demo();
    FeatureVector scaled;
    scaled.ra_need_pos = 0.8;
    double before = score_re(scaled, p);
    p.free_mask[1] = false;
    CHECK(score_re(scaled, p) == before);
    CHECK(p.n_free_coefficients() == 11);
}

TEST_CASE("score_observation scales, applies availability and keeps v_na at 0") {
    ModelParameters p = demo();
    FeatureVector raw;
    raw.rg_lag_neg = -20.0;  // scaled to -2
    raw.dalat_pos = 1.0;     // scaled to 10
    raw.avail_lc = true;

    ScoreVector v = score_observation(raw, p, ScalingConfig{});
    CHECK(v.v_na == 0.0);
    CHECK(v.v_lc == doctest::Approx(-5.944).epsilon(1e-14));
    CHECK(v.v_re == 0.0);   // unavailable alternatives carry no score
    CHECK(v.v_ror == 0.0);
    CHECK(v.available(Outcome::na));
    CHECK(v.available(Outcome::lc));
    CHECK_FALSE(v.available(Outcome::re));
    CHECK_FALSE(v.available(Outcome::ror));

    raw.avail_re = true;
    raw.avail_ror = true;
    ScoreVector all = score_observation(raw, p, ScalingConfig{});
    CHECK(all.v_lc == v.v_lc);
    CHECK(all.v_ror == doctest::Approx(-12.219999999999999).epsilon(1e-14));
}

TEST_CASE("rear-end availability requires a leader") {
    VehicleObservation o = obs(1, 100, 20);
    RoadSection s = straight();
    CHECK_FALSE(availability(o, s).re);
    o.leader_id = 7;
    CHECK(availability(o, s).re);
}

TEST_CASE("lane-change availability requires an ongoing change on a multilane section") {
    VehicleObservation o = obs(1, 100, 20);
    RoadSection two_lanes = straight();
    CHECK_FALSE(availability(o, two_lanes).lc);
    o.lc_state = LcState::changing;
    CHECK(availability(o, two_lanes).lc);
    RoadSection one_lane = straight(0, 1000, 1);
    CHECK_FALSE(availability(o, one_lane).lc);
}

TEST_CASE("run-off-road availability on curves or during a lane change") {
    VehicleObservation o = obs(1, 100, 20);
    CHECK_FALSE(availability(o, straight()).ror);
    CHECK(availability(o, curve(400)).ror);
    o.lc_state = LcState::changing;
    CHECK(availability(o, straight()).ror);
    CHECK(availability(o, curve(400)).ror);
}
