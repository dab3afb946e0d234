#include "crashprob/scores.hpp"

namespace crashprob {

Availability availability(const VehicleObservation& obs, const RoadSection& section) {
    Availability a;
    a.re = obs.leader_id.has_value();
    a.lc = section.n_lanes >= 2 && obs.lc_state == LcState::changing;
    a.ror = section.radius.has_value() || obs.lc_state == LcState::changing;
    return a;
}

FeatureVector scale_features(const FeatureVector& f, const ScalingConfig& scaling) {
    FeatureVector s = f;
    s.rg_lag_pos *= scaling.rg_scale;
    s.rg_lag_neg *= scaling.rg_scale;
    s.rg_lead_pos *= scaling.rg_scale;
    s.rg_lead_neg *= scaling.rg_scale;
    s.dalat_pos *= scaling.dalat_scale;
    s.dalat_neg *= scaling.dalat_scale;
    return s;
}

double score_re(const FeatureVector& f, const ModelParameters& p) {
    return p.beta_re[0] + p.beta_re[1] * f.ra_need_pos + p.beta_re[2] * f.ra_need_neg +
           p.beta_re[3] * f.ra_lim;
}

double score_lc(const FeatureVector& f, const ModelParameters& p) {
    return p.beta_lc[0] + p.beta_lc[1] * f.rg_lag_pos + p.beta_lc[2] * f.rg_lag_neg +
           p.beta_lc[3] * f.rg_lead_pos + p.beta_lc[4] * f.rg_lead_neg;
}

double score_ror(const FeatureVector& f, const ModelParameters& p) {
    return p.beta_ror[0] + p.beta_ror[1] * f.dalat_pos + p.beta_ror[2] * f.dalat_neg;
}

ScoreVector score_observation(const FeatureVector& raw, const ModelParameters& p,
                              const ScalingConfig& scaling) {
    FeatureVector f = scale_features(raw, scaling);
    ScoreVector v;
    v.avail = {true, raw.avail_re, raw.avail_lc, raw.avail_ror};
    if (raw.avail_re) v.v_re = score_re(f, p);
    if (raw.avail_lc) v.v_lc = score_lc(f, p);
    if (raw.avail_ror) v.v_ror = score_ror(f, p);
    return v;
}

}  // namespace crashprob
