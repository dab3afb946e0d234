#pragma once

#include <array>

#include "crashprob/types.hpp"

namespace crashprob {

/// Systematic safety scores for one observation. The no-accident score is
/// the identification normalization and stays 0; unavailable alternatives
/// carry no score and are excluded from probability computation.
struct ScoreVector {
    double v_na = 0.0;
    double v_re = 0.0;
    double v_lc = 0.0;
    double v_ror = 0.0;
    std::array<bool, 4> avail{true, false, false, false};

    double value(Outcome k) const {
        switch (k) {
            case Outcome::na: return v_na;
            case Outcome::re: return v_re;
            case Outcome::lc: return v_lc;
            case Outcome::ror: return v_ror;
        }
        return 0.0;
    }
    bool available(Outcome k) const { return avail[static_cast<std::size_t>(k)]; }
};

struct Availability {
    bool re = false;
    bool lc = false;
    bool ror = false;
};

/// Outcome availability for one observation: RE in car-following, LC while
/// changing lanes on a multilane section, ROR on curves or during a lane
/// change. NA is always available.
Availability availability(const VehicleObservation& obs, const RoadSection& section);

/// Applies the model's feature scaling; availability flags pass through.
FeatureVector scale_features(const FeatureVector& f, const ScalingConfig& scaling);

/// Linear scores over scaled features, pinned coefficients included.
double score_re(const FeatureVector& scaled, const ModelParameters& p);
double score_lc(const FeatureVector& scaled, const ModelParameters& p);
double score_ror(const FeatureVector& scaled, const ModelParameters& p);

/// Full scoring pipeline for one raw feature vector: scale, then evaluate
/// each available alternative.
ScoreVector score_observation(const FeatureVector& raw, const ModelParameters& p,
                              const ScalingConfig& scaling);

}  // namespace crashprob
