#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "crashprob/scores.hpp"
#include "crashprob/types.hpp"

namespace crashprob {

/// Outcome-specific multipliers correcting for choice-based sampling:
/// w_k = population share / sample share.
struct SamplingWeights {
    std::array<double, 4> w{1.0, 1.0, 1.0, 1.0};
    double of(Outcome k) const { return w[static_cast<std::size_t>(k)]; }
};

struct LikelihoodReport {
    double loglik = 0;
    /// Free coefficients in packed order, then d/dmu as the last entry.
    std::vector<double> gradient;
    std::int64_t n_cells = 0;
};

/// One aggregation cell with its member observations' raw features.
struct CellFeatures {
    CellKey key;
    Outcome outcome = Outcome::na;
    std::vector<FeatureVector> members;
};

/// Coefficient indices marked free, in packed order.
std::vector<int> free_coefficient_indices(const ModelParameters& p);

/// Outcome probabilities under the top-normalized nested logit: the three
/// accident types share one nest with scale mu, NA sits alone at the top.
/// Unavailable alternatives get probability 0; with an empty nest, P(NA)=1.
std::array<double, 4> nl_probabilities(const ScoreVector& scores, double mu);

/// Per-outcome arithmetic mean over the member probabilities of one cell.
std::array<double, 4> aggregate_cell(const std::vector<std::array<double, 4>>& member_probs);

SamplingWeights sampling_weights(const std::array<std::int64_t, 4>& population_counts,
                                 const std::array<std::int64_t, 4>& sample_counts);

/// Non-throwing likelihood evaluation for optimizer line searches: a cell
/// whose observed outcome aggregates to zero probability yields
/// loglik = -inf and zero_cell set to that cell.
struct WesmlEvaluation {
    double loglik = 0;
    std::vector<double> gradient;
    std::int64_t n_cells = 0;
    std::int64_t n_obs = 0;
    const CellKey* zero_cell = nullptr;
};

WesmlEvaluation wesml_evaluate(const ModelParameters& params, const ScalingConfig& scaling,
                               const std::vector<CellFeatures>& cells,
                               const SamplingWeights& weights, bool with_gradient);

/// Weighted exogenous-sample log-likelihood over cells,
/// L = sum over cells of w(outcome) * ln P_cell(outcome), with its analytic
/// gradient. Probabilities are recomputed from raw features through scoring,
/// nl_probabilities and aggregate_cell. Throws NumericError naming the cell
/// if an observed outcome has zero aggregated probability.
LikelihoodReport wesml_loglik(const ModelParameters& params, const ScalingConfig& scaling,
                              const std::vector<CellFeatures>& cells,
                              const SamplingWeights& weights);

}  // namespace crashprob
