#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crashprob/nested_logit.hpp"
#include "crashprob/types.hpp"

namespace crashprob {

struct OptimizerConfig {
    int max_iterations = 500;
    double grad_tolerance = 1e-6;     // max-norm of the internal gradient
    double rel_ll_tolerance = 1e-9;   // relative log-likelihood change
    double hessian_step = 1e-4;       // relative central-difference step for SEs
    bool sandwich = false;            // robust covariance instead of inverse Hessian
};

/// Likelihood-ratio fit indices against the zero-coefficient baseline.
double rho_squared(double loglik_initial, double loglik_final);
double rho_squared_adjusted(double loglik_initial, double loglik_final, int n_parameters);

struct EstimationResult {
    ModelParameters params;
    ScalingConfig scaling;
    /// Per free coefficient in packed order, then mu (delta method) last.
    std::vector<double> std_errors;
    std::vector<double> t_stats;
    std::vector<double> p_values;
    bool se_valid = false;
    std::string se_warning;
    double loglik_initial = 0;
    double loglik_final = 0;
    double rho2 = 0;
    double rho2_adjusted = 0;
    std::int64_t n_obs = 0;    // member observations entering the likelihood
    std::int64_t n_cells = 0;
    int n_parameters = 0;      // free coefficients plus the nest scale
    bool converged = false;
    int iterations = 0;
    double grad_max_norm = 0;
};

/// Maximizes the WESML objective by quasi-Newton ascent from all-zero
/// coefficients. The nest scale is estimated as mu = 1 + exp(theta) from
/// theta = 0; the reported initial log-likelihood is evaluated at zero
/// coefficients with mu = 1. `structure` supplies the free/fixed mask.
EstimationResult estimate(const std::vector<CellFeatures>& cells, const SamplingWeights& weights,
                          const ScalingConfig& scaling, const ModelParameters& structure,
                          const OptimizerConfig& cfg = {});

struct CellPrediction {
    CellKey key;
    std::array<double, 4> probs{};
    Outcome predicted = Outcome::na;
    std::int64_t n_obs = 0;
};

/// Per-cell aggregated probabilities and argmax outcome. Ties break toward
/// NA, then RE, LC, ROR.
std::vector<CellPrediction> predict(const std::vector<CellFeatures>& cells,
                                    const ModelParameters& params, const ScalingConfig& scaling);

struct ConfusionReport {
    /// counts[true outcome][predicted outcome]
    std::array<std::array<std::int64_t, 4>, 4> counts{};
    /// P(predicted = k | true = k); absent when the class has no cells.
    std::array<std::optional<double>, 4> accuracy;
    /// P(predicted is any accident | true is any accident).
    std::optional<double> total_accident_accuracy;
    /// P(predicted = k | true = NA) for k = RE, LC, ROR.
    std::array<std::optional<double>, 4> false_alarm;
    std::optional<double> total_false_alarm;
};

ConfusionReport confusion_metrics(const std::vector<Outcome>& predicted,
                                  const std::vector<Outcome>& truth);

struct RatioTable {
    /// ratio[true outcome][k] = mean over true-class cells of P(k)/P(NA),
    /// k = RE, LC, ROR. has_row flags classes present in the data.
    std::array<std::array<double, 3>, 4> ratio{};
    std::array<bool, 4> has_row{};
};

RatioTable probability_ratios(const std::vector<CellPrediction>& predictions,
                              const std::vector<Outcome>& truth);

struct CrossValidationResult {
    std::array<EstimationResult, 2> estimates;  // fitted on fold A, fold B
    std::array<ConfusionReport, 2> reports;     // evaluated on the held-out fold
};

/// Two-fold cross validation on a stratified random split: per outcome
/// class the halves differ in size by at most one cell. Deterministic for a
/// given seed.
CrossValidationResult crossvalidate(const std::vector<CellFeatures>& cells,
                                    const SamplingWeights& weights, const ScalingConfig& scaling,
                                    const ModelParameters& structure, std::uint64_t seed,
                                    const OptimizerConfig& cfg = {});

}  // namespace crashprob
