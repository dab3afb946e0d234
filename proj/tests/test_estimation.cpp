#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "crashprob/csv.hpp"
#include "crashprob/estimation.hpp"
#include "crashprob/rng.hpp"

using namespace crashprob;

namespace {

/// One member per cell, only the rear-end alternative available, all
/// features zero: the likelihood reduces to a binary logit in re.b0.
std::vector<CellFeatures> constant_only_cells(const std::vector<Outcome>& outcomes) {
    std::vector<CellFeatures> cells;
    int i = 0;
    for (Outcome y : outcomes) {
        CellFeatures c;
        c.key = {"E" + format_int(++i), 0, 0, 0};
        c.outcome = y;
        FeatureVector f;
        f.avail_re = true;
        c.members.push_back(f);
        cells.push_back(c);
    }
    return cells;
}

ModelParameters constant_only_structure() {
    ModelParameters structure;
    structure.free_mask.fill(false);
    structure.free_mask[0] = true;  // re.b0
    return structure;
}

/// Cells drawn from a known model with pinned slopes, rich enough to
/// identify the two constants and the nest scale.
std::vector<CellFeatures> simulated_cells(int n_cells, const ModelParameters& truth,
                                          std::uint64_t seed) {
    Rng rng(seed);
    ScalingConfig scaling;
    std::vector<CellFeatures> cells;
    cells.reserve(static_cast<std::size_t>(n_cells));
    for (int i = 0; i < n_cells; ++i) {
        CellFeatures c;
        c.key = {"E" + format_int(i), 0, 0, 0};
        int n_members = 3 + static_cast<int>(rng.uniform_int(4));
        std::vector<std::array<double, 4>> probs;
        for (int m = 0; m < n_members; ++m) {
            FeatureVector f;
            f.avail_re = true;
            f.avail_ror = true;
            f.ra_need_pos = rng.uniform(0.0, 1.2);
            f.dalat_pos = rng.uniform(0.0, 0.08);  // scaled by 10 downstream
            c.members.push_back(f);
            probs.push_back(nl_probabilities(score_observation(f, truth, scaling), truth.mu));
        }
        std::array<double, 4> cell_p = aggregate_cell(probs);
        double u = rng.uniform();
        double cum = 0;
        c.outcome = Outcome::ror;
        for (Outcome k : kAllOutcomes) {
            cum += cell_p[static_cast<std::size_t>(k)];
            if (u < cum) {
                c.outcome = k;
                break;
            }
        }
        cells.push_back(c);
    }
    return cells;
}

}  // namespace

TEST_CASE("likelihood-ratio indices") {
    double rho = rho_squared(-9636.49, -2047.53);
    CHECK(rho == doctest::Approx(0.7875232579497307).epsilon(1e-14));
    double adj = rho_squared_adjusted(-9636.49, -2047.53, 13);
    CHECK(adj == doctest::Approx(0.7861742190361843).epsilon(1e-14));
    CHECK(adj <= rho);

    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        double l0 = -rng.uniform(100.0, 20000.0);
        double l1 = l0 * rng.uniform();  // closer to zero than l0
        int k = static_cast<int>(rng.uniform_int(20));
        CHECK(rho_squared_adjusted(l0, l1, k) <= rho_squared(l0, l1) + 1e-15);
    }
}

TEST_CASE("constant-only estimation recovers the closed-form optimum") {
    auto cells = constant_only_cells({Outcome::re, Outcome::na, Outcome::na});
    EstimationResult res =
        estimate(cells, SamplingWeights{}, ScalingConfig{}, constant_only_structure());

    CHECK(res.converged);
    CHECK(res.n_parameters == 2);  // re.b0 and mu
    CHECK(res.n_cells == 3);
    CHECK(res.n_obs == 3);
    // Optimum: P(RE) = 1/3 per cell, so b0 = ln(1/2).
    CHECK(res.params.beta_re[0] == doctest::Approx(-0.6931471805599453).epsilon(1e-3));
    CHECK(res.loglik_final == doctest::Approx(-1.9095425048844388).epsilon(1e-8));
    CHECK(res.loglik_initial == doctest::Approx(3.0 * std::log(0.5)).epsilon(1e-14));
    CHECK(res.rho2 == doctest::Approx(rho_squared(res.loglik_initial, res.loglik_final)));
    CHECK(res.rho2_adjusted <= res.rho2);

    // Every nest is a singleton, so mu has zero gradient: it stays at its
    // starting value and the Hessian is singular.
    CHECK(res.params.mu == 2.0);
    CHECK_FALSE(res.se_valid);
    CHECK(res.se_warning.find("singular") != std::string::npos);

    // Pinned coefficients stay where the structure put them.
    for (int j = 1; j < kNumCoefficients; ++j) {
        CHECK(res.params.coefficient(j) == 0.0);
    }
}

TEST_CASE("estimation refuses an empty cell list") {
    CHECK_THROWS_WITH_AS(
        estimate({}, SamplingWeights{}, ScalingConfig{}, ModelParameters{}),
        doctest::Contains("no cells"), ValidationError);
}

TEST_CASE("a cell whose outcome is never available fails before optimizing") {
    auto cells = constant_only_cells({Outcome::re, Outcome::na});
    cells[0].outcome = Outcome::lc;  // members only ever offer RE
    CHECK_THROWS_AS(
        estimate(cells, SamplingWeights{}, ScalingConfig{}, constant_only_structure()),
        NumericError);
}

TEST_CASE("scaling all weights leaves the optimum in place") {
    auto cells = constant_only_cells(
        {Outcome::re, Outcome::na, Outcome::na, Outcome::re, Outcome::na, Outcome::na});
    SamplingWeights doubled;
    doubled.w = {2.0, 2.0, 2.0, 2.0};
    EstimationResult a =
        estimate(cells, SamplingWeights{}, ScalingConfig{}, constant_only_structure());
    EstimationResult b = estimate(cells, doubled, ScalingConfig{}, constant_only_structure());
    CHECK(b.loglik_final == doctest::Approx(2.0 * a.loglik_final).epsilon(1e-7));
    CHECK(b.params.beta_re[0] == doctest::Approx(a.params.beta_re[0]).epsilon(2e-4));
}

TEST_CASE("estimation with pinned slopes recovers constants and nest scale") {
    ModelParameters truth;
    truth.beta_re = {-2.2, 1.5, 0.0, 0.0};
    truth.beta_ror = {-2.6, 0.8, 0.0};
    truth.mu = 1.8;
    auto cells = simulated_cells(400, truth, 91);

    ModelParameters structure;
    structure.free_mask.fill(false);
    structure.free_mask[0] = true;  // re.b0
    structure.free_mask[9] = true;  // ror.b0
    structure.set_coefficient(1, 1.5);
    structure.set_coefficient(10, 0.8);

    EstimationResult res = estimate(cells, SamplingWeights{}, ScalingConfig{}, structure);
    CHECK(res.converged);
    CHECK(res.n_parameters == 3);
    REQUIRE(res.se_valid);
    REQUIRE(res.std_errors.size() == 3);
    CHECK(std::abs(res.params.beta_re[0] - truth.beta_re[0]) < 3.0 * res.std_errors[0]);
    CHECK(std::abs(res.params.beta_ror[0] - truth.beta_ror[0]) < 3.0 * res.std_errors[1]);
    CHECK(std::abs(res.params.mu - truth.mu) < 3.0 * res.std_errors[2]);
    CHECK(res.params.beta_re[1] == 1.5);  // pinned values untouched
    CHECK(res.params.beta_ror[1] == 0.8);
    for (double se : res.std_errors) CHECK(se > 0.0);
    for (double p : res.p_values) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }

    OptimizerConfig robust;
    robust.sandwich = true;
    EstimationResult sw = estimate(cells, SamplingWeights{}, ScalingConfig{}, structure, robust);
    REQUIRE(sw.se_valid);
    CHECK(sw.params.beta_re[0] == res.params.beta_re[0]);  // same optimum, other covariance
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(sw.std_errors[j] > 0.0);
        CHECK(sw.std_errors[j] != res.std_errors[j]);
    }
}

TEST_CASE("tied aggregated probabilities predict no accident") {
    std::vector<CellFeatures> cells = constant_only_cells({Outcome::re});
    std::vector<CellPrediction> preds = predict(cells, ModelParameters{}, ScalingConfig{});
    REQUIRE(preds.size() == 1);
    CHECK(preds[0].probs == std::array<double, 4>{0.5, 0.5, 0.0, 0.0});
    CHECK(preds[0].predicted == Outcome::na);
    CHECK(preds[0].n_obs == 1);
}

TEST_CASE("confusion metrics on a small fixed case") {
    std::vector<Outcome> truth{Outcome::na, Outcome::na, Outcome::na,
                               Outcome::re, Outcome::re, Outcome::lc};
    std::vector<Outcome> pred{Outcome::na, Outcome::re, Outcome::na,
                              Outcome::re, Outcome::lc, Outcome::lc};
    ConfusionReport r = confusion_metrics(pred, truth);
    CHECK(r.counts[0][0] == 2);
    CHECK(r.counts[0][1] == 1);
    CHECK(r.counts[1][1] == 1);
    CHECK(r.counts[1][2] == 1);
    CHECK(r.counts[2][2] == 1);
    CHECK(r.accuracy[0].value() == doctest::Approx(2.0 / 3.0));
    CHECK(r.accuracy[1].value() == doctest::Approx(0.5));
    CHECK(r.accuracy[2].value() == doctest::Approx(1.0));
    CHECK_FALSE(r.accuracy[3].has_value());  // no run-off-road cells
    CHECK(r.total_accident_accuracy.value() == doctest::Approx(1.0));
    CHECK(r.false_alarm[1].value() == doctest::Approx(1.0 / 3.0));
    CHECK(r.false_alarm[2].value() == doctest::Approx(0.0));
    CHECK(r.total_false_alarm.value() == doctest::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(confusion_metrics(pred, {Outcome::na}), ValidationError);
}

TEST_CASE("probability ratios average within each true class") {
    std::vector<CellPrediction> preds(3);
    preds[0].key = {"E1", 0, 0, 0};
    preds[0].probs = {0.5, 0.25, 0.125, 0.125};
    preds[1].key = {"E2", 0, 0, 0};
    preds[1].probs = {0.8, 0.1, 0.05, 0.05};
    preds[2].key = {"E3", 0, 0, 0};
    preds[2].probs = {0.9, 0.05, 0.03, 0.02};
    std::vector<Outcome> truth{Outcome::re, Outcome::re, Outcome::na};

    RatioTable t = probability_ratios(preds, truth);
    CHECK(t.has_row[0]);
    CHECK(t.has_row[1]);
    CHECK_FALSE(t.has_row[2]);
    CHECK_FALSE(t.has_row[3]);
    CHECK(t.ratio[1][0] == doctest::Approx(0.3125));
    CHECK(t.ratio[1][1] == doctest::Approx(0.15625));
    CHECK(t.ratio[1][2] == doctest::Approx(0.15625));
    CHECK(t.ratio[0][0] == doctest::Approx(0.05 / 0.9));

    preds[2].probs = {0.0, 0.6, 0.2, 0.2};
    CHECK_THROWS_WITH_AS(probability_ratios(preds, truth), doctest::Contains("P(NA) is zero"),
                         NumericError);
}

TEST_CASE("cross validation splits stratified halves deterministically") {
    std::vector<Outcome> outcomes;
    for (int i = 0; i < 8; ++i) outcomes.push_back(Outcome::na);
    for (int i = 0; i < 4; ++i) outcomes.push_back(Outcome::re);
    auto cells = constant_only_cells(outcomes);

    CrossValidationResult a = crossvalidate(cells, SamplingWeights{}, ScalingConfig{},
                                            constant_only_structure(), 17);
    CrossValidationResult b = crossvalidate(cells, SamplingWeights{}, ScalingConfig{},
                                            constant_only_structure(), 17);
    for (int f = 0; f < 2; ++f) {
        CHECK(a.estimates[f].loglik_final == b.estimates[f].loglik_final);
        CHECK(a.estimates[f].params == b.estimates[f].params);
        CHECK(a.estimates[f].n_cells == 6);  // 4 NA + 2 RE per fold
        std::int64_t total = 0;
        for (const auto& row : a.reports[f].counts) {
            for (std::int64_t n : row) total += n;
        }
        CHECK(total == 6);  // held-out fold size
        // P(RE) = 1/3 < P(NA): every held-out cell is predicted NA.
        CHECK(a.reports[f].counts[0][0] == 4);
        CHECK(a.reports[f].counts[1][0] == 2);
    }

    auto tiny = constant_only_cells({Outcome::na, Outcome::na, Outcome::na, Outcome::re});
    CHECK_THROWS_WITH_AS(crossvalidate(tiny, SamplingWeights{}, ScalingConfig{},
                                       constant_only_structure(), 17),
                         doctest::Contains("fewer than 2"), ValidationError);
}
