#include "crashprob/estimation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "crashprob/csv.hpp"
#include "crashprob/rng.hpp"

namespace crashprob {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kThetaCap = 50.0;  // mu = 1 + exp(theta) beyond this is degenerate

struct PackedProblem {
    const std::vector<CellFeatures>* cells;
    const SamplingWeights* weights;
    ScalingConfig scaling;
    ModelParameters base;         // free_mask template, coefficients overwritten
    std::vector<int> free_idx;

    std::size_t dim() const { return free_idx.size() + 1; }

    ModelParameters unpack(const Eigen::VectorXd& x) const {
        ModelParameters p = base;
        for (std::size_t j = 0; j < free_idx.size(); ++j) {
            p.set_coefficient(free_idx[j], x[static_cast<Eigen::Index>(j)]);
        }
        double theta = x[static_cast<Eigen::Index>(free_idx.size())];
        p.mu = 1.0 + std::exp(theta);
        return p;
    }

    /// Log-likelihood at x; gradient (if requested) is in theta space.
    double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                std::int64_t* n_obs = nullptr) const {
        double theta = x[static_cast<Eigen::Index>(free_idx.size())];
        if (theta > kThetaCap) return kNegInf;
        ModelParameters p = unpack(x);
        WesmlEvaluation e = wesml_evaluate(p, scaling, *cells, *weights, grad != nullptr);
        if (n_obs) *n_obs = e.n_obs;
        if (e.zero_cell) return kNegInf;
        if (grad) {
            grad->resize(static_cast<Eigen::Index>(dim()));
            for (std::size_t j = 0; j < free_idx.size(); ++j) {
                (*grad)[static_cast<Eigen::Index>(j)] = e.gradient[j];
            }
            (*grad)[static_cast<Eigen::Index>(free_idx.size())] =
                e.gradient[free_idx.size()] * std::exp(theta);
        }
        return e.loglik;
    }
};

double normal_two_sided_p(double t) {
    return std::erfc(std::abs(t) / std::sqrt(2.0));
}

}  // namespace

double rho_squared(double loglik_initial, double loglik_final) {
    return 1.0 - loglik_final / loglik_initial;
}

double rho_squared_adjusted(double loglik_initial, double loglik_final, int n_parameters) {
    return 1.0 - (loglik_final - n_parameters) / loglik_initial;
}

EstimationResult estimate(const std::vector<CellFeatures>& cells, const SamplingWeights& weights,
                          const ScalingConfig& scaling, const ModelParameters& structure,
                          const OptimizerConfig& cfg) {
    if (cells.empty()) throw ValidationError("no cells to estimate on");

    PackedProblem prob;
    prob.cells = &cells;
    prob.weights = &weights;
    prob.scaling = scaling;
    prob.base = structure;  // pinned coefficients keep their values
    prob.free_idx = free_coefficient_indices(structure);
    const auto n = static_cast<Eigen::Index>(prob.dim());

    EstimationResult res;
    res.scaling = scaling;
    res.n_cells = static_cast<std::int64_t>(cells.size());
    res.n_parameters = static_cast<int>(prob.dim());

    {
        // Null model: free coefficients at 0, pinned ones kept, no nesting.
        ModelParameters p0 = prob.base;
        for (int j : prob.free_idx) p0.set_coefficient(j, 0.0);
        p0.mu = 1.0;
        WesmlEvaluation init = wesml_evaluate(p0, scaling, cells, weights, false);
        if (init.zero_cell) {
            throw NumericError("observed outcome has zero probability in cell " +
                               init.zero_cell->label() +
                               " (outcome never available among its members)");
        }
        res.loglik_initial = init.loglik;
        res.n_obs = init.n_obs;
    }

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);  // theta = 0, i.e. mu = 2
    Eigen::VectorXd g(n);
    double L = prob.eval(x, &g);
    if (!std::isfinite(L)) {
        throw NumericError("log-likelihood not finite at the starting point");
    }

    const double c1 = 1e-4;
    int iters_used = 0;
    // BFGS ascent on the packed problem, updating x, L, g in place. With
    // fix_mu the theta coordinate is frozen: coefficients starting far from
    // their optimum produce violent early steps, and letting the nest scale
    // chase them can strand theta on its flat negative tail, where the
    // chain-rule factor exp(theta) silences the gradient long before mu
    // stops mattering.
    auto run_bfgs = [&](bool fix_mu) -> bool {
        auto mask = [&](Eigen::VectorXd& v) {
            if (fix_mu) v[n - 1] = 0.0;
        };
        mask(g);
        Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n) /
                            std::max(1.0, g.lpNorm<Eigen::Infinity>());
        bool rescale_next = true;  // self-scale H on the next curvature pair
        int fails_since_progress = 0;
        int plateau_count = 0;
        bool converged = false;
        int iter = 0;
        for (; iter < cfg.max_iterations; ++iter) {
            double ginf = g.lpNorm<Eigen::Infinity>();
            if (ginf < cfg.grad_tolerance) {
                converged = true;
                break;
            }
            Eigen::VectorXd d = H * g;  // ascent direction
            mask(d);
            double slope = g.dot(d);
            if (!(slope > 0) || !d.allFinite()) {
                H = Eigen::MatrixXd::Identity(n, n) / std::max(1.0, ginf);
                rescale_next = true;
                d = H * g;
                slope = g.dot(d);
            }
            double t = 1.0;
            double L_new = kNegInf;
            Eigen::VectorXd x_new;
            bool accepted = false;
            for (int ls = 0; ls < 50; ++ls) {
                x_new = x + t * d;
                L_new = prob.eval(x_new, nullptr);
                if (L_new >= L + c1 * t * slope) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) {
                // A stale curvature model can defeat the line search; retry
                // from a freshly scaled identity. Two failures in a row mean
                // even the raw gradient direction gains nothing, so stop.
                if (++fails_since_progress >= 2) break;
                H = Eigen::MatrixXd::Identity(n, n) / std::max(1.0, ginf);
                rescale_next = true;
                continue;
            }
            fails_since_progress = 0;
            if (t < 1e-6 && !rescale_next) {
                // Steps this short mean the curvature model is badly off;
                // drop it rather than poison further updates with it.
                H = Eigen::MatrixXd::Identity(n, n) / std::max(1.0, ginf);
                rescale_next = true;
            }
            Eigen::VectorXd g_new(n);
            prob.eval(x_new, &g_new);
            mask(g_new);
            Eigen::VectorXd s = x_new - x;
            Eigen::VectorXd y = g - g_new;  // gradient change of f = -L
            double sy = s.dot(y);
            if (sy > 1e-6 * s.norm() * y.norm()) {
                // Near-orthogonal (s, y) pairs make the rank-two update blow
                // up; the backtracking search enforces no curvature
                // condition, so skip those pairs instead.
                if (rescale_next) {
                    // Shanno sizing: H = (s'y / y'y) I fits the identity to
                    // the local curvature scale before the first rank-two
                    // update.
                    H = Eigen::MatrixXd::Identity(n, n) * (sy / y.dot(y));
                    rescale_next = false;
                }
                // BFGS update of the inverse Hessian of f = -L
                Eigen::VectorXd Hy = H * y;
                double yHy = y.dot(Hy);
                H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
                     (Hy * s.transpose() + s * Hy.transpose()) / sy;
            }
            double rel_change = std::abs(L_new - L) / std::max(1.0, std::abs(L));
            x = x_new;
            g = g_new;
            L = L_new;
            // One slow iteration is not a plateau; ill-conditioned ridges
            // give isolated tiny steps long before the optimum.
            plateau_count = rel_change < cfg.rel_ll_tolerance ? plateau_count + 1 : 0;
            if (plateau_count >= 3) {
                converged = true;
                ++iter;
                break;
            }
        }
        iters_used += iter;
        return converged;
    };

    if (n > 1) {
        run_bfgs(true);             // coefficients first, nest scale held
        L = prob.eval(x, &g);       // restore the full gradient
    }
    bool converged = run_bfgs(false);

    res.converged = converged;
    res.iterations = iters_used;
    res.grad_max_norm = g.lpNorm<Eigen::Infinity>();
    res.loglik_final = L;
    res.params = prob.unpack(x);
    res.rho2 = rho_squared(res.loglik_initial, res.loglik_final);
    res.rho2_adjusted =
        rho_squared_adjusted(res.loglik_initial, res.loglik_final, res.n_parameters);

    // Standard errors from the numerical Hessian of the analytic gradient.
    Eigen::MatrixXd hess(n, n);
    bool hess_finite = true;
    for (Eigen::Index j = 0; j < n; ++j) {
        double h = cfg.hessian_step * std::max(1.0, std::abs(x[j]));
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        xp[j] += h;
        xm[j] -= h;
        Eigen::VectorXd gp(n);
        Eigen::VectorXd gm(n);
        double lp = prob.eval(xp, &gp);
        double lm = prob.eval(xm, &gm);
        if (!std::isfinite(lp) || !std::isfinite(lm)) {
            hess_finite = false;
            break;
        }
        hess.col(j) = (gp - gm) / (2.0 * h);
    }
    res.std_errors.assign(static_cast<std::size_t>(n), 0.0);
    res.t_stats.assign(static_cast<std::size_t>(n), 0.0);
    res.p_values.assign(static_cast<std::size_t>(n), 0.0);
    if (!hess_finite) {
        res.se_valid = false;
        res.se_warning = "likelihood not finite near the optimum; standard errors unavailable";
        return res;
    }
    hess = 0.5 * (hess + hess.transpose().eval());
    Eigen::MatrixXd neg_hess = -hess;
    Eigen::LLT<Eigen::MatrixXd> llt(neg_hess);
    if (llt.info() != Eigen::Success) {
        res.se_valid = false;
        res.se_warning = "Hessian is singular or not negative definite; "
                         "standard errors unavailable";
        return res;
    }
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
    if (cfg.sandwich) {
        // Robust covariance: C * sum(g_cell g_cell') * C over cell score
        // contributions at the optimum.
        Eigen::MatrixXd opg = Eigen::MatrixXd::Zero(n, n);
        std::vector<CellFeatures> one(1);
        PackedProblem single = prob;
        single.cells = &one;
        for (const CellFeatures& cell : cells) {
            one[0] = cell;
            Eigen::VectorXd gc(n);
            single.eval(x, &gc);
            opg += gc * gc.transpose();
        }
        cov = cov * opg * cov;
    }
    res.se_valid = true;
    const double mu_jacobian = std::exp(x[n - 1]);  // d mu / d theta
    for (Eigen::Index j = 0; j < n; ++j) {
        double var = cov(j, j);
        if (!(var > 0) || !std::isfinite(var)) {
            res.se_valid = false;
            res.se_warning = "non-positive variance estimate; standard errors unavailable";
            return res;
        }
        double se = std::sqrt(var);
        double value;
        if (j == n - 1) {
            se *= mu_jacobian;  // delta method for mu = 1 + exp(theta)
            value = res.params.mu;
        } else {
            value = x[j];
        }
        res.std_errors[static_cast<std::size_t>(j)] = se;
        double t = value / se;
        res.t_stats[static_cast<std::size_t>(j)] = t;
        res.p_values[static_cast<std::size_t>(j)] = normal_two_sided_p(t);
    }
    return res;
}

std::vector<CellPrediction> predict(const std::vector<CellFeatures>& cells,
                                    const ModelParameters& params, const ScalingConfig& scaling) {
    std::vector<CellPrediction> out;
    out.reserve(cells.size());
    for (const CellFeatures& cell : cells) {
        if (cell.members.empty()) {
            throw ValidationError("cell " + cell.key.label() + " has no member observations");
        }
        std::array<double, 4> mean{};
        for (const FeatureVector& raw : cell.members) {
            ScoreVector v = score_observation(raw, params, scaling);
            std::array<double, 4> p = nl_probabilities(v, params.mu);
            for (std::size_t k = 0; k < 4; ++k) mean[k] += p[k];
        }
        for (std::size_t k = 0; k < 4; ++k) mean[k] /= static_cast<double>(cell.members.size());
        Outcome best = Outcome::na;
        for (Outcome k : {Outcome::re, Outcome::lc, Outcome::ror}) {
            if (mean[static_cast<std::size_t>(k)] > mean[static_cast<std::size_t>(best)]) {
                best = k;
            }
        }
        out.push_back(CellPrediction{cell.key, mean, best,
                                     static_cast<std::int64_t>(cell.members.size())});
    }
    return out;
}

ConfusionReport confusion_metrics(const std::vector<Outcome>& predicted,
                                  const std::vector<Outcome>& truth) {
    if (predicted.size() != truth.size()) {
        throw ValidationError("prediction and truth lists differ in length");
    }
    ConfusionReport r;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        r.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])]++;
    }
    auto rate = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    std::int64_t acc_true = 0;
    std::int64_t acc_hit = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        std::int64_t row = 0;
        for (std::size_t j = 0; j < 4; ++j) row += r.counts[k][j];
        r.accuracy[k] = rate(r.counts[k][k], row);
        if (k != 0) {
            acc_true += row;
            acc_hit += row - r.counts[k][0];  // predicted any accident type
        }
    }
    r.total_accident_accuracy = rate(acc_hit, acc_true);
    std::int64_t na_row = 0;
    for (std::size_t j = 0; j < 4; ++j) na_row += r.counts[0][j];
    for (std::size_t k = 1; k < 4; ++k) r.false_alarm[k] = rate(r.counts[0][k], na_row);
    r.total_false_alarm = rate(na_row - r.counts[0][0], na_row);
    return r;
}

RatioTable probability_ratios(const std::vector<CellPrediction>& predictions,
                              const std::vector<Outcome>& truth) {
    if (predictions.size() != truth.size()) {
        throw ValidationError("prediction and truth lists differ in length");
    }
    RatioTable table;
    std::array<std::int64_t, 4> counts{};
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const CellPrediction& p = predictions[i];
        if (!(p.probs[0] > 0)) {
            throw NumericError("P(NA) is zero in cell " + p.key.label() +
                               "; probability ratios undefined");
        }
        auto r = static_cast<std::size_t>(truth[i]);
        counts[r]++;
        for (std::size_t k = 0; k < 3; ++k) {
            table.ratio[r][k] += p.probs[k + 1] / p.probs[0];
        }
    }
    for (std::size_t r = 0; r < 4; ++r) {
        table.has_row[r] = counts[r] > 0;
        if (table.has_row[r]) {
            for (std::size_t k = 0; k < 3; ++k) {
                table.ratio[r][k] /= static_cast<double>(counts[r]);
            }
        }
    }
    return table;
}

CrossValidationResult crossvalidate(const std::vector<CellFeatures>& cells,
                                    const SamplingWeights& weights, const ScalingConfig& scaling,
                                    const ModelParameters& structure, std::uint64_t seed,
                                    const OptimizerConfig& cfg) {
    std::array<std::vector<std::size_t>, 4> by_class;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        by_class[static_cast<std::size_t>(cells[i].outcome)].push_back(i);
    }
    std::array<std::vector<std::size_t>, 2> folds;
    for (std::size_t k = 0; k < 4; ++k) {
        auto& idx = by_class[k];
        if (idx.empty()) continue;
        if (idx.size() < 2) {
            throw ValidationError(std::string("outcome class ") +
                                  outcome_name(static_cast<Outcome>(k)) +
                                  " has fewer than 2 cells; cannot split");
        }
        Rng rng = Rng::stream(seed, 0xCF01u, k);
        rng.shuffle(idx);
        std::size_t half = (idx.size() + 1) / 2;
        folds[0].insert(folds[0].end(), idx.begin(), idx.begin() + half);
        folds[1].insert(folds[1].end(), idx.begin() + half, idx.end());
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());

    CrossValidationResult result;
    for (int a = 0; a < 2; ++a) {
        int b = 1 - a;
        std::vector<CellFeatures> train;
        train.reserve(folds[static_cast<std::size_t>(a)].size());
        for (std::size_t i : folds[static_cast<std::size_t>(a)]) train.push_back(cells[i]);
        result.estimates[static_cast<std::size_t>(a)] =
            estimate(train, weights, scaling, structure, cfg);

        std::vector<CellFeatures> test;
        std::vector<Outcome> truth;
        test.reserve(folds[static_cast<std::size_t>(b)].size());
        for (std::size_t i : folds[static_cast<std::size_t>(b)]) {
            test.push_back(cells[i]);
            truth.push_back(cells[i].outcome);
        }
        auto preds = predict(test, result.estimates[static_cast<std::size_t>(a)].params, scaling);
        std::vector<Outcome> pred_outcomes;
        pred_outcomes.reserve(preds.size());
        for (const auto& p : preds) pred_outcomes.push_back(p.predicted);
        result.reports[static_cast<std::size_t>(a)] = confusion_metrics(pred_outcomes, truth);
    }
    return result;
}

}  // namespace crashprob
