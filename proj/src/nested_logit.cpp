#include "crashprob/nested_logit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crashprob/csv.hpp"

namespace crashprob {

std::vector<int> free_coefficient_indices(const ModelParameters& p) {
    std::vector<int> idx;
    for (int i = 0; i < kNumCoefficients; ++i) {
        if (p.free_mask[static_cast<std::size_t>(i)]) idx.push_back(i);
    }
    return idx;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Shared nest quantities: within-nest probabilities q, inclusive value I,
/// nest probability, and the q-weighted mean score.
struct NestCore {
    int n = 0;
    int alt[3] = {0, 0, 0};  // 0=RE, 1=LC, 2=ROR
    double v[3] = {0, 0, 0};
    double q[3] = {0, 0, 0};
    double inclusive = 0;
    double p_nest = 0;
    double vbar = 0;
};

NestCore nest_core(const ScoreVector& s, double mu) {
    NestCore c;
    const double vs[3] = {s.v_re, s.v_lc, s.v_ror};
    for (int a = 0; a < 3; ++a) {
        if (s.avail[static_cast<std::size_t>(a + 1)]) {
            c.alt[c.n] = a;
            c.v[c.n] = vs[a];
            ++c.n;
        }
    }
    if (c.n == 0) return c;
    double m = kNegInf;
    for (int i = 0; i < c.n; ++i) m = std::max(m, mu * c.v[i]);
    double sum = 0;
    for (int i = 0; i < c.n; ++i) {
        c.q[i] = std::exp(mu * c.v[i] - m);
        sum += c.q[i];
    }
    for (int i = 0; i < c.n; ++i) c.q[i] /= sum;
    c.inclusive = (m + std::log(sum)) / mu;
    double I = c.inclusive;  // V_na = 0, so P_nest = sigmoid(I)
    if (I >= 0) {
        c.p_nest = 1.0 / (1.0 + std::exp(-I));
    } else {
        double e = std::exp(I);
        c.p_nest = e / (1.0 + e);
    }
    for (int i = 0; i < c.n; ++i) c.vbar += c.q[i] * c.v[i];
    return c;
}

void require_valid_mu(double mu) {
    if (!(mu >= 1.0)) {
        throw NumericError("nest scale mu must be >= 1, got " + format_double(mu));
    }
}

/// Probabilities with their derivatives w.r.t. each accident score and mu.
struct NlDerivs {
    std::array<double, 4> p{1.0, 0.0, 0.0, 0.0};
    double dv[4][3] = {};  // dv[k][a] = dP(k)/dV_a
    double dmu[4] = {};
};

NlDerivs nl_derivatives(const ScoreVector& s, double mu) {
    NlDerivs d;
    NestCore c = nest_core(s, mu);
    if (c.n == 0) return d;
    const double pn = c.p_nest;
    const double cmu = (c.vbar - c.inclusive) / mu;
    d.p[0] = 1.0 - pn;
    for (int i = 0; i < c.n; ++i) {
        int k = c.alt[i] + 1;
        d.p[static_cast<std::size_t>(k)] = pn * c.q[i];
        for (int j = 0; j < c.n; ++j) {
            double delta = (i == j) ? 1.0 : 0.0;
            d.dv[k][c.alt[j]] = pn * c.q[i] * ((1.0 - pn) * c.q[j] + mu * (delta - c.q[j]));
        }
        d.dmu[k] = pn * c.q[i] * ((1.0 - pn) * cmu + (c.v[i] - c.vbar));
        d.dv[0][c.alt[i]] = -(1.0 - pn) * pn * c.q[i];
    }
    d.dmu[0] = -(1.0 - pn) * pn * cmu;
    return d;
}

}  // namespace

std::array<double, 4> nl_probabilities(const ScoreVector& scores, double mu) {
    require_valid_mu(mu);
    std::array<double, 4> p{1.0, 0.0, 0.0, 0.0};
    NestCore c = nest_core(scores, mu);
    if (c.n == 0) return p;
    p[0] = 1.0 - c.p_nest;
    for (int i = 0; i < c.n; ++i) p[static_cast<std::size_t>(c.alt[i] + 1)] = c.p_nest * c.q[i];
    return p;
}

std::array<double, 4> aggregate_cell(const std::vector<std::array<double, 4>>& member_probs) {
    if (member_probs.empty()) {
        throw ValidationError("cannot aggregate an empty cell");
    }
    std::array<double, 4> mean{};
    for (const auto& p : member_probs) {
        for (std::size_t k = 0; k < 4; ++k) mean[k] += p[k];
    }
    for (std::size_t k = 0; k < 4; ++k) mean[k] /= static_cast<double>(member_probs.size());
    return mean;
}

SamplingWeights sampling_weights(const std::array<std::int64_t, 4>& population_counts,
                                 const std::array<std::int64_t, 4>& sample_counts) {
    std::int64_t pop_total = 0;
    std::int64_t sample_total = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        if (population_counts[k] < 0 || sample_counts[k] < 0) {
            throw ValidationError("negative outcome count");
        }
        pop_total += population_counts[k];
        sample_total += sample_counts[k];
    }
    if (pop_total == 0 || sample_total == 0) {
        throw ValidationError("outcome counts must not all be zero");
    }
    SamplingWeights w;
    for (std::size_t k = 0; k < 4; ++k) {
        if (population_counts[k] == 0 && sample_counts[k] == 0) {
            w.w[k] = 1.0;  // class absent everywhere; weight is never used
            continue;
        }
        if (sample_counts[k] == 0) {
            throw ValidationError(std::string("zero sample count for outcome ") +
                                  outcome_name(static_cast<Outcome>(k)));
        }
        if (population_counts[k] == 0) {
            throw ValidationError(std::string("outcome ") +
                                  outcome_name(static_cast<Outcome>(k)) +
                                  " sampled but absent from the population counts");
        }
        double pop_share = static_cast<double>(population_counts[k]) /
                           static_cast<double>(pop_total);
        double sample_share = static_cast<double>(sample_counts[k]) /
                              static_cast<double>(sample_total);
        w.w[k] = pop_share / sample_share;
    }
    return w;
}

WesmlEvaluation wesml_evaluate(const ModelParameters& params, const ScalingConfig& scaling,
                               const std::vector<CellFeatures>& cells,
                               const SamplingWeights& weights, bool with_gradient) {
    require_valid_mu(params.mu);
    const std::vector<int> free_idx = free_coefficient_indices(params);
    const std::size_t n_grad = free_idx.size() + 1;  // free coefficients, then mu

    WesmlEvaluation eval;
    eval.n_cells = static_cast<std::int64_t>(cells.size());
    if (with_gradient) eval.gradient.assign(n_grad, 0.0);

    for (const CellFeatures& cell : cells) {
        if (cell.members.empty()) {
            throw ValidationError("cell " + cell.key.label() + " has no member observations");
        }
        const int y = static_cast<int>(cell.outcome);
        double sum_py = 0.0;
        double cg[kNumCoefficients] = {};
        double cg_mu = 0.0;
        for (const FeatureVector& raw : cell.members) {
            FeatureVector fs = scale_features(raw, scaling);
            ScoreVector v;
            v.avail = {true, raw.avail_re, raw.avail_lc, raw.avail_ror};
            if (raw.avail_re) v.v_re = score_re(fs, params);
            if (raw.avail_lc) v.v_lc = score_lc(fs, params);
            if (raw.avail_ror) v.v_ror = score_ror(fs, params);
            if (!with_gradient) {
                sum_py += nl_probabilities(v, params.mu)[static_cast<std::size_t>(y)];
                continue;
            }
            NlDerivs d = nl_derivatives(v, params.mu);
            sum_py += d.p[static_cast<std::size_t>(y)];
            if (raw.avail_re) {
                double g = d.dv[y][0];
                if (g != 0.0) {
                    cg[0] += g;
                    cg[1] += g * fs.ra_need_pos;
                    cg[2] += g * fs.ra_need_neg;
                    cg[3] += g * fs.ra_lim;
                }
            }
            if (raw.avail_lc) {
                double g = d.dv[y][1];
                if (g != 0.0) {
                    cg[4] += g;
                    cg[5] += g * fs.rg_lag_pos;
                    cg[6] += g * fs.rg_lag_neg;
                    cg[7] += g * fs.rg_lead_pos;
                    cg[8] += g * fs.rg_lead_neg;
                }
            }
            if (raw.avail_ror) {
                double g = d.dv[y][2];
                if (g != 0.0) {
                    cg[9] += g;
                    cg[10] += g * fs.dalat_pos;
                    cg[11] += g * fs.dalat_neg;
                }
            }
            cg_mu += d.dmu[y];
        }
        eval.n_obs += static_cast<std::int64_t>(cell.members.size());
        if (!(sum_py > 0.0)) {
            eval.loglik = kNegInf;
            eval.zero_cell = &cell.key;
            if (with_gradient) std::fill(eval.gradient.begin(), eval.gradient.end(), 0.0);
            return eval;
        }
        const double w = weights.of(cell.outcome);
        eval.loglik +=
            w * (std::log(sum_py) - std::log(static_cast<double>(cell.members.size())));
        if (with_gradient) {
            const double coef = w / sum_py;
            for (std::size_t j = 0; j < free_idx.size(); ++j) {
                eval.gradient[j] += coef * cg[free_idx[j]];
            }
            eval.gradient[n_grad - 1] += coef * cg_mu;
        }
    }
    return eval;
}

LikelihoodReport wesml_loglik(const ModelParameters& params, const ScalingConfig& scaling,
                              const std::vector<CellFeatures>& cells,
                              const SamplingWeights& weights) {
    WesmlEvaluation eval = wesml_evaluate(params, scaling, cells, weights, true);
    if (eval.zero_cell) {
        throw NumericError(std::string("observed outcome has zero probability in cell ") +
                           eval.zero_cell->label());
    }
    LikelihoodReport report;
    report.loglik = eval.loglik;
    report.gradient = std::move(eval.gradient);
    report.n_cells = eval.n_cells;
    return report;
}

}  // namespace crashprob
