#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "crashprob/rng.hpp"
#include "crashprob/scores.hpp"

namespace crashprob::testing {

/// Reference probabilities by the naive unstabilized formulas: plain exp
/// sums for the within-nest shares and the inclusive value, no log-sum-exp.
/// Only safe for moderate scores; that is the point, it shares no numerics
/// with the production path.
inline std::array<double, 4> naive_probabilities(const ScoreVector& scores, double mu) {
    std::array<double, 4> p{};
    double denom = 0;
    int n_avail = 0;
    for (Outcome k : {Outcome::re, Outcome::lc, Outcome::ror}) {
        if (!scores.available(k)) continue;
        denom += std::exp(mu * scores.value(k));
        ++n_avail;
    }
    if (n_avail == 0) {
        p[0] = 1.0;
        return p;
    }
    double inclusive = std::log(denom) / mu;
    double p_nest = std::exp(inclusive) / (std::exp(scores.v_na) + std::exp(inclusive));
    p[0] = 1.0 - p_nest;
    for (Outcome k : {Outcome::re, Outcome::lc, Outcome::ror}) {
        if (!scores.available(k)) continue;
        p[static_cast<std::size_t>(k)] = p_nest * std::exp(mu * scores.value(k)) / denom;
    }
    return p;
}

inline double gumbel_draw(Rng& rng) {
    double u = rng.uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    return -std::log(-std::log(u));
}

/// Monte Carlo choice frequencies from the random-utility story itself:
/// the nest beats the outside alternative when inclusive value + Gumbel
/// noise wins (a logistic comparison), and the alternative inside the nest
/// is the Gumbel argmax of the scaled scores.
inline std::array<double, 4> mc_choice_frequencies(const ScoreVector& scores, double mu,
                                                   std::int64_t n_draws, Rng& rng) {
    std::array<std::int64_t, 4> counts{};
    double denom = 0;
    int n_avail = 0;
    for (Outcome k : {Outcome::re, Outcome::lc, Outcome::ror}) {
        if (!scores.available(k)) continue;
        denom += std::exp(mu * scores.value(k));
        ++n_avail;
    }
    if (n_avail == 0) {
        return {1.0, 0.0, 0.0, 0.0};
    }
    double inclusive = std::log(denom) / mu;
    for (std::int64_t i = 0; i < n_draws; ++i) {
        double u = rng.uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        double logistic = std::log(u / (1.0 - u));  // Gumbel difference
        if (scores.v_na + logistic >= inclusive) {
            counts[0] += 1;
            continue;
        }
        Outcome best = Outcome::na;
        double best_utility = 0;
        for (Outcome k : {Outcome::re, Outcome::lc, Outcome::ror}) {
            if (!scores.available(k)) continue;
            double utility = mu * scores.value(k) + gumbel_draw(rng);
            if (best == Outcome::na || utility > best_utility) {
                best = k;
                best_utility = utility;
            }
        }
        counts[static_cast<std::size_t>(best)] += 1;
    }
    std::array<double, 4> freq{};
    for (std::size_t k = 0; k < 4; ++k) {
        freq[k] = static_cast<double>(counts[k]) / static_cast<double>(n_draws);
    }
    return freq;
}

}  // namespace crashprob::testing
