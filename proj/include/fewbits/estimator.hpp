#pragma once

#include <span>
#include <vector>

#include "fewbits/prob.hpp"
#include "fewbits/protocol.hpp"
#include "fewbits/schedule.hpp"

namespace fewbits {

// Score values for one round: gamma[u][s] is the delta-derivative at 0 of
// ln P(U_i = u | S = s, U^{i-1} = 0), where S is Y on alice rounds and X on
// bob rounds; scores are zero on absorbed branches.  weight0 carries the
// matching joint masses P^(0)(U_i = u, S = s, U^{i-1} = 0).
struct RoundScores {
    int round;
    Party refiner;
    double gamma[2][2];
    double weight0[2][2];
};

struct ScoreTable {
    std::vector<RoundScores> rounds;
    double normalizer_b = 0;  // I^B / n: sum over odd rounds of E^(0)[Gamma_i^2]
    double normalizer_a = 0;  // I^A / n: even rounds
};

// Exact score table from the affine representation; depends on (m1, m2) and
// the schedule only.  Throws DegenerateScheduleError when both normalizers
// vanish (no round reveals anything).
ScoreTable build_score_table(const BernoulliFamily& family, const Schedule& schedule);

struct EstimateReport {
    double delta_hat = 0;
    double statistic = 0;    // Gamma^A or Gamma^B
    double normalizer = 0;   // I^A or I^B (already scaled by n)
    double predicted_mse = 0;  // (1 + delta_max) / normalizer
};

// Folds the session's U-vectors against the observer's own samples.
// For party bob, own_samples are the Y bits and odd-round scores apply;
// for alice, X bits and even rounds.
EstimateReport estimate(const SessionResult& session, std::span<const std::uint8_t> own_samples,
                        Party party, const ScoreTable& table, double delta_max = 1.0);

// Convenience wrapper: samples n pairs from the family, runs a session and
// returns Bob's estimate plus the transcript bit count.
struct BernoulliTrial {
    EstimateReport report;
    double bits_used = 0;
};
BernoulliTrial run_bernoulli_trial(const BernoulliFamily& family, const Schedule& schedule,
                                   std::uint32_t n, std::uint64_t seed,
                                   const SessionOptions& opts = {});

// Monte Carlo check of the mean-statistic identity E[Gamma^B] = delta * I^B:
// returns the sample estimate of E[Gamma^B] / (delta * I^B), which should be
// 1 up to sampling error.
double mean_statistic_identity_check(const BernoulliFamily& family, const Schedule& schedule,
                                     std::uint32_t n, int trials, std::uint64_t seed);

}  // namespace fewbits
