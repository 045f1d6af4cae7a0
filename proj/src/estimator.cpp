#include "fewbits/estimator.hpp"

#include <cmath>

namespace fewbits {

ScoreTable build_score_table(const BernoulliFamily& family, const Schedule& schedule) {
    ScoreTable table;
    table.rounds.reserve(schedule.r);
    ZeroBranchState state = initial_state(family);
    for (int i = 1; i <= schedule.r; ++i) {
        const RoundChannel ch{schedule.alphas[i - 1], (i % 2 == 1) ? Party::alice : Party::bob};
        const ConditionalSlopes cond = conditional_at_zero(state, ch);
        RoundScores rs{};
        rs.round = i;
        rs.refiner = ch.refiner;
        double second_moment = 0.0;
        for (int u = 0; u < 2; ++u)
            for (int s = 0; s < 2; ++s) {
                const double v = cond.value[u][s];
                // 0/0 on a vanishing branch means the round reveals nothing there
                rs.gamma[u][s] = v > 0.0 ? cond.slope[u][s] / v : 0.0;
                rs.weight0[u][s] = cond.weight0[u][s];
                second_moment += rs.gamma[u][s] * rs.gamma[u][s] * cond.weight0[u][s];
            }
        if (ch.refiner == Party::alice)
            table.normalizer_b += second_moment;
        else
            table.normalizer_a += second_moment;
        table.rounds.push_back(rs);
        state = advance_zero_branch(state, ch);
    }
    if (!(table.normalizer_b > 0.0) && !(table.normalizer_a > 0.0))
        throw DegenerateScheduleError("build_score_table: schedule reveals no information");
    return table;
}

EstimateReport estimate(const SessionResult& session, std::span<const std::uint8_t> own_samples,
                        Party party, const ScoreTable& table, double delta_max) {
    const double per_sample = party == Party::bob ? table.normalizer_b : table.normalizer_a;
    if (!(per_sample > 0.0))
        throw DegenerateScheduleError("estimate: zero normalizer for this party");
    const SessionState& state = party == Party::bob ? session.bob : session.alice;
    const auto n = static_cast<std::uint32_t>(own_samples.size());
    const int r = static_cast<int>(state.u.size());

    double statistic = 0.0;
    for (std::uint32_t l = 0; l < n; ++l) {
        const int s = own_samples[l];
        for (int i = 1; i <= r; ++i) {
            const int ui = state.u[i - 1][l];
            if (table.rounds[i - 1].refiner == (party == Party::bob ? Party::alice : Party::bob))
                statistic += table.rounds[i - 1].gamma[ui][s];
            if (ui != 0) break;  // absorbed: later rounds score zero
        }
    }

    EstimateReport rep;
    rep.statistic = statistic;
    rep.normalizer = per_sample * static_cast<double>(n);
    rep.delta_hat = statistic / rep.normalizer;
    rep.predicted_mse = (1.0 + delta_max) / rep.normalizer;
    return rep;
}

namespace {

void sample_pairs(const BernoulliFamily& family, std::uint32_t n, CounterRng& rng,
                  std::vector<std::uint8_t>& x, std::vector<std::uint8_t>& y) {
    const Mat2 p = family.matrix();
    const double c00 = p(0, 0);
    const double c01 = c00 + p(0, 1);
    const double c10 = c01 + p(1, 0);
    x.resize(n);
    y.resize(n);
    for (std::uint32_t l = 0; l < n; ++l) {
        const double u = rng.next_unit();
        if (u < c00) {
            x[l] = 0; y[l] = 0;
        } else if (u < c01) {
            x[l] = 0; y[l] = 1;
        } else if (u < c10) {
            x[l] = 1; y[l] = 0;
        } else {
            x[l] = 1; y[l] = 1;
        }
    }
}

}  // namespace

BernoulliTrial run_bernoulli_trial(const BernoulliFamily& family, const Schedule& schedule,
                                   std::uint32_t n, std::uint64_t seed,
                                   const SessionOptions& opts) {
    CounterRng rng(seed, stream_tag::bernoulli);
    std::vector<std::uint8_t> x, y;
    sample_pairs(family, n, rng, x, y);
    const SharedRandomness rand{seed};
    const SessionResult session = run_session(x, y, schedule, rand, opts);
    const ScoreTable table = build_score_table(family, schedule);
    BernoulliTrial trial;
    trial.report = estimate(session, y, Party::bob, table);
    trial.bits_used = static_cast<double>(session.transcript.bit_count);
    return trial;
}

double mean_statistic_identity_check(const BernoulliFamily& family, const Schedule& schedule,
                                     std::uint32_t n, int trials, std::uint64_t seed) {
    if (family.delta == 0.0)
        throw ParameterDomainError("mean_statistic_identity_check: delta must be nonzero");
    const ScoreTable table = build_score_table(family, schedule);
    const double ib = table.normalizer_b * static_cast<double>(n);
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = prf64(seed, stream_tag::trial, static_cast<std::uint64_t>(t), 0);
        CounterRng rng(trial_seed, stream_tag::bernoulli);
        std::vector<std::uint8_t> x, y;
        sample_pairs(family, n, rng, x, y);
        const SessionResult session = run_session(x, y, schedule, SharedRandomness{trial_seed});
        sum += estimate(session, y, Party::bob, table).statistic;
    }
    const double mean_gamma = sum / trials;
    return mean_gamma / (family.delta * ib);
}

}  // namespace fewbits
