#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fewbits/estimator.hpp"

using namespace fewbits;

namespace {

// Test-side oracle: exact path enumeration over (x, y, u^r) with channel
// products evaluated at a finite delta.  Independent of the affine-slope
// machinery that builds the score table.
double path_probability(const Mat2& joint, const Schedule& s, int x, int y, int mask) {
    double prob = joint(x, y);
    bool prev_zero = true;
    for (int i = 1; i <= s.r && prob > 0; ++i) {
        const int ui = (mask >> (i - 1)) & 1;
        const int sym = (i % 2 == 1) ? x : y;
        double pu;
        if (!prev_zero)
            pu = ui == 1 ? 1.0 : 0.0;
        else if (sym == 0)
            pu = ui == 0 ? 1.0 : 0.0;
        else
            pu = ui == 0 ? 1.0 / s.alphas[i - 1] : 1.0 - 1.0 / s.alphas[i - 1];
        prob *= pu;
        if (ui == 1) prev_zero = false;
    }
    return prob;
}

double enumerated_mean_score(const BernoulliFamily& f, const Schedule& s, const ScoreTable& t,
                             double delta, Party party) {
    const Mat2 joint = f.joint().evaluate(delta);
    double mean = 0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int mask = 0; mask < (1 << s.r); ++mask) {
                const double prob = path_probability(joint, s, x, y, mask);
                if (prob == 0) continue;
                double score = 0;
                bool prev_zero = true;
                for (int i = 1; i <= s.r; ++i) {
                    const int ui = (mask >> (i - 1)) & 1;
                    if (prev_zero) {
                        const RoundScores& rs = t.rounds[i - 1];
                        const bool counts = party == Party::bob ? rs.refiner == Party::alice
                                                                : rs.refiner == Party::bob;
                        if (counts) score += rs.gamma[ui][party == Party::bob ? y : x];
                    }
                    if (ui == 1) prev_zero = false;
                }
                mean += prob * score;
            }
    return mean;
}

// enumerated conditional P^(delta)(U_i = u | S = s, U^{i-1} = 0)
double enumerated_conditional(const BernoulliFamily& f, const Schedule& s, double delta,
                              int round, int u, int sym) {
    const Mat2 joint = f.joint().evaluate(delta);
    const bool odd = round % 2 == 1;
    double num = 0, den = 0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            if ((odd ? y : x) != sym) continue;
            for (int mask = 0; mask < (1 << s.r); ++mask) {
                bool zero_prefix = true;
                for (int i = 1; i < round; ++i) zero_prefix &= ((mask >> (i - 1)) & 1) == 0;
                if (!zero_prefix) continue;
                const double prob = path_probability(joint, s, x, y, mask);
                den += prob;
                if (((mask >> (round - 1)) & 1) == u) num += prob;
            }
        }
    return num / den;
}

}  // namespace

TEST_CASE("score values for the reference configuration") {
    const BernoulliFamily f = make_family(20, 20, 0);
    const ScoreTable t = build_score_table(f, one_way_schedule(20));
    CHECK(t.rounds[0].gamma[0][0] == doctest::Approx(1.0 / 21).epsilon(1e-12));
    CHECK(t.rounds[0].gamma[1][0] == doctest::Approx(-0.025 / 0.475).epsilon(1e-12));
    CHECK(t.normalizer_a == 0.0);
    CHECK(t.normalizer_b > 0.0);
}

TEST_CASE("scores match numerical differentiation of the enumerated conditional") {
    const BernoulliFamily f = make_family(20, 30, 0);
    const Schedule s = tetration_schedule(20);
    const ScoreTable t = build_score_table(f, s);
    const double eps = 1e-6;
    for (int round = 1; round <= s.r; ++round)
        for (int u = 0; u < 2; ++u)
            for (int sym = 0; sym < 2; ++sym) {
                const double hi = enumerated_conditional(f, s, eps, round, u, sym);
                const double lo = enumerated_conditional(f, s, -eps, round, u, sym);
                const double mid = enumerated_conditional(f, s, 0, round, u, sym);
                const double numeric = (hi - lo) / (2 * eps) / mid;
                CHECK(t.rounds[round - 1].gamma[u][sym] ==
                      doctest::Approx(numeric).epsilon(1e-6));
            }
}

TEST_CASE("every score row has zero conditional mean") {
    for (auto [m1, m2] : {std::pair{20.0, 20.0}, {100.0, 1000.0}, {33.0, 12.5}}) {
        const BernoulliFamily f = make_family(m1, m2, 0);
        const Schedule s = tetration_schedule(std::min(m1, m2));
        const ScoreTable t = build_score_table(f, s);
        for (const RoundScores& rs : t.rounds)
            for (int sym = 0; sym < 2; ++sym) {
                const double total = rs.weight0[0][sym] + rs.weight0[1][sym];
                const double mean = rs.gamma[0][sym] * rs.weight0[0][sym] / total +
                                    rs.gamma[1][sym] * rs.weight0[1][sym] / total;
                CHECK(std::fabs(mean) <= 1e-12);
            }
    }
}

TEST_CASE("mean statistic equals delta times the normalizer, by enumeration") {
    for (auto [m1, m2] : {std::pair{20.0, 20.0}, {100.0, 100.0}, {100.0, 1000.0}, {14.0, 40.0}}) {
        for (double delta : {-0.9, 0.37, 1.0, 5.0}) {
            if (delta > std::min(m1, m2) - 1) continue;
            const BernoulliFamily f = make_family(m1, m2, delta);
            for (const Schedule& s :
                 {one_way_schedule(m1), tetration_schedule(std::min(m1, m2))}) {
                const ScoreTable t = build_score_table(f, s);
                const double mean_b = enumerated_mean_score(f, s, t, delta, Party::bob);
                CHECK(mean_b / delta == doctest::Approx(t.normalizer_b).epsilon(1e-12));
                if (t.normalizer_a > 0) {
                    const double mean_a = enumerated_mean_score(f, s, t, delta, Party::alice);
                    CHECK(mean_a / delta == doctest::Approx(t.normalizer_a).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("exact normalizer dominates the information bound") {
    for (auto [m1, m2] : {std::pair{20.0, 20.0}, {100.0, 100.0}, {100.0, 1000.0}}) {
        for (const Schedule& s : {one_way_schedule(m1), tetration_schedule(std::min(m1, m2))}) {
            const ScoreTable t = build_score_table(make_family(m1, m2, 0), s);
            const BoundReport b = predicted_bounds(s, m1, m2);
            CHECK(t.normalizer_b >= 2.0 * b.info_odd);
        }
    }
}

TEST_CASE("monte carlo unbiasedness across the delta range") {
    const int trials = 400;
    const std::uint32_t n = 2000;
    for (int sched_id = 0; sched_id < 2; ++sched_id) {
        const Schedule s = sched_id == 0 ? one_way_schedule(20) : tetration_schedule(20);
        for (double delta : {-0.5, 0.0, 0.5, 1.0}) {
            const BernoulliFamily f = make_family(20, 20, delta);
            double mean = 0, m2sum = 0;
            for (int t = 0; t < trials; ++t) {
                const double dh =
                    run_bernoulli_trial(f, s, n, prf64(100, sched_id, static_cast<std::uint64_t>(delta * 4 + 8), t))
                        .report.delta_hat;
                mean += dh;
                m2sum += dh * dh;
            }
            mean /= trials;
            const double var = m2sum / trials - mean * mean;
            const double se = std::sqrt(var / trials);
            CHECK(std::fabs(mean - delta) <= 4 * se);

            // variance domination against the exact normalizer; the (1+delta)
            // constant is the max cell ratio P^(delta)/P^(0), which for
            // negative delta is attained off the corner cell
            const ScoreTable table = build_score_table(f, s);
            const double dom = std::max(1 + delta, 1 - delta / 19.0);
            const double bound = dom / (table.normalizer_b * n);
            CHECK(var <= bound * (1 + 5.0 / std::sqrt(trials)));
        }
    }
}

TEST_CASE("mean statistic identity by monte carlo") {
    const BernoulliFamily f = make_family(20, 20, 1.0);
    for (int sched_id = 0; sched_id < 2; ++sched_id) {
        const Schedule s = sched_id == 0 ? one_way_schedule(20) : tetration_schedule(20);
        const ScoreTable table = build_score_table(f, s);
        const double ratio = mean_statistic_identity_check(f, s, 10000, 200, 7 + sched_id);
        const double sd_delta = std::sqrt(2.0 / (table.normalizer_b * 10000));
        CHECK(std::fabs(ratio - 1.0) <= 4 * sd_delta / std::sqrt(200.0));
    }
    CHECK_THROWS_AS(mean_statistic_identity_check(make_family(20, 20, 0), one_way_schedule(20),
                                                  100, 10, 1),
                    ParameterDomainError);
}

TEST_CASE("degenerate schedules and parties are flagged") {
    const BernoulliFamily f = make_family(20, 20, 0);
    CHECK_THROWS_AS(build_score_table(f, Schedule{2, {1.0, 1.0}}), DegenerateScheduleError);

    // alice has no even round to score in a one-round session
    const Schedule ow = one_way_schedule(20);
    const ScoreTable t = build_score_table(f, ow);
    std::vector<std::uint8_t> x(16, 1), y(16, 1);
    x[0] = y[0] = 0;
    const SessionResult session = run_session(x, y, ow, SharedRandomness{2});
    CHECK_THROWS_AS(estimate(session, x, Party::alice, t), DegenerateScheduleError);
    CHECK_NOTHROW(estimate(session, y, Party::bob, t));
}

TEST_CASE("alice estimates from even rounds") {
    const BernoulliFamily f = make_family(20, 20, 0.5);
    const Schedule s = tetration_schedule(20);
    const ScoreTable table = build_score_table(f, s);
    const std::uint32_t n = 4000;
    double mean = 0, sq = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t seed = prf64(55, 0, 0, t);
        CounterRng rng(seed, stream_tag::bernoulli);
        std::vector<std::uint8_t> x(n), y(n);
        const Mat2 p = f.matrix();
        for (std::uint32_t l = 0; l < n; ++l) {
            const double u = rng.next_unit();
            x[l] = u < p(0, 0) + p(0, 1) ? 0 : 1;
            y[l] = (u < p(0, 0) || (u >= p(0, 0) + p(0, 1) && u < 1.0 - p(1, 1))) ? 0 : 1;
        }
        const SessionResult session = run_session(x, y, s, SharedRandomness{seed});
        const double dh = estimate(session, x, Party::alice, table).delta_hat;
        mean += dh;
        sq += dh * dh;
    }
    mean /= trials;
    const double se = std::sqrt((sq / trials - mean * mean) / trials);
    CHECK(std::fabs(mean - 0.5) <= 4 * se);
}
