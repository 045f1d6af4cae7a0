#include "fewbits/prob.hpp"

#include <cmath>
#include <string>

namespace fewbits {

AffineJoint2x2 BernoulliFamily::joint() const {
    const double px[2] = {1.0 / m1, 1.0 - 1.0 / m1};
    const double py[2] = {1.0 / m2, 1.0 - 1.0 / m2};
    const double s = 1.0 / (m1 * m2);
    AffineJoint2x2 j;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            j.base(x, y) = px[x] * py[y];
            j.slope(x, y) = (x == y ? s : -s);
        }
    return j;
}

BernoulliFamily make_family(double m1, double m2, double delta) {
    if (!(m1 > 10.0) || !(m2 > 10.0))
        throw ParameterDomainError("make_family: m1 and m2 must exceed 10, got m1=" +
                                   std::to_string(m1) + " m2=" + std::to_string(m2));
    const double dmax = (m1 < m2 ? m1 : m2) - 1.0;
    if (!(delta >= -1.0) || !(delta <= dmax))
        throw ParameterDomainError("make_family: delta must lie in [-1, min(m1,m2)-1], got " +
                                   std::to_string(delta));
    return BernoulliFamily{m1, m2, delta};
}

ZeroBranchState initial_state(const BernoulliFamily& family) {
    return ZeroBranchState{family.joint(), 0};
}

ZeroBranchState advance_zero_branch(const ZeroBranchState& state, const RoundChannel& ch) {
    if (!(state.mass_at_zero() > 0.0))
        throw DegenerateScheduleError("advance_zero_branch: zero-branch mass vanished");
    ZeroBranchState next = state;
    const double s1 = ch.survival(1);
    if (ch.refiner == Party::alice) {
        // only X=1 samples can be absorbed this round
        next.joint0.base(1, 0) *= s1;
        next.joint0.base(1, 1) *= s1;
        next.joint0.slope(1, 0) *= s1;
        next.joint0.slope(1, 1) *= s1;
    } else {
        next.joint0.base(0, 1) *= s1;
        next.joint0.base(1, 1) *= s1;
        next.joint0.slope(0, 1) *= s1;
        next.joint0.slope(1, 1) *= s1;
    }
    next.round_index = state.round_index + 1;
    return next;
}

double zero_branch_mass_closed_form(const BernoulliFamily& family,
                                    const double* alphas, int rounds) {
    double odd_prod = 1.0, even_prod = 1.0;
    for (int i = 1; i <= rounds; ++i) {
        if (i % 2 == 1)
            odd_prod /= alphas[i - 1];
        else
            even_prod /= alphas[i - 1];
    }
    const double px0 = 1.0 / family.m1, py0 = 1.0 / family.m2;
    return ((1.0 - px0) * odd_prod + px0) * ((1.0 - py0) * even_prod + py0);
}

ConditionalSlopes conditional_at_zero(const ZeroBranchState& state, const RoundChannel& ch) {
    ConditionalSlopes out{};
    const Mat2& b = state.joint0.base;
    const Mat2& sl = state.joint0.slope;
    const bool on_x = ch.refiner == Party::alice;
    for (int s = 0; s < 2; ++s) {
        // conditioning symbol: y for an alice round, x for a bob round
        double d0 = 0.0, d1 = 0.0;       // denominator value / slope
        double n0[2] = {0, 0}, n1[2] = {0, 0};  // numerators per u
        for (int t = 0; t < 2; ++t) {
            const int x = on_x ? t : s;
            const int y = on_x ? s : t;
            const double surv = ch.survival(t);
            d0 += b(x, y);
            d1 += sl(x, y);
            n0[0] += b(x, y) * surv;
            n1[0] += sl(x, y) * surv;
            n0[1] += b(x, y) * (1.0 - surv);
            n1[1] += sl(x, y) * (1.0 - surv);
        }
        if (!(d0 > 0.0))
            throw DegenerateScheduleError(
                "conditional_at_zero: conditioning event has zero mass");
        for (int u = 0; u < 2; ++u) {
            out.value[u][s] = n0[u] / d0;
            // derivative of the ratio (N0 + d N1)/(D0 + d D1) at d = 0
            out.slope[u][s] = n1[u] / d0 - n0[u] * d1 / (d0 * d0);
            out.weight0[u][s] = n0[u];
        }
    }
    return out;
}

}  // namespace fewbits
