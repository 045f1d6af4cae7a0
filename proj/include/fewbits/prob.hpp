#pragma once

#include <array>

#include "fewbits/common.hpp"

namespace fewbits {

// 2x2 matrix of reals indexed [x][y].
struct Mat2 {
    std::array<std::array<double, 2>, 2> v{};

    double& operator()(int x, int y) { return v[x][y]; }
    double operator()(int x, int y) const { return v[x][y]; }

    double sum() const { return v[0][0] + v[0][1] + v[1][0] + v[1][1]; }
    double row_sum(int x) const { return v[x][0] + v[x][1]; }
    double col_sum(int y) const { return v[0][y] + v[1][y]; }
};

// A 2x2 law that is affine in the correlation parameter:
// evaluate(delta) = base + delta * slope.  Keeping the slope explicit makes
// every delta-derivative downstream exact (no numerical differentiation).
struct AffineJoint2x2 {
    Mat2 base;
    Mat2 slope;

    Mat2 evaluate(double delta) const {
        Mat2 out;
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                out(x, y) = base(x, y) + delta * slope(x, y);
        return out;
    }
};

// The biased Bernoulli pair family: marginals [1/m1, 1-1/m1] and
// [1/m2, 1-1/m2] for every delta, with the (0,0) cell offset by
// delta/(m1*m2).  Valid for m1, m2 > 10 and delta in [-1, min(m1,m2)-1].
struct BernoulliFamily {
    double m1;
    double m2;
    double delta;

    double delta_max() const { return (m1 < m2 ? m1 : m2) - 1.0; }
    AffineJoint2x2 joint() const;
    Mat2 matrix() const { return joint().evaluate(delta); }
};

BernoulliFamily make_family(double m1, double m2, double delta);

// Per-round refinement channel.  Rows of P(U_i | symbol, U^{i-1}=0) are
// [1,0] for symbol 0 and [1/alpha, 1-1/alpha] for symbol 1; the absorbed
// branch maps everything to 1.
struct RoundChannel {
    double alpha;
    Party refiner;  // alice refines on X (odd rounds), bob on Y (even)

    double survival(int symbol) const { return symbol == 0 ? 1.0 : 1.0 / alpha; }
};

// Subnormalized law P(X=x, Y=y, U^{i-1}=0) as a function of delta, tracked
// through the rounds.  Only the all-zero branch matters: scores vanish on
// absorbed branches.
struct ZeroBranchState {
    AffineJoint2x2 joint0;
    int round_index = 0;

    // Total mass of the branch at delta = 0.
    double mass_at_zero() const { return joint0.base.sum(); }
};

ZeroBranchState initial_state(const BernoulliFamily& family);
ZeroBranchState advance_zero_branch(const ZeroBranchState& state, const RoundChannel& ch);

// Closed-form zero-branch mass at delta = 0 after the first `rounds` entries
// of an alternating schedule starting with an odd (alice) round:
//   [P_X(1) prod_odd 1/a_j + P_X(0)] * [P_Y(1) prod_even 1/a_j + P_Y(0)].
double zero_branch_mass_closed_form(const BernoulliFamily& family,
                                    const double* alphas, int rounds);

// Exact value and delta-slope at delta = 0 of the conditional law
// P(U_i = u | S = s, U^{i-1} = 0), where S is Y for an alice round and X for
// a bob round.  weight0 carries P^(0)(U_i = u, S = s, U^{i-1} = 0).
struct ConditionalSlopes {
    double value[2][2];   // [u][s]
    double slope[2][2];   // [u][s]
    double weight0[2][2]; // [u][s]
};

ConditionalSlopes conditional_at_zero(const ZeroBranchState& state, const RoundChannel& ch);

}  // namespace fewbits
