#pragma once

#include "fewbits/common.hpp"

namespace fewbits {

// General 2x2 joint law (not necessarily from the biased family).
struct Joint2x2Law {
    double p[2][2] = {{0, 0}, {0, 0}};

    double px(int x) const { return p[x][0] + p[x][1]; }
    double py(int y) const { return p[0][y] + p[1][y]; }
};

Joint2x2Law make_law(double p00, double p01, double p10, double p11);

// Biased family with m1 = m2 = m: marginals [1/m, 1-1/m] on both sides.
Joint2x2Law biased_law(double m, double delta);

// Symmetric small-p family: [[p^2(1+d), p(1-p)-p^2 d], [p(1-p)-p^2 d, (1-p)^2+p^2 d]].
Joint2x2Law small_p_law(double p, double delta);

// chi^2 contraction bound on the strong data processing constant of the
// biased family: delta^2 / (m ln m - m + 1).
double chi2_sstar_bound(double m, double delta);

// Second singular value of M(x,y) = P(x,y)/sqrt(P_X(x) P_Y(y)); the top
// singular value must equal 1.
double maximal_correlation(const Joint2x2Law& law);

// Binary KL divergence d(a||p) in nats.
double binary_kl(double a, double p);

// Mutual information of the law, in nats.
double mutual_information(const Joint2x2Law& law);

// Lower estimate of s*_1 by a sweep over binary input perturbations:
// sup over Q_X = [q, 1-q] on a log-spaced grid of
// D(Q_Y || P_Y) / D(Q_X || P_X) with Q_Y = Q_X P_{Y|X}.
double sstar1_grid(const Joint2x2Law& law, int grid_size);

// Alternating marginal fitting to targets [alpha, 1-alpha], [beta, 1-beta].
struct ProjectionResult {
    Joint2x2Law matrix;
    double lambda = 0;  // P(0,0) - alpha*beta
    int iterations = 0;
    double residual = 0;
    bool converged = false;
};

ProjectionResult iproject(const Joint2x2Law& law, double alpha, double beta, double tol,
                          int max_iterations = 10000);

// Curvature-vs-divergence ratio phi/psi for the small-p family, with
// psi = d(alpha||p) + d(beta||p) and
// phi = I(p,p) - I(alpha,beta) + I_a(p,p)(alpha-p) + I_b(p,p)(beta-p),
// the partial derivatives taken by central differences with step 1e-5 * p.
double phi_psi_ratio(double p, double delta, double alpha, double beta);

}  // namespace fewbits
