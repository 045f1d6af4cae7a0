#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fewbits/dpi.hpp"

using namespace fewbits;

TEST_CASE("chi-square contraction bound") {
    const double e = std::exp(1.0);
    CHECK(chi2_sstar_bound(e, 0.37) == doctest::Approx(0.37 * 0.37).epsilon(1e-12));
    CHECK(chi2_sstar_bound(100, 0.5) ==
          doctest::Approx(0.25 / (100 * std::log(100.0) - 99.0)).epsilon(1e-12));
    double prev = chi2_sstar_bound(2, 0.5);
    for (double m : {5.0, 20.0, 100.0, 1e4}) {
        const double cur = chi2_sstar_bound(m, 0.5);
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK_THROWS_AS(chi2_sstar_bound(1.0, 0.5), ParameterDomainError);
}

TEST_CASE("maximal correlation of the biased family") {
    CHECK(maximal_correlation(biased_law(20, 0)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(maximal_correlation(biased_law(11, 0.5)) == doctest::Approx(0.05).epsilon(1e-10));
    for (double m : {15.0, 100.0, 1000.0, 10000.0})
        for (double d : {0.1, 0.5, 0.9})
            CHECK(std::fabs(maximal_correlation(biased_law(m, d)) - d / (m - 1)) <= 1e-10);
    CHECK_THROWS_AS(make_law(0.5, 0.5, 0.0, 0.0), ParameterDomainError);
    CHECK_THROWS_AS(make_law(0.5, 0.6, 0.0, 0.0), ParameterDomainError);
}

TEST_CASE("output-divergence sweep stays under the contraction bound") {
    CHECK(sstar1_grid(biased_law(50, 0), 100) == doctest::Approx(0.0).epsilon(1e-15));
    for (double m : {15.0, 100.0, 1000.0, 10000.0})
        for (double d : {0.1, 0.5, 0.9})
            CHECK(sstar1_grid(biased_law(m, d), 1000) <=
                  chi2_sstar_bound(m, d) * (1.0 + 1e-6));
    // grid refinement moves the estimate by less than a percent
    const double coarse = sstar1_grid(biased_law(100, 0.5), 1000);
    const double fine = sstar1_grid(biased_law(100, 0.5), 10000);
    CHECK(std::fabs(fine - coarse) / fine < 0.01);
    CHECK_THROWS_AS(sstar1_grid(biased_law(100, 0.5), 5), ParameterDomainError);
}

TEST_CASE("marginal fitting fixed points") {
    const double p = 0.02, d = 0.1;
    const ProjectionResult fp = iproject(small_p_law(p, d), p, p, 1e-10);
    CHECK(fp.converged);
    CHECK(fp.iterations == 0);
    CHECK(std::fabs(fp.lambda - d * p * p) <= 1e-17);

    const ProjectionResult prod = iproject(biased_law(20, 0), 0.3, 0.6, 1e-12);
    CHECK(prod.converged);
    CHECK(std::fabs(prod.lambda) <= 1e-11);
    CHECK(prod.matrix.p[0][0] == doctest::Approx(0.18).epsilon(1e-9));
}

TEST_CASE("marginal fitting convergence and factorization") {
    const Joint2x2Law laws[] = {biased_law(20, 0.5), biased_law(100, 0.9), small_p_law(0.02, 0.1),
                                small_p_law(0.05, -0.04)};
    const double targets[][2] = {{0.03, 0.07}, {0.25, 0.65}, {0.004, 0.9}};
    for (const Joint2x2Law& law : laws) {
        const double base_cross = law.p[0][0] * law.p[1][1] / (law.p[0][1] * law.p[1][0]);
        for (const auto& t : targets) {
            const ProjectionResult r = iproject(law, t[0], t[1], 1e-10);
            CHECK(r.converged);
            CHECK(r.iterations <= 10000);
            CHECK(std::fabs(r.matrix.px(0) - t[0]) < 1e-10);
            CHECK(std::fabs(r.matrix.py(0) - t[1]) < 1e-10);
            // row/column scaling preserves the cross ratio exactly
            const double cross =
                r.matrix.p[0][0] * r.matrix.p[1][1] / (r.matrix.p[0][1] * r.matrix.p[1][0]);
            CHECK(cross == doctest::Approx(base_cross).epsilon(1e-12));
        }
    }
    // iteration cap reports non-convergence instead of looping
    const ProjectionResult capped = iproject(biased_law(20, 0.5), 0.004, 0.9, 1e-14, 1);
    CHECK_FALSE(capped.converged);
    CHECK(capped.residual > 0);
}

TEST_CASE("offset linearization for small delta") {
    const double p = 0.02, d = 0.1;
    const ProjectionResult r = iproject(small_p_law(p, d), 0.03, 0.05, 1e-12);
    const double a = 0.03, b = 0.05;
    const double linearized = d / ((1 - p) * (1 - p));
    const double measured = r.lambda / (a * (1 - a) * b * (1 - b));
    CHECK(std::fabs(measured - linearized) / linearized < 0.10);
}

TEST_CASE("mutual information of projections") {
    CHECK(mutual_information(biased_law(20, 0)) <= 1e-12);
    const ProjectionResult prod = iproject(biased_law(50, 0), 0.2, 0.7, 1e-12);
    CHECK(mutual_information(prod.matrix) <= 1e-12);
    CHECK(mutual_information(small_p_law(0.02, 0.1)) > 0);
}

TEST_CASE("curvature ratio behaves on and off the excluded point") {
    CHECK_THROWS_AS(phi_psi_ratio(0.02, 0.1, 0.02, 0.02), ParameterDomainError);
    const double p = 0.02, d = 0.1;
    double sup = 0;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            const double a = 0.1 * p * std::pow(100.0, i / 19.0);
            const double b = 0.1 * p * std::pow(100.0, j / 19.0);
            sup = std::max(sup, phi_psi_ratio(p, d, a, b));
        }
    CHECK(sup <= 50.0 * p * d * d);
    CHECK(sup > 0.0);
}
