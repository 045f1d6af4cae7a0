#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fewbits/density.hpp"
#include "fewbits/harness.hpp"

using namespace fewbits;

TEST_CASE("plan picks the published scales") {
    DensityConfig cfg;
    cfg.d = 1;
    cfg.beta = 1;
    cfg.mode = Mode::interactive;

    cfg.k = 4096;
    DensityPlan p = plan(cfg);
    CHECK(p.m == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(p.schedule.r == 2);
    CHECK(p.h == doctest::Approx(1.0 / 32).epsilon(1e-12));

    cfg.k = 65536;
    p = plan(cfg);
    CHECK(p.m == doctest::Approx(std::pow(2.0, 16.0 / 3)).epsilon(1e-12));
    CHECK(p.schedule.r == 4);
    CHECK(p.n == 70440);

    cfg.mode = Mode::oneway;
    p = plan(cfg);
    CHECK(p.m1 == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(p.schedule.r == 1);

    cfg.k = 4096;
    CHECK_THROWS_AS(plan(cfg), BudgetTooSmallError);  // (k/log2 k)^{1/3} < 10
    cfg.mode = Mode::interactive;
    cfg.k = 500;
    CHECK_THROWS_AS(plan(cfg), BudgetTooSmallError);
}

TEST_CASE("test density construction and truth") {
    const TestDensity td = make_test_density(1, 16, 0.0625);
    CHECK(test_density_truth(td) == doctest::Approx(1.0625).epsilon(1e-12));
    const double x = 0.5, y = 0.5;
    CHECK(test_density_value(td, std::span(&x, 1), std::span(&y, 1)) ==
          doctest::Approx(1.0625).epsilon(1e-12));
    CHECK_THROWS_AS(make_test_density(1, 1.8, 0.1), SupportOverflowError);
    CHECK_THROWS_AS(make_test_density(1, 16, -1.5), ParameterDomainError);
}

TEST_CASE("bump profile normalizes") {
    double sum = 0;
    const int steps = 20000;
    for (int i = 0; i <= steps; ++i) {
        const double t = -1.0 + 2.0 * i / steps;
        sum += bump_profile(t) * (i == 0 || i == steps ? 0.5 : 1.0);
    }
    CHECK(sum * 2.0 / steps == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(bump_profile(0) == 1.0);
    CHECK(bump_profile(1.2) == 0.0);
}

TEST_CASE("sampler matches the uniform marginal and the smoothed correlation") {
    const double m = 16;
    const TestDensity td = make_test_density(1, m, 0.4);
    CounterRng rng(2024, 5);
    const std::int64_t n = 400000;
    const std::vector<double> rows = sample_test_density(td, n, rng);

    const double h = 0.5 / m;
    BinarizationMap map{h, {0.5}, {0.5}, m, m};
    std::int64_t in_a = 0, in_both = 0;
    double mean_x = 0;
    for (std::int64_t l = 0; l < n; ++l) {
        const double* row = rows.data() + 2 * l;
        const bool xo = map.x_outside(std::span(row, 1));
        const bool yo = map.y_outside(std::span(row + 1, 1));
        // independent geometric check of the binarization
        CHECK(xo == (std::fabs(row[0] - 0.5) > h));
        in_a += !xo;
        in_both += (!xo && !yo);
        mean_x += row[0];
    }
    // uniform marginal: P(X in A) = 2h = 1/m, mean 1/2
    const double pa = static_cast<double>(in_a) / n;
    const double se_a = std::sqrt((1.0 / m) * (1 - 1.0 / m) / n);
    CHECK(std::fabs(pa - 1.0 / m) <= 4 * se_a);
    CHECK(std::fabs(mean_x / n - 0.5) <= 4 * std::sqrt(1.0 / 12 / n));

    // joint box frequency reproduces the smoothed correlation
    const double dbin = binarized_delta(td, m, m, h);
    const double p_both = (1.0 + dbin) / (m * m);
    const double se_b = std::sqrt(p_both * (1 - p_both) / n);
    CHECK(std::fabs(static_cast<double>(in_both) / n - p_both) <= 4 * se_b);
}

TEST_CASE("independent case factorizes") {
    const TestDensity td = make_test_density(1, 16, 0.0);
    CounterRng rng(11, 5);
    const std::int64_t n = 200000;
    const std::vector<double> rows = sample_test_density(td, n, rng);
    const double h = 0.5 / 16;
    std::int64_t in_both = 0;
    for (std::int64_t l = 0; l < n; ++l) {
        const double* row = rows.data() + 2 * l;
        in_both += std::fabs(row[0] - 0.5) <= h && std::fabs(row[1] - 0.5) <= h;
    }
    const double p = 1.0 / 256;
    CHECK(std::fabs(static_cast<double>(in_both) / n - p) <= 4 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("uniform truth is estimated without bias") {
    DensityConfig cfg;
    cfg.k = 4096;
    cfg.mode = Mode::interactive;
    const TestDensity uniform = make_test_density(1, 16, 0.0);
    double mean = 0, sq = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        const DensityEstimate est = estimate_density(cfg, uniform, prf64(31, 0, 0, t));
        mean += est.p_hat;
        sq += est.p_hat * est.p_hat;
        CHECK(est.truth == 1.0);
    }
    mean /= trials;
    const double se = std::sqrt((sq / trials - mean * mean) / trials);
    CHECK(std::fabs(mean - 1.0) <= 4 * se);
}

TEST_CASE("communication stays within the budget") {
    for (double k : {4096.0, 16384.0}) {
        for (Mode mode : {Mode::oneway, Mode::interactive}) {
            DensityConfig cfg;
            cfg.k = k;
            cfg.mode = mode;
            const double m_td = std::pow(k, 1.0 / 3);
            const TestDensity td = make_test_density(1, m_td, 1.0 / m_td);
            double mean_bits = 0;
            const int trials = 40;
            bool feasible = true;
            for (int t = 0; t < trials && feasible; ++t) {
                try {
                    mean_bits += estimate_density(cfg, td, prf64(77, t, 0, 0)).bits_used / trials;
                } catch (const BudgetTooSmallError&) {
                    feasible = false;
                }
            }
            if (feasible) CHECK(mean_bits <= k);
        }
    }
}

TEST_CASE("higher-order kernel path assembles and respects the budget") {
    DensityConfig cfg;
    cfg.beta = 2.2;  // order-2 kernel, 4 sub-estimations in d = 1
    cfg.k = 6.0e7;
    cfg.mode = Mode::interactive;
    cfg.clamp = true;
    const double m_td = std::pow(cfg.k, 1.0 / (1.0 + 2 * cfg.beta));
    const TestDensity td = make_test_density(1, m_td, std::pow(m_td, -cfg.beta));
    const DensityEstimate est = estimate_density(cfg, td, 5);
    CHECK(est.bits_used <= cfg.k);
    CHECK(est.base_plan.m / 2.0 > 10.0);
    CHECK(std::fabs(est.p_hat - est.truth) < 0.5);

    // infeasible once the largest box falls under the scale floor
    cfg.k = 1.0e6;
    CHECK_THROWS_AS(estimate_density(cfg, td, 5), BudgetTooSmallError);
}

TEST_CASE("sample files round through the pipeline") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "fewbits_samples.bin";
    {
        // uniform product samples on [0,1]^2
        CounterRng rng(5, 9);
        std::ofstream out(path, std::ios::binary);
        for (int i = 0; i < 2 * 40000; ++i) {
            const double v = rng.next_unit();
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
    const std::vector<double> samples = load_sample_file(path.string(), 1);
    REQUIRE(samples.size() == 2 * 40000);

    DensityConfig cfg;
    cfg.k = 4096;
    cfg.mode = Mode::interactive;
    const DensityEstimate a = estimate_density_from_samples(cfg, samples, 3, 1.0);
    const DensityEstimate b = estimate_density_from_samples(cfg, samples, 3, 1.0);
    CHECK(a.p_hat == b.p_hat);  // deterministic given seed and data
    CHECK(std::fabs(a.p_hat - 1.0) < 2.5);
    CHECK(a.bits_used <= cfg.k);

    // too few rows for the plan
    const std::vector<double> short_file(samples.begin(), samples.begin() + 200);
    CHECK_THROWS_AS(estimate_density_from_samples(cfg, short_file, 3, 1.0), BudgetTooSmallError);
    std::remove(path.string().c_str());
}
