#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fewbits/estimator.hpp"
#include "fewbits/kernel.hpp"
#include "fewbits/schedule.hpp"

namespace fewbits {

// Pointwise density estimation setup: evaluation point at the center of the
// unit cube, expected transcript budget k in bits.
struct DensityConfig {
    int d = 1;
    double beta = 1.0;
    double k = 0.0;
    Mode mode = Mode::interactive;
    std::vector<double> x0;  // defaults to the cube center when empty
    std::vector<double> y0;
    double delta_max = 1.0;  // a-priori bound on 1+delta used for n sizing
    bool clamp = false;      // clamp delta estimates to the feasible range
};

// Benchmark density with known ground truth: latent biased Bernoulli pair of
// scale m and correlation delta, smoothed through the separable bump
// f(t) = prod_j (1 + cos(pi t_j))/2 on [-1,1]^d.  Marginals are uniform on
// the unit cube and the density at the center equals 1 + delta.
struct TestDensity {
    int d = 1;
    double m = 0.0;
    double delta = 0.0;
    std::vector<double> x0;  // bump centers; cube center when empty
    std::vector<double> y0;
};

TestDensity make_test_density(int d, double m, double delta);

double bump_profile(double t);  // (1 + cos(pi t))/2 on [-1,1], 0 outside
double test_density_value(const TestDensity& td, std::span<const double> x,
                          std::span<const double> y);
double test_density_truth(const TestDensity& td);  // value at the centers

// n i.i.d. pairs, row-major rows of 2d coordinates (x then y).
std::vector<double> sample_test_density(const TestDensity& td, std::int64_t n, CounterRng& rng);

// Indicator neighborhoods A = x0 + h[-1,1]^d, B = y0 + h[-1,1]^d with the
// inverse covering probabilities of the known (uniform) marginals.
struct BinarizationMap {
    double h = 0.0;
    std::vector<double> x0;
    std::vector<double> y0;
    double m1 = 0.0;
    double m2 = 0.0;

    bool x_outside(std::span<const double> x) const;
    bool y_outside(std::span<const double> y) const;
};

struct DensityPlan {
    double m = 0.0;   // base inverse covering probability
    double m1 = 0.0;
    double m2 = 0.0;
    double h = 0.0;
    std::int64_t n = 0;
    Schedule schedule;
};

// Bandwidth / blocklength / schedule selection from the budget:
// interactive picks m = k^{d/(d+2beta)} and n = floor(m k ln2 / (13(1+dmax)));
// one-way picks m1 = (k/log2 k)^{d/(d+2beta)} and
// n = floor((k-1) m1 / (2.2(1+dmax) log2(m1/10))).  Throws
// BudgetTooSmallError when the derived scale is not above 10.
DensityPlan plan(const DensityConfig& cfg);

struct DensityEstimate {
    double p_hat = 0.0;
    double truth = 0.0;
    double bits_used = 0.0;
    double delta_hat = 0.0;  // central-box correlation estimate
    DensityPlan base_plan;
};

// End-to-end estimate against the benchmark density.  For beta <= 2 this is
// the plain indicator estimator; for beta > 2 the order-floor(beta) kernel is
// assembled from (floor(l/2)+1)^{2d} indicator sub-estimations, each given an
// even share of the budget.
DensityEstimate estimate_density(const DensityConfig& cfg, const TestDensity& td,
                                 std::uint64_t seed);

// Same pipeline over externally supplied samples (little-endian float64 rows
// of 2d coordinates, marginals assumed uniform on the unit cube).  Samples
// are consumed sequentially by the sub-estimations.
DensityEstimate estimate_density_from_samples(const DensityConfig& cfg,
                                              std::span<const double> samples,
                                              std::uint64_t seed, double truth = 0.0);

std::vector<double> load_sample_file(const std::string& path, int d);

}  // namespace fewbits
