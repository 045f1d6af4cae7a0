#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fewbits/density.hpp"

namespace fewbits {

struct ExperimentConfig {
    std::vector<Mode> modes{Mode::oneway, Mode::interactive};
    std::vector<double> k_grid;
    int d = 1;
    double beta = 1.0;
    int trials = 1;
    std::uint64_t seed = 0;
    double delta_max = 1.0;
    bool clamp = true;  // density estimates are clamped to the feasible range
    int threads = 0;    // 0: hardware concurrency
    std::string out_path;  // CSV path; summary lands next to it as .json
};

struct TrialRecord {
    double k = 0;
    Mode mode = Mode::oneway;
    int trial = 0;
    std::uint64_t seed = 0;
    double m1 = 0, m2 = 0;
    std::int64_t n = 0;
    int r = 0;
    double bits_used = 0;
    double delta_hat = 0;
    double p_hat = 0;
    double truth = 0;
    double squared_error = 0;
    double wall_time = 0;  // seconds; kept out of the output files
    bool skipped = false;
    std::string skip_reason;
};

struct SummaryRow {
    double k = 0;
    Mode mode = Mode::oneway;
    int trials = 0;
    int skipped = 0;
    double mean_se = 0;
    double median_se = 0;
    double mean_bits = 0;
    double comm_bound = 0;   // per-trial mean-level bound on transcript bits
    bool comm_ok = true;     // mean_bits <= comm_bound
    double mse_bound = 0;    // corollary-style bound at the true binarized delta
    double mse_ratio = 0;    // mean_se / mse_bound
};

struct SweepResult {
    std::vector<TrialRecord> records;
    std::vector<SummaryRow> summary;
};

// Exact correlation of the binarized benchmark pair: the indicator
// neighborhoods smooth the bump, so the protocol sees delta_bin rather than
// the density's own delta.
double binarized_delta(const TestDensity& td, double m1, double m2, double h);

// Mean-transcript-length bound for a plan at the given true delta, in bits.
double comm_bound_bits(const DensityPlan& p, Mode mode, double delta);

// MSE bounds for the two corollary forms; callers compare against the max.
std::pair<double, double> mse_bounds(double m1, double m2, double delta, std::int64_t n);

SweepResult run_sweep(const ExperimentConfig& cfg);

void write_records_csv(const std::string& path, std::span<const TrialRecord> records);
void write_summary_json(const std::string& path, const ExperimentConfig& cfg,
                        const SweepResult& result);

struct ExponentFit {
    double slope = 0;
    double intercept = 0;
    double stderr_slope = 0;
};

// Ordinary least squares of ln(mse) on ln(k); needs >= 3 grid points.
ExponentFit fit_exponent(std::span<const std::pair<double, double>> k_mse);

// One-sided sign test p-value: probability of at least `wins` successes out
// of `n` fair coin flips.
double sign_test_p_value(int wins, int n);

}  // namespace fewbits
