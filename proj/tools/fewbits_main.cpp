#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fewbits/density.hpp"
#include "fewbits/dpi.hpp"
#include "fewbits/harness.hpp"
#include "fewbits/kernel.hpp"
#include "fewbits/selftest.hpp"

using namespace fewbits;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json schedule_json(const Schedule& s) {
    return nlohmann::json{{"r", s.r}, {"alphas", s.alphas}};
}

int cmd_bernoulli(double m1, double m2, double delta, std::uint32_t n, int trials,
                  std::uint64_t seed, Mode mode, const std::string& out) {
    const BernoulliFamily family = make_family(m1, m2, delta);
    const Schedule schedule =
        mode == Mode::oneway ? one_way_schedule(m1) : tetration_schedule(std::min(m1, m2));
    validate_schedule(schedule, m1, m2);
    const ScoreTable table = build_score_table(family, schedule);

    std::vector<double> deltas(trials), bits(trials);
    for (int t = 0; t < trials; ++t) {
        const BernoulliTrial trial =
            run_bernoulli_trial(family, schedule, n, prf64(seed, stream_tag::trial, t, 0));
        deltas[t] = trial.report.delta_hat;
        bits[t] = trial.bits_used;
    }
    double mean = 0, mean_bits = 0, mse = 0;
    for (int t = 0; t < trials; ++t) {
        mean += deltas[t] / trials;
        mean_bits += bits[t] / trials;
        mse += (deltas[t] - delta) * (deltas[t] - delta) / trials;
    }
    nlohmann::json j;
    j["m1"] = m1;
    j["m2"] = m2;
    j["delta"] = delta;
    j["n"] = n;
    j["mode"] = to_string(mode);
    j["schedule"] = schedule_json(schedule);
    j["trials"] = trials;
    j["mean_delta_hat"] = mean;
    j["mse"] = mse;
    j["mean_bits"] = mean_bits;
    j["normalizer_per_sample"] = table.normalizer_b;
    j["predicted_mse"] = (1.0 + delta) / (table.normalizer_b * n);
    if (mode == Mode::oneway)
        j["comm_bound_bits"] = 2.2 * (1.0 + delta) * n / m1 * std::log2(m1 / 10.0) + 1.0;
    else
        j["comm_bound_bits"] = 6.0 * (1.0 + delta) * n * (1.0 / m1 + 1.0 / m2) * std::log2(std::exp(1.0)) +
                               (schedule.r + 1.0) / 2.0;
    std::cout << j.dump(2) << '\n';
    if (!out.empty()) {
        std::ofstream f(out, std::ios::binary);
        f << "trial,delta_hat,bits\n";
        for (int t = 0; t < trials; ++t)
            f << t << ',' << fmt17(deltas[t]) << ',' << fmt17(bits[t]) << '\n';
    }
    return 0;
}

int cmd_density(double k, int d, double beta, Mode mode, int trials, std::uint64_t seed,
                double delta_max, bool clamp, const std::string& samples_path,
                const std::string& out) {
    DensityConfig cfg;
    cfg.d = d;
    cfg.beta = beta;
    cfg.k = k;
    cfg.mode = mode;
    cfg.delta_max = delta_max;
    cfg.clamp = clamp;

    const double m_td = std::pow(k, d / (d + 2.0 * beta));
    const double delta_td = std::pow(m_td, -beta / d);

    nlohmann::json j;
    const DensityPlan p = plan(cfg);
    j["plan"] = {{"m", p.m}, {"m1", p.m1}, {"m2", p.m2}, {"h", p.h}, {"n", p.n},
                 {"schedule", schedule_json(p.schedule)}};
    std::vector<nlohmann::json> rows;
    double mean_p = 0, mse = 0, mean_bits = 0, truth = 0;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t s = prf64(seed, stream_tag::trial, t, 0);
        DensityEstimate est;
        if (samples_path.empty()) {
            est = estimate_density(cfg, make_test_density(d, m_td, delta_td), s);
        } else {
            const std::vector<double> samples = load_sample_file(samples_path, d);
            est = estimate_density_from_samples(cfg, samples, s);
        }
        truth = est.truth;
        mean_p += est.p_hat / trials;
        mse += (est.p_hat - est.truth) * (est.p_hat - est.truth) / trials;
        mean_bits += est.bits_used / trials;
        rows.push_back({{"trial", t}, {"p_hat", est.p_hat}, {"bits", est.bits_used}});
    }
    j["truth"] = truth;
    j["mean_p_hat"] = mean_p;
    j["mse"] = mse;
    j["mean_bits"] = mean_bits;
    j["trials"] = rows;
    std::cout << j.dump(2) << '\n';
    if (!out.empty()) {
        std::ofstream f(out, std::ios::binary);
        f << "trial,p_hat,bits\n";
        for (const auto& r : rows)
            f << r["trial"] << ',' << fmt17(r["p_hat"].get<double>()) << ','
              << fmt17(r["bits"].get<double>()) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-party correlation and pointwise density estimation under bit budgets"};
    app.set_config("--config", "", "flat key-value config file; flags override");
    app.require_subcommand(1);

    // bernoulli
    auto* bern = app.add_subcommand("bernoulli", "single-protocol correlation estimation runs");
    double m1 = 20, m2 = 20, delta = 0.5;
    std::uint32_t n = 20000;
    int trials = 1;
    std::uint64_t seed = 1;
    std::string mode_str = "oneway";
    std::string out;
    bern->add_option("--m1", m1);
    bern->add_option("--m2", m2);
    bern->add_option("--delta", delta);
    bern->add_option("--n", n);
    bern->add_option("--trials", trials);
    bern->add_option("--seed", seed);
    bern->add_option("--mode", mode_str)->check(CLI::IsMember({"oneway", "interactive"}));
    bern->add_option("--out", out);

    // density
    auto* dens = app.add_subcommand("density", "single pointwise density estimate");
    double k = 65536;
    int d = 1;
    double beta = 1.0;
    double delta_max = 1.0;
    bool clamp = false;
    std::string samples_path;
    dens->add_option("--k", k);
    dens->add_option("--d", d);
    dens->add_option("--beta", beta);
    dens->add_option("--mode", mode_str)->check(CLI::IsMember({"oneway", "interactive"}));
    dens->add_option("--trials", trials);
    dens->add_option("--seed", seed);
    dens->add_option("--delta-max", delta_max);
    dens->add_flag("--clamp", clamp);
    dens->add_option("--samples", samples_path);
    dens->add_option("--out", out);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "risk curves over a budget grid");
    std::vector<double> k_grid;
    std::string modes_str = "both";
    int threads = 0;
    sweep->add_option("--k-grid", k_grid)->delimiter(',');
    sweep->add_option("--d", d);
    sweep->add_option("--beta", beta);
    sweep->add_option("--mode", modes_str)->check(CLI::IsMember({"oneway", "interactive", "both"}));
    sweep->add_option("--trials", trials);
    sweep->add_option("--seed", seed);
    sweep->add_option("--delta-max", delta_max);
    sweep->add_flag("--clamp,!--no-clamp", clamp);
    sweep->add_option("--threads", threads);
    sweep->add_option("--out", out);

    // schedule
    auto* sched = app.add_subcommand("schedule", "print built-in schedules and their bounds");
    sched->add_option("--m1", m1);
    sched->add_option("--m2", m2);

    // kernel
    auto* kern = app.add_subcommand("kernel", "indicator-kernel coefficients and moments");
    int order = 2;
    kern->add_option("--l", order);
    kern->add_option("--d", d);

    // dpi
    auto* dpi = app.add_subcommand("dpi", "data processing bound tables");
    std::vector<double> m_grid{15, 100, 1000, 10000};
    std::vector<double> delta_grid{0.1, 0.5, 0.9};
    int grid_size = 3000;
    dpi->add_option("--m-grid", m_grid)->delimiter(',');
    dpi->add_option("--delta-grid", delta_grid)->delimiter(',');
    dpi->add_option("--grid-size", grid_size);
    dpi->add_option("--out", out);

    // selftest
    auto* self = app.add_subcommand("selftest", "run the verification suite");
    bool quick = false;
    self->add_flag("--quick", quick);
    self->add_option("--seed", seed);
    self->add_option("--threads", threads);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*bern)
            return cmd_bernoulli(m1, m2, delta, n, trials, seed,
                                 mode_str == "oneway" ? Mode::oneway : Mode::interactive, out);
        if (*dens)
            return cmd_density(k, d, beta, mode_str == "oneway" ? Mode::oneway : Mode::interactive,
                               trials, seed, delta_max, clamp, samples_path, out);
        if (*sweep) {
            ExperimentConfig cfg;
            if (modes_str == "oneway") cfg.modes = {Mode::oneway};
            if (modes_str == "interactive") cfg.modes = {Mode::interactive};
            cfg.k_grid = k_grid;
            cfg.d = d;
            cfg.beta = beta;
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.delta_max = delta_max;
            cfg.clamp = clamp;
            cfg.threads = threads;
            const SweepResult result = run_sweep(cfg);
            const std::string csv = out.empty() ? "sweep.csv" : out;
            write_records_csv(csv, result.records);
            write_summary_json(csv + ".json", cfg, result);
            double secs = 0;
            for (const TrialRecord& r : result.records) secs += r.wall_time;
            std::cerr << "wrote " << csv << " and " << csv << ".json (" << result.records.size()
                      << " records, " << secs << " cpu-seconds)\n";
            for (Mode m : cfg.modes) {
                std::vector<std::pair<double, double>> pts;
                for (const SummaryRow& row : result.summary)
                    if (row.mode == m && row.trials > row.skipped && row.mean_se > 0)
                        pts.emplace_back(row.k, row.mean_se);
                if (pts.size() >= 3) {
                    const ExponentFit fit = fit_exponent(pts);
                    std::cout << to_string(m) << " slope " << fit.slope << " +- "
                              << fit.stderr_slope << '\n';
                }
            }
            return 0;
        }
        if (*sched) {
            const Schedule ow = one_way_schedule(m1);
            const Schedule tet = tetration_schedule(std::min(m1, m2));
            nlohmann::json j;
            j["one_way"]["schedule"] = schedule_json(ow);
            j["tetration"]["schedule"] = schedule_json(tet);
            for (auto [name, s] : {std::pair<const char*, const Schedule*>{"one_way", &ow},
                                   {"tetration", &tet}}) {
                const BoundReport b = predicted_bounds(*s, m1, m2);
                j[name]["bounds"] = {{"comm_odd_nats", b.comm_odd},
                                     {"comm_even_nats", b.comm_even},
                                     {"info_odd", b.info_odd},
                                     {"info_even", b.info_even}};
            }
            std::cout << j.dump(2) << '\n';
            return 0;
        }
        if (*kern) {
            const KernelSpec spec = kernel_coeffs(order, d);
            nlohmann::json j;
            j["order"] = spec.order;
            j["k0"] = spec.k0;
            j["d"] = spec.dim;
            j["coeffs"] = spec.coeffs;
            nlohmann::json moments = nlohmann::json::array();
            for (int jj = 0; jj <= spec.order + 2; ++jj) moments.push_back(kernel_moment(spec, jj));
            j["moments"] = moments;
            std::cout << j.dump(2) << '\n';
            return 0;
        }
        if (*dpi) {
            std::ostream* os = &std::cout;
            std::ofstream file;
            if (!out.empty()) {
                file.open(out, std::ios::binary);
                os = &file;
            }
            *os << "m,delta,chi2_bound,sstar1_grid,maxcorr,maxcorr_closed_form\n";
            for (double m : m_grid)
                for (double dd : delta_grid) {
                    const Joint2x2Law law = biased_law(m, dd);
                    *os << fmt17(m) << ',' << fmt17(dd) << ',' << fmt17(chi2_sstar_bound(m, dd))
                        << ',' << fmt17(sstar1_grid(law, grid_size)) << ','
                        << fmt17(maximal_correlation(law)) << ',' << fmt17(dd / (m - 1.0)) << '\n';
                }
            return 0;
        }
        if (*self) {
            SelftestOptions opts;
            opts.quick = quick;
            if (self->count("--seed") > 0) opts.seed = seed;
            opts.threads = threads;
            const SelftestReport report = run_selftest(opts, std::cout);
            return report.all_passed ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
