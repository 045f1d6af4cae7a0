#include "fewbits/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <thread>

#include <json.hpp>

namespace fewbits {

namespace {

// integral of the bump profile over [-min(w,1), min(w,1)]
double bump_window_integral(double w) {
    const double t = std::min(w, 1.0);
    return t + std::sin(std::numbers::pi * t) / std::numbers::pi;
}

}  // namespace

double binarized_delta(const TestDensity& td, double m1, double m2, double h) {
    const double w = std::pow(td.m, 1.0 / td.d) * h;  // window size in bump units
    const double f_window = std::pow(bump_window_integral(w), td.d);
    const double vol = std::pow(2.0 * h, td.d);
    const double factor = (f_window - vol) / (td.m - 1.0);
    return m1 * m2 * td.delta * factor * factor;
}

double comm_bound_bits(const DensityPlan& p, Mode mode, double delta) {
    const double n = static_cast<double>(p.n);
    if (mode == Mode::oneway)
        return 2.2 * (1.0 + delta) * n / p.m1 * std::log2(p.m1 / 10.0) + 1.0;
    return 6.0 * (1.0 + delta) * n * (1.0 / p.m1 + 1.0 / p.m2) * std::numbers::log2e +
           (p.schedule.r + 1.0) / 2.0;
}

std::pair<double, double> mse_bounds(double m1, double m2, double delta, std::int64_t n) {
    const double m = std::min(m1, m2);
    const double nn = static_cast<double>(n);
    return {25.0 * (1.0 + delta) * m1 * m2 * m2 / (nn * m),
            25.0 * (1.0 + delta) * m1 * m1 * m2 / (m * nn)};
}

namespace {

TrialRecord run_density_trial(const ExperimentConfig& cfg, double k, Mode mode, int trial) {
    TrialRecord rec;
    rec.k = k;
    rec.mode = mode;
    rec.trial = trial;
    rec.seed = prf64(cfg.seed, stream_tag::trial, std::bit_cast<std::uint64_t>(k),
                     static_cast<std::uint64_t>(trial));
    const auto t0 = std::chrono::steady_clock::now();

    const double m_td = std::pow(k, cfg.d / (cfg.d + 2.0 * cfg.beta));
    const double delta_td = std::pow(m_td, -cfg.beta / cfg.d);

    DensityConfig dcfg;
    dcfg.d = cfg.d;
    dcfg.beta = cfg.beta;
    dcfg.k = k;
    dcfg.mode = mode;
    dcfg.delta_max = cfg.delta_max;
    dcfg.clamp = cfg.clamp;
    try {
        const TestDensity td = make_test_density(cfg.d, m_td, delta_td);
        const DensityEstimate est = estimate_density(dcfg, td, rec.seed);
        rec.m1 = est.base_plan.m1;
        rec.m2 = est.base_plan.m2;
        rec.n = est.base_plan.n;
        rec.r = est.base_plan.schedule.r;
        rec.bits_used = est.bits_used;
        rec.delta_hat = est.delta_hat;
        rec.p_hat = est.p_hat;
        rec.truth = est.truth;
        rec.squared_error = (est.p_hat - est.truth) * (est.p_hat - est.truth);
    } catch (const BudgetTooSmallError& e) {
        rec.skipped = true;
        rec.skip_reason = e.what();
    } catch (const SupportOverflowError& e) {
        rec.skipped = true;
        rec.skip_reason = e.what();
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw ParameterDomainError("run_sweep: trials must be >= 1");
    for (std::size_t i = 1; i < cfg.k_grid.size(); ++i)
        if (!(cfg.k_grid[i] > cfg.k_grid[i - 1]))
            throw ParameterDomainError("run_sweep: k grid must be strictly increasing");

    struct Item {
        double k;
        Mode mode;
        int trial;
    };
    std::vector<Item> items;
    for (double k : cfg.k_grid)
        for (Mode mode : cfg.modes)
            for (int t = 0; t < cfg.trials; ++t) items.push_back({k, mode, t});

    SweepResult result;
    result.records.resize(items.size());
    std::atomic<std::size_t> next{0};
    const unsigned n_threads = cfg.threads > 0
                                   ? static_cast<unsigned>(cfg.threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            result.records[i] = run_density_trial(cfg, items[i].k, items[i].mode, items[i].trial);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::sort(result.records.begin(), result.records.end(), [](const TrialRecord& a, const TrialRecord& b) {
        if (a.k != b.k) return a.k < b.k;
        if (a.mode != b.mode) return a.mode < b.mode;
        return a.trial < b.trial;
    });

    // per (k, mode) summaries
    for (double k : cfg.k_grid) {
        for (Mode mode : cfg.modes) {
            SummaryRow row;
            row.k = k;
            row.mode = mode;
            std::vector<double> ses;
            double bits = 0;
            const TrialRecord* sample = nullptr;
            for (const TrialRecord& rec : result.records) {
                if (rec.k != k || rec.mode != mode) continue;
                ++row.trials;
                if (rec.skipped) {
                    ++row.skipped;
                    continue;
                }
                sample = &rec;
                ses.push_back(rec.squared_error);
                bits += rec.bits_used;
            }
            if (!ses.empty() && sample != nullptr) {
                row.mean_bits = bits / static_cast<double>(ses.size());
                double sum = 0;
                for (double s : ses) sum += s;
                row.mean_se = sum / static_cast<double>(ses.size());
                std::sort(ses.begin(), ses.end());
                row.median_se = ses[ses.size() / 2];

                const double m_td = std::pow(k, cfg.d / (cfg.d + 2.0 * cfg.beta));
                const double delta_td = std::pow(m_td, -cfg.beta / cfg.d);
                const TestDensity td = make_test_density(cfg.d, m_td, delta_td);
                DensityPlan p;
                p.m1 = sample->m1;
                p.m2 = sample->m2;
                p.n = sample->n;
                p.m = sample->m1;
                p.h = 0.5 * std::pow(1.0 / sample->m1, 1.0 / cfg.d);
                p.schedule.r = sample->r;
                const double dbin = binarized_delta(td, p.m1, p.m2, p.h);
                row.comm_bound = comm_bound_bits(p, mode, dbin);
                row.comm_ok = row.mean_bits <= row.comm_bound;
                const auto [b1, b2] = mse_bounds(p.m1, p.m2, dbin, p.n);
                row.mse_bound = std::max(b1, b2);
                row.mse_ratio = row.mse_bound > 0 ? row.mean_se / row.mse_bound : 0.0;
            }
            result.summary.push_back(row);
        }
    }
    return result;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_records_csv(const std::string& path, std::span<const TrialRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterDomainError("write_records_csv: cannot open " + path);
    out << "k,mode,trial,seed,m1,m2,n,r,bits_used,delta_hat,p_hat,truth,squared_error,skipped,skip_reason\n";
    for (const TrialRecord& r : records) {
        out << fmt(r.k) << ',' << to_string(r.mode) << ',' << r.trial << ',' << r.seed << ','
            << fmt(r.m1) << ',' << fmt(r.m2) << ',' << r.n << ',' << r.r << ','
            << fmt(r.bits_used) << ',' << fmt(r.delta_hat) << ',' << fmt(r.p_hat) << ','
            << fmt(r.truth) << ',' << fmt(r.squared_error) << ',' << (r.skipped ? 1 : 0) << ','
            << r.skip_reason << '\n';
    }
}

void write_summary_json(const std::string& path, const ExperimentConfig& cfg,
                        const SweepResult& result) {
    nlohmann::json j;
    j["config"]["d"] = cfg.d;
    j["config"]["beta"] = cfg.beta;
    j["config"]["trials"] = cfg.trials;
    j["config"]["seed"] = cfg.seed;
    j["config"]["delta_max"] = cfg.delta_max;
    j["config"]["clamp"] = cfg.clamp;
    j["config"]["k_grid"] = cfg.k_grid;
    {
        std::vector<std::string> modes;
        for (Mode m : cfg.modes) modes.emplace_back(to_string(m));
        j["config"]["modes"] = modes;
    }
    j["rows"] = nlohmann::json::array();
    for (const SummaryRow& row : result.summary) {
        nlohmann::json r;
        r["k"] = row.k;
        r["mode"] = to_string(row.mode);
        r["trials"] = row.trials;
        r["skipped"] = row.skipped;
        r["mean_se"] = row.mean_se;
        r["median_se"] = row.median_se;
        r["mean_bits"] = row.mean_bits;
        r["comm_bound"] = row.comm_bound;
        r["comm_ok"] = row.comm_ok;
        r["mse_bound"] = row.mse_bound;
        r["mse_ratio"] = row.mse_ratio;
        j["rows"].push_back(r);
    }
    for (Mode mode : cfg.modes) {
        std::vector<std::pair<double, double>> pts;
        for (const SummaryRow& row : result.summary)
            if (row.mode == mode && row.trials > row.skipped && row.mean_se > 0)
                pts.emplace_back(row.k, row.mean_se);
        if (pts.size() >= 3) {
            const ExponentFit fit = fit_exponent(pts);
            j["fits"][to_string(mode)]["slope"] = fit.slope;
            j["fits"][to_string(mode)]["intercept"] = fit.intercept;
            j["fits"][to_string(mode)]["stderr"] = fit.stderr_slope;
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterDomainError("write_summary_json: cannot open " + path);
    out << j.dump(2) << '\n';
}

ExponentFit fit_exponent(std::span<const std::pair<double, double>> k_mse) {
    if (k_mse.size() < 3)
        throw ParameterDomainError("fit_exponent: need at least 3 grid points");
    const auto n = static_cast<double>(k_mse.size());
    double sx = 0, sy = 0;
    for (const auto& [k, mse] : k_mse) {
        sx += std::log(k);
        sy += std::log(mse);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& [k, mse] : k_mse) {
        const double dx = std::log(k) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(mse) - my);
    }
    if (!(sxx > 0)) throw ParameterDomainError("fit_exponent: degenerate grid");
    ExponentFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0;
    for (const auto& [k, mse] : k_mse) {
        const double resid = std::log(mse) - (fit.intercept + fit.slope * std::log(k));
        ss_res += resid * resid;
    }
    if (k_mse.size() > 2)
        fit.stderr_slope = std::sqrt(ss_res / (n - 2.0) / sxx);
    return fit;
}

double sign_test_p_value(int wins, int n) {
    if (n <= 0) return 1.0;
    // P(Binomial(n, 1/2) >= wins)
    double p = 0.0;
    for (int i = wins; i <= n; ++i) {
        const double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                                std::lgamma(n - i + 1.0) - n * std::numbers::ln2;
        p += std::exp(log_term);
    }
    return std::min(p, 1.0);
}

}  // namespace fewbits
