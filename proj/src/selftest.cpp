#include "fewbits/selftest.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "fewbits/density.hpp"
#include "fewbits/dpi.hpp"
#include "fewbits/harness.hpp"
#include "fewbits/kernel.hpp"

namespace fewbits {

namespace {

struct BatchStats {
    double mean_delta = 0;
    double sd_delta = 0;
    double mse = 0;
    double mean_bits = 0;
    int trials = 0;
};

BatchStats run_bernoulli_batch(const BernoulliFamily& family, const Schedule& schedule,
                               std::uint32_t n, int trials, std::uint64_t seed, int threads) {
    std::vector<double> deltas(trials), bits(trials);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int t = next.fetch_add(1);
            if (t >= trials) return;
            const BernoulliTrial trial = run_bernoulli_trial(
                family, schedule, n, prf64(seed, stream_tag::trial, static_cast<std::uint64_t>(t), 1));
            deltas[t] = trial.report.delta_hat;
            bits[t] = trial.bits_used;
        }
    };
    const unsigned nt = threads > 0 ? static_cast<unsigned>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < nt; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    BatchStats s;
    s.trials = trials;
    for (int t = 0; t < trials; ++t) {
        s.mean_delta += deltas[t];
        s.mean_bits += bits[t];
        s.mse += (deltas[t] - family.delta) * (deltas[t] - family.delta);
    }
    s.mean_delta /= trials;
    s.mean_bits /= trials;
    s.mse /= trials;
    for (int t = 0; t < trials; ++t)
        s.sd_delta += (deltas[t] - s.mean_delta) * (deltas[t] - s.mean_delta);
    s.sd_delta = std::sqrt(s.sd_delta / std::max(trials - 1, 1));
    return s;
}

std::string fmt(double v, const char* spec = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

struct Ctx {
    SelftestOptions opts;
    int trials_big;      // 400 full / 60 quick
    int trials_identity; // 200 full / 40 quick
    std::uint32_t n_big; // 20000 full / 4000 quick
    SweepResult sweep;
    ExperimentConfig sweep_cfg;
    std::vector<std::pair<BernoulliFamily, Schedule>> oneway_batches_cfg;
    std::vector<BatchStats> oneway_batches;
};

CriterionResult criterion_unbiasedness(Ctx& ctx) {
    CriterionResult res{"1 unbiasedness", true, "", 0};
    const double deltas[] = {0.0, 0.5, 1.0};
    double worst_z = 0;
    for (int sched_id = 0; sched_id < 2; ++sched_id) {
        const Schedule schedule = sched_id == 0 ? one_way_schedule(20.0) : tetration_schedule(20.0);
        for (double d : deltas) {
            const BernoulliFamily family = make_family(20.0, 20.0, d);
            const BatchStats s =
                run_bernoulli_batch(family, schedule, ctx.n_big, ctx.trials_big,
                                    prf64(ctx.opts.seed, 1, sched_id, static_cast<std::uint64_t>(d * 2)),
                                    ctx.opts.threads);
            const double se = s.sd_delta / std::sqrt(static_cast<double>(s.trials));
            const double z = std::fabs(s.mean_delta - d) / se;
            worst_z = std::max(worst_z, z);
            if (z > 4.0) res.passed = false;
            if (sched_id == 0) {
                // kept in delta order {0, 0.5, 1} for criteria 2 and 3
                ctx.oneway_batches_cfg.emplace_back(family, schedule);
                ctx.oneway_batches.push_back(s);
            }
        }
    }
    res.detail = "max |mean - delta| / SE = " + fmt(worst_z) + " (limit 4)";
    return res;
}

CriterionResult criterion_mse_bound(const Ctx& ctx) {
    CriterionResult res{"2 mse bound (one-way)", true, "", 0};
    // one-way delta = 0.5 batch recorded by criterion 1
    const BatchStats& s = ctx.oneway_batches[1];
    const double bound = 25.0 * 1.5 * 400.0 / static_cast<double>(ctx.n_big);
    res.passed = s.mse <= bound;
    res.detail = "empirical mse " + fmt(s.mse) + " <= " + fmt(bound);
    return res;
}

CriterionResult criterion_comm_oneway(const Ctx& ctx) {
    CriterionResult res{"3 comm bound (one-way)", true, "", 0};
    int violations = 0;
    int checked = 0;
    for (std::size_t i = 0; i < ctx.oneway_batches.size(); ++i) {
        const auto& [family, schedule] = ctx.oneway_batches_cfg[i];
        const double bound = 2.2 * (1.0 + family.delta) * ctx.n_big / family.m1 *
                                 std::log2(family.m1 / 10.0) +
                             1.0;
        ++checked;
        if (ctx.oneway_batches[i].mean_bits > bound) ++violations;
    }
    for (const SummaryRow& row : ctx.sweep.summary) {
        if (row.mode != Mode::oneway || row.trials == row.skipped) continue;
        ++checked;
        if (!row.comm_ok) ++violations;
    }
    res.passed = violations == 0;
    res.detail = std::to_string(violations) + " mean-level violations over " +
                 std::to_string(checked) + " one-way configs";
    return res;
}

CriterionResult criterion_comm_interactive(const Ctx& ctx) {
    CriterionResult res{"4 comm bound (tetration m=100)", true, "", 0};
    const double delta = 0.5;
    const BernoulliFamily family = make_family(100.0, 100.0, delta);
    const Schedule schedule = tetration_schedule(100.0);
    const BatchStats s = run_bernoulli_batch(family, schedule, ctx.n_big, ctx.trials_big,
                                             prf64(ctx.opts.seed, 4, 0, 0), ctx.opts.threads);
    const double bound = 6.0 * (1.0 + delta) * ctx.n_big * (0.01 + 0.01) * std::log2(std::exp(1.0)) +
                         (schedule.r + 1.0) / 2.0;
    res.passed = s.mean_bits <= bound && schedule.r == 4;
    res.detail = "r=" + std::to_string(schedule.r) + ", mean bits " + fmt(s.mean_bits) +
                 " <= " + fmt(bound);
    return res;
}

CriterionResult criterion_rates(Ctx& ctx) {
    CriterionResult res{"5 risk rates", true, "", 0};
    ctx.sweep_cfg.d = 1;
    ctx.sweep_cfg.beta = 1.0;
    ctx.sweep_cfg.trials = ctx.opts.quick ? 12 : 200;
    ctx.sweep_cfg.seed = prf64(ctx.opts.seed, 5, 0, 0);
    ctx.sweep_cfg.threads = ctx.opts.threads;
    ctx.sweep_cfg.clamp = true;
    const int hi_exp = ctx.opts.quick ? 15 : 18;
    for (int e = 12; e <= hi_exp; ++e) ctx.sweep_cfg.k_grid.push_back(std::ldexp(1.0, e));
    ctx.sweep = run_sweep(ctx.sweep_cfg);

    std::ostringstream detail;

    // (a) interactive log-log slope
    std::vector<std::pair<double, double>> pts;
    for (const SummaryRow& row : ctx.sweep.summary)
        if (row.mode == Mode::interactive && row.trials > row.skipped)
            pts.emplace_back(row.k, row.mean_se);
    const ExponentFit fit = fit_exponent(pts);
    const bool slope_ok = fit.slope >= -0.81 && fit.slope <= -0.52;
    detail << "interactive slope " << fmt(fit.slope) << (slope_ok ? " in" : " OUTSIDE")
           << " [-0.81,-0.52]";

    // (b) one-way flatness of mse * (k/log2 k)^{2/3}
    double flat_min = 0, flat_max = 0;
    bool first = true;
    for (const SummaryRow& row : ctx.sweep.summary) {
        if (row.mode != Mode::oneway || row.trials == row.skipped) continue;
        const double v = row.mean_se * std::pow(row.k / std::log2(row.k), 2.0 / 3.0);
        if (first || v < flat_min) flat_min = v;
        if (first || v > flat_max) flat_max = v;
        first = false;
    }
    const double flat_ratio = first ? 0.0 : flat_max / flat_min;
    const bool flat_ok = !first && flat_ratio <= 3.0;
    detail << "; one-way flat ratio " << fmt(flat_ratio) << (flat_ok ? " <= 3" : " > 3");

    // (c) paired sign test at k = 2^16 (or the top feasible k in quick mode)
    const double k_sep = ctx.opts.quick ? ctx.sweep_cfg.k_grid.back() : std::ldexp(1.0, 16);
    int wins = 0, pairs = 0;
    std::vector<const TrialRecord*> iv, ov;
    for (const TrialRecord& rec : ctx.sweep.records) {
        if (rec.k != k_sep || rec.skipped) continue;
        (rec.mode == Mode::interactive ? iv : ov).push_back(&rec);
    }
    for (const TrialRecord* a : iv)
        for (const TrialRecord* b : ov)
            if (a->trial == b->trial) {
                ++pairs;
                if (a->squared_error < b->squared_error) ++wins;
            }
    const double p_value = sign_test_p_value(wins, pairs);
    const bool sep_ok = pairs > 0 && p_value < 0.01;
    detail << "; separation at k=" << fmt(k_sep, "%.0f") << ": interactive wins " << wins << "/"
           << pairs << ", sign-test p " << fmt(p_value) << (sep_ok ? " < 0.01" : " >= 0.01");

    res.passed = slope_ok && flat_ok && sep_ok;
    res.detail = detail.str();
    return res;
}

CriterionResult criterion_normalizer_identity(const Ctx& ctx) {
    CriterionResult res{"6 normalizer identity", true, "", 0};
    std::ostringstream detail;
    for (int sched_id = 0; sched_id < 2; ++sched_id) {
        const Schedule schedule = sched_id == 0 ? one_way_schedule(20.0) : tetration_schedule(20.0);
        const BernoulliFamily family = make_family(20.0, 20.0, 1.0);
        const BatchStats s = run_bernoulli_batch(family, schedule, 10000, ctx.trials_identity,
                                                 prf64(ctx.opts.seed, 6, sched_id, 0),
                                                 ctx.opts.threads);
        // delta_hat = Gamma/I, so mean(delta_hat)/delta estimates E[Gamma]/(delta I)
        const double ratio = s.mean_delta / family.delta;
        const double se = s.sd_delta / (family.delta * std::sqrt(static_cast<double>(s.trials)));
        if (std::fabs(ratio - 1.0) > 4.0 * se) res.passed = false;
        detail << (sched_id == 0 ? "one-way " : "; tetration ") << fmt(ratio) << " +- " << fmt(4 * se);
    }
    res.detail = detail.str();
    return res;
}

CriterionResult criterion_theorem5(const Ctx&) {
    CriterionResult res{"7 exact normalizer vs information bound", true, "", 0};
    const double grid[][2] = {{20, 20}, {100, 100}, {100, 1000}};
    double worst = 1e300;
    for (const auto& mm : grid) {
        for (int sched_id = 0; sched_id < 2; ++sched_id) {
            const Schedule schedule =
                sched_id == 0 ? one_way_schedule(mm[0]) : tetration_schedule(std::min(mm[0], mm[1]));
            const BernoulliFamily family = make_family(mm[0], mm[1], 0.0);
            const ScoreTable table = build_score_table(family, schedule);
            const BoundReport bounds = predicted_bounds(schedule, mm[0], mm[1]);
            const double margin = table.normalizer_b / (2.0 * bounds.info_odd);
            worst = std::min(worst, margin);
            if (margin < 1.0) res.passed = false;
        }
    }
    res.detail = "min normalizer/(2 info_odd) margin = " + fmt(worst);
    return res;
}

CriterionResult criterion_kernels(const Ctx&) {
    CriterionResult res{"8 kernel moments", true, "", 0};
    double worst = 0;
    for (int l = 1; l <= 6; ++l) {
        const KernelSpec spec = kernel_coeffs(l);
        // piecewise oracle: K is constant on each slab (i-1, i)
        for (int j = 0; j <= l; ++j) {
            double oracle = 0;
            if (j % 2 == 0) {
                for (int i = 1; i <= spec.k0; ++i) {
                    double level = 0;
                    for (int k = i; k <= spec.k0; ++k) level += spec.coeffs[k - 1];
                    oracle += 2.0 * level *
                              (std::pow(static_cast<double>(i), j + 1) -
                               std::pow(static_cast<double>(i - 1), j + 1)) /
                              (j + 1);
                }
            }
            const double target = j == 0 ? 1.0 : 0.0;
            worst = std::max(worst, std::fabs(oracle - target));
            worst = std::max(worst, std::fabs(kernel_moment(spec, j) - target));
        }
    }
    if (worst > 1e-9) res.passed = false;
    const KernelSpec k2 = kernel_coeffs(2);
    const double c_err = std::max(std::fabs(k2.coeffs[0] - 2.0 / 3.0),
                                  std::fabs(k2.coeffs[1] + 1.0 / 12.0));
    if (c_err > 1e-12) res.passed = false;
    res.detail = "max moment error " + fmt(worst) + " (limit 1e-9); l=2 coeff error " + fmt(c_err);
    return res;
}

CriterionResult criterion_coding_replay(const Ctx& ctx) {
    CriterionResult res{"9 coding and replay", true, "", 0};
    // round-trip and length law
    for (std::uint64_t j = 1; j <= 100000; ++j) {
        const mpz_class jz(static_cast<unsigned long>(j));
        BitWriter w;
        elias_gamma_encode(jz, w);
        const std::size_t expected = 2 * static_cast<std::size_t>(std::floor(std::log2(j))) + 1;
        if (w.bit_count() != expected || elias_gamma_length(jz) != expected) {
            res.passed = false;
            res.detail = "length law failed at j=" + std::to_string(j);
            return res;
        }
        BitReader r(w.bytes().data(), w.bit_count());
        if (elias_gamma_decode(r) != jz) {
            res.passed = false;
            res.detail = "round trip failed at j=" + std::to_string(j);
            return res;
        }
    }
    // serialization replay over 100 random sessions
    int reconstructed = 0;
    for (int s = 0; s < 100; ++s) {
        const std::uint64_t seed = prf64(ctx.opts.seed, 9, static_cast<std::uint64_t>(s), 0);
        CounterRng rng(seed, 77);
        const auto n = static_cast<std::uint32_t>(4 + rng.next_u64() % 61);
        const double m1 = 10.5 + 30.0 * rng.next_unit();
        const double m2 = 10.5 + 30.0 * rng.next_unit();
        const double dmax = std::min(m1, m2) - 1.0;
        const double delta = -1.0 + (dmax + 1.0) * rng.next_unit() * 0.5;
        const BernoulliFamily family = make_family(m1, m2, delta);
        const Schedule schedule =
            s % 2 == 0 ? one_way_schedule(m1) : tetration_schedule(std::min(m1, m2));
        std::vector<std::uint8_t> x(n), y(n);
        const Mat2 p = family.matrix();
        for (std::uint32_t l = 0; l < n; ++l) {
            const double u = rng.next_unit();
            x[l] = u < p(0, 0) + p(0, 1) ? 0 : 1;
            y[l] = (u < p(0, 0) || (u >= p(0, 0) + p(0, 1) && u < 1.0 - p(1, 1))) ? 0 : 1;
        }
        const SharedRandomness rand{seed};
        const SessionResult session = run_session(x, y, schedule, rand);
        const auto bytes = session.transcript.serialize();
        const Transcript parsed = Transcript::deserialize(bytes);
        if (parsed.round_indices != session.transcript.round_indices ||
            parsed.bit_count != session.transcript.bit_count) {
            res.passed = false;
            res.detail = "transcript serialization mismatch";
            return res;
        }
        const SessionResult again = replay_session(x, y, schedule, rand, parsed);
        if (again.alice.u != session.alice.u || again.bob.u != session.bob.u ||
            session.alice.u != session.bob.u) {
            res.passed = false;
            res.detail = "replayed U-vectors differ";
            return res;
        }
        if (n <= 16) {
            const SessionResult honest =
                run_session(x, y, schedule, rand, SessionOptions{CodewordSelection::search});
            const SessionState rec =
                reconstruct_from_transcript(honest.transcript, schedule, rand);
            if (rec.u != honest.bob.u) {
                res.passed = false;
                res.detail = "transcript-only reconstruction mismatch";
                return res;
            }
            ++reconstructed;
        }
    }
    res.detail = "10^5 round trips, 100 replays, " + std::to_string(reconstructed) +
                 " transcript-only reconstructions";
    return res;
}

CriterionResult criterion_dpi(const Ctx&) {
    CriterionResult res{"10 dpi dominance and maximal correlation", true, "", 0};
    const double ms[] = {15, 100, 1000, 10000};
    const double ds[] = {0.1, 0.5, 0.9};
    double worst_gap = 1e300, worst_rho = 0;
    for (double m : ms)
        for (double d : ds) {
            const Joint2x2Law law = biased_law(m, d);
            const double bound = chi2_sstar_bound(m, d);
            const double grid = sstar1_grid(law, 3000);
            worst_gap = std::min(worst_gap, bound * (1.0 + 1e-6) - grid);
            const double rho_err = std::fabs(maximal_correlation(law) - d / (m - 1.0));
            worst_rho = std::max(worst_rho, rho_err);
        }
    if (worst_gap < 0 || worst_rho > 1e-10) res.passed = false;
    res.detail = "min bound-grid gap " + fmt(worst_gap) + "; max |rho - delta/(m-1)| = " + fmt(worst_rho);
    return res;
}

CriterionResult criterion_iprojection(const Ctx&) {
    CriterionResult res{"11 i-projection and curvature ratio", true, "", 0};
    std::ostringstream detail;
    constexpr double kTol = 1e-10;

    // convergence across assorted laws and targets
    const Joint2x2Law laws[] = {biased_law(20, 0.5), biased_law(100, 0.9), small_p_law(0.02, 0.1),
                                small_p_law(0.05, 0.05), biased_law(15, 0.0)};
    const double targets[][2] = {{0.03, 0.07}, {0.2, 0.4}, {0.5, 0.5}, {0.01, 0.9}};
    for (const auto& law : laws)
        for (const auto& t : targets) {
            const ProjectionResult pr = iproject(law, t[0], t[1], kTol);
            if (!pr.converged || pr.iterations > 10000) res.passed = false;
        }

    // exact fixed point
    const double p = 0.02, d = 0.1;
    const ProjectionResult fixed = iproject(small_p_law(p, d), p, p, kTol);
    const double lambda_err = std::fabs(fixed.lambda - d * p * p);
    if (lambda_err > 1e-17) res.passed = false;

    // product law projects to the product of targets
    const ProjectionResult prod = iproject(biased_law(20, 0.0), 0.3, 0.6, kTol);
    if (std::fabs(prod.lambda) > 10 * kTol) res.passed = false;

    // curvature ratio envelope over the (alpha, beta) grid
    double sup_const = 0, env_min = 1e300, env_max = 0;
    const double ps[] = {0.01, 0.02, 0.05};
    const double dsweep[] = {0.05, 0.1};
    for (double pp : ps)
        for (double dd : dsweep) {
            double sup = 0;
            for (int i = 0; i < 50; ++i)
                for (int j = 0; j < 50; ++j) {
                    const double a = 0.1 * pp * std::pow(100.0, i / 49.0);
                    const double b = 0.1 * pp * std::pow(100.0, j / 49.0);
                    if (std::fabs(a - pp) < 1e-12 && std::fabs(b - pp) < 1e-12) continue;
                    sup = std::max(sup, phi_psi_ratio(pp, dd, a, b));
                }
            const double normalized = sup / (pp * dd * dd);
            env_min = std::min(env_min, normalized);
            env_max = std::max(env_max, normalized);
            if (pp == 0.02 && dd == 0.1) sup_const = normalized;
        }
    if (sup_const > 50.0) res.passed = false;
    if (env_max / env_min >= 10.0) res.passed = false;
    detail << "lambda fixed-point error " << fmt(lambda_err) << "; sup(phi/psi)/(p d^2) = "
           << fmt(sup_const) << " (limit 50); envelope spread " << fmt(env_max / env_min)
           << " (limit 10)";
    res.detail = detail.str();
    return res;
}

CriterionResult criterion_determinism(const Ctx& ctx) {
    CriterionResult res{"12 sweep determinism", true, "", 0};
    namespace fs = std::filesystem;
    const fs::path dir = ctx.opts.scratch_dir.empty()
                             ? fs::temp_directory_path() / "fewbits-selftest"
                             : fs::path(ctx.opts.scratch_dir);
    fs::create_directories(dir);
    ExperimentConfig cfg;
    cfg.k_grid = {4096.0, 16384.0};
    cfg.trials = 3;
    cfg.seed = prf64(ctx.opts.seed, 12, 0, 0);
    cfg.threads = 2;
    const SweepResult a = run_sweep(cfg);
    cfg.threads = 1;
    const SweepResult b = run_sweep(cfg);
    const fs::path pa = dir / "sweep_a.csv", pb = dir / "sweep_b.csv";
    write_records_csv(pa.string(), a.records);
    write_records_csv(pb.string(), b.records);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string ca = slurp(pa), cb = slurp(pb);
    res.passed = !ca.empty() && ca == cb;
    res.detail = res.passed ? "byte-identical CSV across repeated runs and thread counts"
                            : "CSV outputs differ";
    return res;
}

}  // namespace

SelftestReport run_selftest(const SelftestOptions& opts, std::ostream& log) {
    Ctx ctx;
    ctx.opts = opts;
    ctx.trials_big = opts.quick ? 60 : 400;
    ctx.trials_identity = opts.quick ? 40 : 200;
    ctx.n_big = opts.quick ? 4000 : 20000;

    SelftestReport report;
    auto run = [&](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult r = fn();
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.results.push_back(std::move(r));
    };

    // criteria 1 and 5 run first; criteria 2-4 audit their batches
    run([&] { return criterion_unbiasedness(ctx); });
    run([&] { return criterion_rates(ctx); });
    run([&] { return criterion_mse_bound(ctx); });
    run([&] { return criterion_comm_oneway(ctx); });
    run([&] { return criterion_comm_interactive(ctx); });
    run([&] { return criterion_normalizer_identity(ctx); });
    run([&] { return criterion_theorem5(ctx); });
    run([&] { return criterion_kernels(ctx); });
    run([&] { return criterion_coding_replay(ctx); });
    run([&] { return criterion_dpi(ctx); });
    run([&] { return criterion_iprojection(ctx); });
    run([&] { return criterion_determinism(ctx); });

    std::sort(report.results.begin(), report.results.end(),
              [](const CriterionResult& a, const CriterionResult& b) {
                  return std::stoi(a.id) < std::stoi(b.id);
              });
    report.all_passed = true;
    for (const CriterionResult& r : report.results) {
        log << (r.passed ? "[PASS] " : "[FAIL] ") << "criterion " << r.id << ": " << r.detail
            << " (" << fmt(r.seconds, "%.1f") << "s)\n";
        report.all_passed &= r.passed;
    }
    log << (report.all_passed ? "all criteria passed\n" : "some criteria FAILED\n") << std::flush;
    return report;
}

}  // namespace fewbits
