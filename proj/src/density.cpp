#include "fewbits/density.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace fewbits {

namespace {

std::vector<double> center_point(int d) { return std::vector<double>(d, 0.5); }

double bump_radius(const TestDensity& td) { return std::pow(td.m, -1.0 / td.d); }

}  // namespace

TestDensity make_test_density(int d, double m, double delta) {
    if (d < 1) throw ParameterDomainError("test density: d must be >= 1");
    if (!(m > 1.0)) throw ParameterDomainError("test density: m must exceed 1");
    if (!(delta >= -1.0) || !(delta <= m - 1.0))
        throw ParameterDomainError("test density: delta must lie in [-1, m-1]");
    TestDensity td{d, m, delta, center_point(d), center_point(d)};
    const double radius = bump_radius(td);
    for (int j = 0; j < d; ++j)
        if (td.x0[j] - radius < 0.0 || td.x0[j] + radius > 1.0)
            throw SupportOverflowError("test density: scaled bump support leaves the unit cube");
    return td;
}

double bump_profile(double t) {
    if (t <= -1.0 || t >= 1.0) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

namespace {

double bump_nd(const TestDensity& td, std::span<const double> x, const std::vector<double>& c) {
    const double scale = std::pow(td.m, 1.0 / td.d);
    double f = 1.0;
    for (int j = 0; j < td.d; ++j) f *= bump_profile(scale * (x[j] - c[j]));
    return f;
}

bool in_unit_cube(std::span<const double> x) {
    for (double v : x)
        if (v < 0.0 || v > 1.0) return false;
    return true;
}

}  // namespace

double test_density_value(const TestDensity& td, std::span<const double> x,
                          std::span<const double> y) {
    if (!in_unit_cube(x) || !in_unit_cube(y)) return 0.0;
    const double fx = bump_nd(td, x, td.x0);
    const double fy = bump_nd(td, y, td.y0);
    const double a = 1.0 / (td.m - 1.0);
    const double b = 1.0 / (1.0 - 1.0 / td.m);
    return 1.0 + td.delta * (b * fx - a) * (b * fy - a);
}

double test_density_truth(const TestDensity& td) {
    const double a = 1.0 / (td.m - 1.0);
    const double b = 1.0 / (1.0 - 1.0 / td.m);
    // f(0) = 1 at the bump center
    const double bracket = b - a;
    return 1.0 + td.delta * bracket * bracket;
}

namespace {

// one coordinate of the bump law via rejection from Uniform(-1,1)
double sample_bump_coord(CounterRng& rng) {
    for (;;) {
        const double t = 2.0 * rng.next_unit() - 1.0;
        if (rng.next_unit() < bump_profile(t)) return t;
    }
}

void sample_conditional(const TestDensity& td, int latent, const std::vector<double>& c,
                        CounterRng& rng, double* out) {
    const double radius = bump_radius(td);
    const double scale = 1.0 / radius;
    if (latent == 0) {
        for (int j = 0; j < td.d; ++j) out[j] = c[j] + radius * sample_bump_coord(rng);
        return;
    }
    // density (m/(m-1)) (1 - f(scale (x - c))) on the unit cube
    for (;;) {
        double f = 1.0;
        for (int j = 0; j < td.d; ++j) {
            out[j] = rng.next_unit();
            f *= bump_profile(scale * (out[j] - c[j]));
        }
        if (rng.next_unit() >= f) return;
    }
}

}  // namespace

std::vector<double> sample_test_density(const TestDensity& td, std::int64_t n, CounterRng& rng) {
    // cell thresholds of the latent 2x2 law (fixed order 00, 01, 10, 11);
    // the matrix formula is valid for any m > 1, unlike the protocol family
    const Mat2 p = BernoulliFamily{td.m, td.m, td.delta}.matrix();
    const double c00 = p(0, 0);
    const double c01 = c00 + p(0, 1);
    const double c10 = c01 + p(1, 0);

    std::vector<double> out(static_cast<std::size_t>(n) * 2 * td.d);
    for (std::int64_t l = 0; l < n; ++l) {
        const double u = rng.next_unit();
        const int xb = u < c01 ? 0 : 1;
        const int yb = (u < c00 || (u >= c01 && u < c10)) ? 0 : 1;
        double* row = out.data() + static_cast<std::size_t>(l) * 2 * td.d;
        sample_conditional(td, xb, td.x0, rng, row);
        sample_conditional(td, yb, td.y0, rng, row + td.d);
    }
    return out;
}

bool BinarizationMap::x_outside(std::span<const double> x) const {
    for (std::size_t j = 0; j < x0.size(); ++j)
        if (std::fabs(x[j] - x0[j]) > h) return true;
    return false;
}

bool BinarizationMap::y_outside(std::span<const double> y) const {
    for (std::size_t j = 0; j < y0.size(); ++j)
        if (std::fabs(y[j] - y0[j]) > h) return true;
    return false;
}

namespace {

constexpr double kOneWayComm = 2.2;
constexpr double kInteractiveComm = 13.0;

DensityPlan plan_for_budget(const DensityConfig& cfg, double budget) {
    if (!(budget > 2.0)) throw BudgetTooSmallError("plan: budget must exceed 2 bits");
    DensityPlan p;
    const double exponent = cfg.d / (cfg.d + 2.0 * cfg.beta);
    if (cfg.mode == Mode::interactive) {
        p.m = std::pow(budget, exponent);
        if (!(p.m > 10.0))
            throw BudgetTooSmallError("plan: interactive scale m <= 10 at this budget");
        p.m1 = p.m2 = p.m;
        p.schedule = tetration_schedule(p.m);
        p.n = static_cast<std::int64_t>(p.m * budget * std::numbers::ln2 /
                                        (kInteractiveComm * (1.0 + cfg.delta_max)));
    } else {
        p.m = std::pow(budget / std::log2(budget), exponent);
        if (!(p.m > 10.0))
            throw BudgetTooSmallError("plan: one-way scale m1 <= 10 at this budget");
        p.m1 = p.m2 = p.m;
        p.schedule = one_way_schedule(p.m);
        p.n = static_cast<std::int64_t>(
            (budget - 1.0) * p.m /
            (kOneWayComm * (1.0 + cfg.delta_max) * std::log2(p.m / 10.0)));
    }
    p.h = 0.5 * std::pow(1.0 / p.m, 1.0 / cfg.d);
    if (p.n < 1) throw BudgetTooSmallError("plan: derived blocklength is zero");
    return p;
}

}  // namespace

DensityPlan plan(const DensityConfig& cfg) {
    if (cfg.d < 1) throw ParameterDomainError("plan: d must be >= 1");
    if (!(cfg.beta > 0.0)) throw ParameterDomainError("plan: beta must be positive");
    return plan_for_budget(cfg, cfg.k);
}

namespace {

int kernel_order_for(double beta) {
    if (beta <= 2.0) return 1;
    // largest integer strictly below beta
    int l = static_cast<int>(std::ceil(beta)) - 1;
    if (static_cast<double>(l) >= beta) --l;
    return std::max(l, 1);
}

struct SubBoxes {
    KernelSpec spec;
    std::vector<std::vector<int>> boxes;  // all radius vectors in {1..k0}^d
    std::vector<double> weight;           // prod_j c_{a_j}
    std::vector<double> radius_prod;      // prod_j a_j
};

SubBoxes enumerate_boxes(int order, int d) {
    SubBoxes sb;
    sb.spec = kernel_coeffs(order, d);
    std::vector<int> idx(d, 1);
    for (;;) {
        double w = 1.0, rp = 1.0;
        for (int j = 0; j < d; ++j) {
            w *= sb.spec.coeffs[idx[j] - 1];
            rp *= idx[j];
        }
        sb.boxes.push_back(idx);
        sb.weight.push_back(w);
        sb.radius_prod.push_back(rp);
        int j = 0;
        while (j < d && ++idx[j] > sb.spec.k0) idx[j++] = 1;
        if (j == d) break;
    }
    return sb;
}

template <typename MakeSource>
DensityEstimate estimate_density_impl(const DensityConfig& cfg, std::uint64_t seed,
                                      double truth, MakeSource&& make_source) {
    const int order = kernel_order_for(cfg.beta);
    const SubBoxes sb = enumerate_boxes(order, cfg.d);
    const auto nsub = sb.boxes.size() * sb.boxes.size();
    const double sub_budget = cfg.k / static_cast<double>(nsub);

    const DensityPlan base = plan_for_budget(cfg, sub_budget);
    const double k0d = sb.radius_prod.back();  // prod of the largest radii
    if (!(base.m / k0d > 10.0))
        throw BudgetTooSmallError("estimate_density: largest kernel box drops below scale 10");

    DensityEstimate out;
    out.base_plan = base;
    out.truth = truth;
    const double vol_factor = std::pow(4.0, cfg.d);
    const std::vector<double> x0 = cfg.x0.empty() ? center_point(cfg.d) : cfg.x0;
    const std::vector<double> y0 = cfg.y0.empty() ? center_point(cfg.d) : cfg.y0;

    std::size_t sub_index = 0;
    for (std::size_t ai = 0; ai < sb.boxes.size(); ++ai) {
        for (std::size_t bi = 0; bi < sb.boxes.size(); ++bi, ++sub_index) {
            const double m1 = base.m / sb.radius_prod[ai];
            const double m2 = base.m / sb.radius_prod[bi];
            Schedule schedule;
            std::int64_t n = 0;
            if (cfg.mode == Mode::interactive) {
                const double mm = std::min(m1, m2);
                schedule = tetration_schedule(mm);
                n = static_cast<std::int64_t>(mm * sub_budget * std::numbers::ln2 /
                                              (kInteractiveComm * (1.0 + cfg.delta_max)));
            } else {
                schedule = one_way_schedule(m1);
                n = static_cast<std::int64_t>(
                    (sub_budget - 1.0) * m1 /
                    (kOneWayComm * (1.0 + cfg.delta_max) * std::log2(m1 / 10.0)));
            }
            if (n < 1) throw BudgetTooSmallError("estimate_density: sub-estimation blocklength is zero");

            const auto& avec = sb.boxes[ai];
            const auto& bvec = sb.boxes[bi];
            auto source = make_source(sub_index, n);
            std::vector<std::uint8_t> xbits(static_cast<std::size_t>(n));
            std::vector<std::uint8_t> ybits(static_cast<std::size_t>(n));
            for (std::int64_t l = 0; l < n; ++l) {
                const double* row = source();
                bool xo = false, yo = false;
                for (int j = 0; j < cfg.d; ++j) {
                    if (std::fabs(row[j] - x0[j]) > avec[j] * base.h) xo = true;
                    if (std::fabs(row[cfg.d + j] - y0[j]) > bvec[j] * base.h) yo = true;
                }
                xbits[static_cast<std::size_t>(l)] = xo ? 1 : 0;
                ybits[static_cast<std::size_t>(l)] = yo ? 1 : 0;
            }
            const std::uint64_t session_seed =
                prf64(seed, 0x73657373ULL, static_cast<std::uint64_t>(cfg.mode == Mode::oneway),
                      sub_index);
            const SessionResult session =
                run_session(xbits, ybits, schedule, SharedRandomness{session_seed});
            const ScoreTable table = build_score_table(make_family(m1, m2, 0.0), schedule);
            const EstimateReport rep = estimate(session, ybits, Party::bob, table, cfg.delta_max);
            double dh = rep.delta_hat;
            if (cfg.clamp) dh = std::min(std::max(dh, -1.0), std::min(m1, m2) - 1.0);

            out.p_hat += sb.weight[ai] * sb.weight[bi] * sb.radius_prod[ai] * sb.radius_prod[bi] *
                         vol_factor * (1.0 + dh);
            out.bits_used += static_cast<double>(session.transcript.bit_count);
            if (ai == 0 && bi == 0) out.delta_hat = dh;
        }
    }
    return out;
}

}  // namespace

DensityEstimate estimate_density(const DensityConfig& cfg, const TestDensity& td,
                                 std::uint64_t seed) {
    if (td.d != cfg.d) throw ParameterDomainError("estimate_density: dimension mismatch");
    struct Source {
        std::vector<double> buffer;
        std::size_t next = 0;
        int width = 0;
        const double* operator()() {
            const double* row = buffer.data() + next * width;
            ++next;
            return row;
        }
    };
    auto make_source = [&](std::size_t sub_index, std::int64_t n) {
        CounterRng rng(prf64(seed, stream_tag::samples, sub_index, 0), stream_tag::samples);
        Source s;
        s.width = 2 * cfg.d;
        s.buffer = sample_test_density(td, n, rng);
        return s;
    };
    return estimate_density_impl(cfg, seed, test_density_truth(td), make_source);
}

DensityEstimate estimate_density_from_samples(const DensityConfig& cfg,
                                              std::span<const double> samples,
                                              std::uint64_t seed, double truth) {
    const std::size_t width = 2 * static_cast<std::size_t>(cfg.d);
    const std::size_t available = samples.size() / width;
    std::size_t consumed = 0;
    struct Source {
        const double* data;
        std::size_t width;
        const double* operator()() {
            const double* row = data;
            data += width;
            return row;
        }
    };
    auto make_source = [&](std::size_t, std::int64_t n) {
        if (consumed + static_cast<std::size_t>(n) > available)
            throw BudgetTooSmallError("estimate_density: sample file holds too few rows");
        Source s{samples.data() + consumed * width, width};
        consumed += static_cast<std::size_t>(n);
        return s;
    };
    return estimate_density_impl(cfg, seed, truth, make_source);
}

std::vector<double> load_sample_file(const std::string& path, int d) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterDomainError("load_sample_file: cannot open " + path);
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    const std::size_t row_bytes = sizeof(double) * 2 * static_cast<std::size_t>(d);
    if (bytes % row_bytes != 0)
        throw ParameterDomainError("load_sample_file: size is not a whole number of 2d rows");
    std::vector<double> out(bytes / sizeof(double));
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw ParameterDomainError("load_sample_file: short read");
    // stored little-endian; this library targets little-endian hosts
    return out;
}

}  // namespace fewbits
