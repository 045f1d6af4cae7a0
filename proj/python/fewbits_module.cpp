#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fewbits/density.hpp"
#include "fewbits/dpi.hpp"
#include "fewbits/harness.hpp"
#include "fewbits/kernel.hpp"
#include "fewbits/selftest.hpp"

namespace py = pybind11;
using namespace fewbits;

namespace {

Mode mode_from_string(const std::string& s) {
    if (s == "oneway") return Mode::oneway;
    if (s == "interactive") return Mode::interactive;
    throw ParameterDomainError("mode must be 'oneway' or 'interactive'");
}

}  // namespace

PYBIND11_MODULE(_fewbits, m) {
    m.doc() = "two-party correlation and pointwise density estimation under bit budgets";

    py::register_exception<ParameterDomainError>(m, "ParameterDomainError", PyExc_ValueError);
    py::register_exception<BudgetTooSmallError>(m, "BudgetTooSmallError", PyExc_ValueError);
    py::register_exception<SupportOverflowError>(m, "SupportOverflowError", PyExc_ValueError);
    py::register_exception<MalformedTranscriptError>(m, "MalformedTranscriptError", PyExc_ValueError);
    py::register_exception<DegenerateScheduleError>(m, "DegenerateScheduleError", PyExc_ValueError);

    m.def("family_matrix", [](double m1, double m2, double delta) {
        const Mat2 p = make_family(m1, m2, delta).matrix();
        return std::vector<std::vector<double>>{{p(0, 0), p(0, 1)}, {p(1, 0), p(1, 1)}};
    }, py::arg("m1"), py::arg("m2"), py::arg("delta"));

    py::class_<Schedule>(m, "Schedule")
        .def_readonly("r", &Schedule::r)
        .def_readonly("alphas", &Schedule::alphas)
        .def("__repr__", [](const Schedule& s) { return schedule_to_json(s); });

    m.def("one_way_schedule", &one_way_schedule, py::arg("m1"));
    m.def("tetration_schedule", &tetration_schedule, py::arg("m"));
    m.def("predicted_bounds", [](const Schedule& s, double m1, double m2) {
        const BoundReport b = predicted_bounds(s, m1, m2);
        return py::dict(py::arg("comm_odd") = b.comm_odd, py::arg("comm_even") = b.comm_even,
                        py::arg("info_odd") = b.info_odd, py::arg("info_even") = b.info_even);
    }, py::arg("schedule"), py::arg("m1"), py::arg("m2"));

    m.def("elias_gamma_encode", [](unsigned long j) {
        BitWriter w;
        elias_gamma_encode(mpz_class(j), w);
        std::string bits;
        BitReader r(w.bytes().data(), w.bit_count());
        for (std::size_t i = 0; i < w.bit_count(); ++i) bits += r.read() ? '1' : '0';
        return bits;
    }, py::arg("j"));
    m.def("elias_gamma_decode", [](const std::string& bits) {
        BitWriter w;
        for (char c : bits) w.push(c == '1');
        BitReader r(w.bytes().data(), w.bit_count());
        std::size_t used = 0;
        const mpz_class j = elias_gamma_decode(r, &used);
        return py::make_tuple(static_cast<unsigned long>(j.get_ui()), used);
    }, py::arg("bits"));

    m.def("score_normalizers", [](double m1, double m2, const Schedule& s) {
        const ScoreTable t = build_score_table(make_family(m1, m2, 0.0), s);
        return py::make_tuple(t.normalizer_a, t.normalizer_b);
    }, py::arg("m1"), py::arg("m2"), py::arg("schedule"));

    m.def("bernoulli_trial", [](double m1, double m2, double delta, unsigned n,
                                const std::string& mode, std::uint64_t seed) {
        const Schedule s = mode_from_string(mode) == Mode::oneway
                               ? one_way_schedule(m1)
                               : tetration_schedule(std::min(m1, m2));
        const BernoulliTrial t = run_bernoulli_trial(make_family(m1, m2, delta), s, n, seed);
        return py::dict(py::arg("delta_hat") = t.report.delta_hat,
                        py::arg("bits") = t.bits_used,
                        py::arg("normalizer") = t.report.normalizer,
                        py::arg("predicted_mse") = t.report.predicted_mse);
    }, py::arg("m1"), py::arg("m2"), py::arg("delta"), py::arg("n"), py::arg("mode"),
       py::arg("seed"));

    m.def("density_trial", [](double k, int d, double beta, const std::string& mode,
                              std::uint64_t seed, double delta_max, bool clamp) {
        DensityConfig cfg;
        cfg.d = d;
        cfg.beta = beta;
        cfg.k = k;
        cfg.mode = mode_from_string(mode);
        cfg.delta_max = delta_max;
        cfg.clamp = clamp;
        const double m_td = std::pow(k, d / (d + 2.0 * beta));
        const double delta_td = std::pow(m_td, -beta / d);
        const DensityEstimate est = estimate_density(cfg, make_test_density(d, m_td, delta_td), seed);
        return py::dict(py::arg("p_hat") = est.p_hat, py::arg("truth") = est.truth,
                        py::arg("bits") = est.bits_used, py::arg("n") = est.base_plan.n,
                        py::arg("m") = est.base_plan.m, py::arg("r") = est.base_plan.schedule.r);
    }, py::arg("k"), py::arg("d") = 1, py::arg("beta") = 1.0, py::arg("mode") = "interactive",
       py::arg("seed") = 0, py::arg("delta_max") = 1.0, py::arg("clamp") = false);

    m.def("kernel_coeffs", [](int order) { return kernel_coeffs(order).coeffs; }, py::arg("order"));
    m.def("kernel_moment", [](int order, int j) { return kernel_moment(kernel_coeffs(order), j); },
          py::arg("order"), py::arg("j"));

    m.def("chi2_sstar_bound", &chi2_sstar_bound, py::arg("m"), py::arg("delta"));
    m.def("maximal_correlation", [](double m, double delta) {
        return maximal_correlation(biased_law(m, delta));
    }, py::arg("m"), py::arg("delta"));
    m.def("sstar1_grid", [](double m, double delta, int grid_size) {
        return sstar1_grid(biased_law(m, delta), grid_size);
    }, py::arg("m"), py::arg("delta"), py::arg("grid_size") = 1000);
    m.def("iproject", [](double p, double delta, double alpha, double beta, double tol) {
        const ProjectionResult r = iproject(small_p_law(p, delta), alpha, beta, tol);
        return py::dict(py::arg("lambda_") = r.lambda, py::arg("iterations") = r.iterations,
                        py::arg("residual") = r.residual, py::arg("converged") = r.converged);
    }, py::arg("p"), py::arg("delta"), py::arg("alpha"), py::arg("beta"), py::arg("tol") = 1e-10);
    m.def("phi_psi_ratio", &phi_psi_ratio, py::arg("p"), py::arg("delta"), py::arg("alpha"),
          py::arg("beta"));

    m.def("fit_exponent", [](const std::vector<std::pair<double, double>>& pts) {
        const ExponentFit f = fit_exponent(pts);
        return py::make_tuple(f.slope, f.intercept, f.stderr_slope);
    }, py::arg("k_mse_points"));

    m.def("selftest", [](bool quick, std::uint64_t seed, int threads) {
        SelftestOptions opts;
        opts.quick = quick;
        if (seed != 0) opts.seed = seed;
        opts.threads = threads;
        std::ostringstream log;
        const SelftestReport rep = run_selftest(opts, log);
        py::list results;
        for (const CriterionResult& r : rep.results)
            results.append(py::dict(py::arg("id") = r.id, py::arg("passed") = r.passed,
                                    py::arg("detail") = r.detail));
        return py::dict(py::arg("all_passed") = rep.all_passed, py::arg("log") = log.str(),
                        py::arg("results") = results);
    }, py::arg("quick") = true, py::arg("seed") = 0, py::arg("threads") = 0);
}
