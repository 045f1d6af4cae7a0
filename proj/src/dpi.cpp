#include "fewbits/dpi.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace fewbits {

Joint2x2Law make_law(double p00, double p01, double p10, double p11) {
    Joint2x2Law law;
    law.p[0][0] = p00;
    law.p[0][1] = p01;
    law.p[1][0] = p10;
    law.p[1][1] = p11;
    double sum = 0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            if (law.p[x][y] < 0)
                throw ParameterDomainError("make_law: negative entry");
            sum += law.p[x][y];
        }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ParameterDomainError("make_law: entries must sum to 1");
    if (!(law.px(0) > 0) || !(law.px(1) > 0) || !(law.py(0) > 0) || !(law.py(1) > 0))
        throw ParameterDomainError("make_law: marginals must be strictly positive");
    return law;
}

Joint2x2Law biased_law(double m, double delta) {
    if (!(m > 1.0)) throw ParameterDomainError("biased_law: m must exceed 1");
    const double s = delta / (m * m);
    const double q = 1.0 - 1.0 / m;
    return make_law(1.0 / (m * m) + s, q / m - s, q / m - s, q * q + s);
}

Joint2x2Law small_p_law(double p, double delta) {
    if (!(p > 0.0) || !(p < 1.0)) throw ParameterDomainError("small_p_law: p must be in (0,1)");
    const double q = 1.0 - p;
    return make_law(p * p * (1.0 + delta), p * q - p * p * delta, p * q - p * p * delta,
                    q * q + p * p * delta);
}

double chi2_sstar_bound(double m, double delta) {
    if (!(m > 1.0)) throw ParameterDomainError("chi2_sstar_bound: m must exceed 1");
    return delta * delta / (m * std::log(m) - m + 1.0);
}

double maximal_correlation(const Joint2x2Law& law) {
    Eigen::Matrix2d mat;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            mat(x, y) = law.p[x][y] / std::sqrt(law.px(x) * law.py(y));
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(mat);
    const double top = svd.singularValues()(0);
    if (std::fabs(top - 1.0) > 1e-9)
        throw ParameterDomainError("maximal_correlation: top singular value deviates from 1");
    return svd.singularValues()(1);
}

double binary_kl(double a, double p) {
    auto term = [](double u, double v) { return u > 0.0 ? u * std::log(u / v) : 0.0; };
    return term(a, p) + term(1.0 - a, 1.0 - p);
}

double mutual_information(const Joint2x2Law& law) {
    double i = 0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            if (law.p[x][y] > 0)
                i += law.p[x][y] * std::log(law.p[x][y] / (law.px(x) * law.py(y)));
    return std::max(i, 0.0);
}

double sstar1_grid(const Joint2x2Law& law, int grid_size) {
    if (grid_size < 10) throw ParameterDomainError("sstar1_grid: grid_size must be >= 10");
    const double cond[2][2] = {
        {law.p[0][0] / law.px(0), law.p[0][1] / law.px(0)},
        {law.p[1][0] / law.px(1), law.p[1][1] / law.px(1)},
    };
    const double py0 = law.py(0);
    double best = 0.0;
    // log-spaced q in (0, 1/2], mirrored to cover (1/2, 1)
    const double lo = std::log(1e-9), hi = std::log(0.5);
    for (int side = 0; side < 2; ++side) {
        for (int g = 0; g < grid_size; ++g) {
            double q = std::exp(lo + (hi - lo) * g / (grid_size - 1.0));
            if (side == 1) q = 1.0 - q;
            const double qx0 = q;
            const double qy0 = qx0 * cond[0][0] + (1.0 - qx0) * cond[1][0];
            const double dx = binary_kl(qx0, law.px(0));
            if (!(dx > 0.0)) continue;
            const double ratio = binary_kl(qy0, py0) / dx;
            if (ratio > best) best = ratio;
        }
    }
    return best;
}

ProjectionResult iproject(const Joint2x2Law& law, double alpha, double beta, double tol,
                          int max_iterations) {
    if (!(alpha > 0.0) || !(alpha < 1.0) || !(beta > 0.0) || !(beta < 1.0))
        throw ParameterDomainError("iproject: targets must be interior");
    if (!(tol > 0.0)) throw ParameterDomainError("iproject: tol must be positive");
    ProjectionResult res;
    res.matrix = law;
    const double rx[2] = {alpha, 1.0 - alpha};
    const double ry[2] = {beta, 1.0 - beta};
    auto residual = [&] {
        double r = 0;
        for (int x = 0; x < 2; ++x) r = std::max(r, std::fabs(res.matrix.px(x) - rx[x]));
        for (int y = 0; y < 2; ++y) r = std::max(r, std::fabs(res.matrix.py(y) - ry[y]));
        return r;
    };
    res.residual = residual();
    while (res.residual >= tol && res.iterations < max_iterations) {
        for (int x = 0; x < 2; ++x) {
            const double s = res.matrix.px(x);
            if (!(s > 0)) throw ParameterDomainError("iproject: row mass vanished");
            res.matrix.p[x][0] *= rx[x] / s;
            res.matrix.p[x][1] *= rx[x] / s;
        }
        for (int y = 0; y < 2; ++y) {
            const double s = res.matrix.py(y);
            if (!(s > 0)) throw ParameterDomainError("iproject: column mass vanished");
            res.matrix.p[0][y] *= ry[y] / s;
            res.matrix.p[1][y] *= ry[y] / s;
        }
        ++res.iterations;
        res.residual = residual();
    }
    res.converged = res.residual < tol;
    res.lambda = res.matrix.p[0][0] - alpha * beta;
    return res;
}

double phi_psi_ratio(double p, double delta, double alpha, double beta) {
    const double psi = binary_kl(alpha, p) + binary_kl(beta, p);
    if (!(psi > 0.0))
        throw ParameterDomainError("phi_psi_ratio: (alpha, beta) = (p, p) is excluded");
    const Joint2x2Law base = small_p_law(p, delta);
    constexpr double kTol = 1e-12;
    auto info = [&](double a, double b) {
        return mutual_information(iproject(base, a, b, kTol).matrix);
    };
    const double ipp = info(p, p);
    const double step = 1e-5 * p;
    const double ia = (info(p + step, p) - info(p - step, p)) / (2.0 * step);
    const double ib = (info(p, p + step) - info(p, p - step)) / (2.0 * step);
    const double phi = ipp - info(alpha, beta) + ia * (alpha - p) + ib * (beta - p);
    return phi / psi;
}

}  // namespace fewbits
