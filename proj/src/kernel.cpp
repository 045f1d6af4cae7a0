#include "fewbits/kernel.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace fewbits {

double KernelSpec::value(double u) const {
    double v = 0.0;
    const double a = std::fabs(u);
    for (int k = 1; k <= k0; ++k)
        if (a <= static_cast<double>(k)) v += coeffs[k - 1];
    return v;
}

KernelSpec kernel_coeffs(int order, int dim) {
    if (order < 1) throw ParameterDomainError("kernel_coeffs: order must be >= 1");
    if (dim < 1) throw ParameterDomainError("kernel_coeffs: dim must be >= 1");
    const int k0 = order / 2 + 1;
    Eigen::MatrixXd a(k0, k0);
    Eigen::VectorXd rhs(k0);
    // row 0: normalization; rows 1..: vanishing even moments j = 2, 4, ...
    for (int k = 1; k <= k0; ++k) a(0, k - 1) = 2.0 * k;
    rhs(0) = 1.0;
    for (int row = 1; row < k0; ++row) {
        const int j = 2 * row;
        for (int k = 1; k <= k0; ++k)
            a(row, k - 1) = std::pow(static_cast<double>(k), j + 1);
        rhs(row) = 0.0;
    }
    const Eigen::VectorXd c = a.partialPivLu().solve(rhs);
    KernelSpec spec;
    spec.order = order;
    spec.k0 = k0;
    spec.dim = dim;
    spec.coeffs.assign(c.data(), c.data() + k0);
    return spec;
}

double kernel_moment(const KernelSpec& spec, int j) {
    if (j < 0) throw ParameterDomainError("kernel_moment: j must be >= 0");
    if (j % 2 == 1) return 0.0;
    double m = 0.0;
    for (int k = 1; k <= spec.k0; ++k)
        m += 2.0 * std::pow(static_cast<double>(k), j + 1) * spec.coeffs[k - 1] / (j + 1);
    return m;
}

}  // namespace fewbits
