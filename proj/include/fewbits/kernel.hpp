#pragma once

#include <vector>

#include "fewbits/common.hpp"

namespace fewbits {

// Order-l kernel K(u) = sum_k c_k 1[-k,k](u) per dimension, tensorized over
// dim.  k0 = floor(l/2)+1 coefficients solve the moment system
//   2 sum_k k c_k = 1,   sum_k k^{j+1} c_k = 0 for even j in [2, l].
struct KernelSpec {
    int order = 1;
    int k0 = 1;
    int dim = 1;
    std::vector<double> coeffs;

    // one-dimensional section K(u)
    double value(double u) const;
};

KernelSpec kernel_coeffs(int order, int dim = 1);

// Exact per-dimension moment: sum_k 2 k^{j+1} c_k / (j+1) for even j, zero
// for odd j (evenness).
double kernel_moment(const KernelSpec& spec, int j);

}  // namespace fewbits
