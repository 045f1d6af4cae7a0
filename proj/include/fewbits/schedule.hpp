#pragma once

#include <string>
#include <vector>

#include "fewbits/common.hpp"

namespace fewbits {

// Refinement factors for an r-round session.  Round 1 is an alice round and
// parities alternate.  A schedule is valid for (m1, m2) when every alpha
// exceeds 1, the odd-round product is at most m1/10 and the even-round
// product at most m2/10.
struct Schedule {
    int r = 0;
    std::vector<double> alphas;

    double odd_product() const;
    double even_product() const;
};

void validate_schedule(const Schedule& s, double m1, double m2);

// r = 1, alpha_1 = m1/10.
Schedule one_way_schedule(double m1);

// The doubling-exponent construction: r = 2*r0 with r0 the smallest integer
// such that exp(tetration2(r0) - 1) >= m/10; paired alphas
// exp(^k2 - ^(k-1)2) for k < r0 and (m/10)*exp(1 - ^(r0-1)2) for the last
// pair.  Odd and even products both equal m/10 exactly.
Schedule tetration_schedule(double m);

// ^n 2 (iterated exponentials of 2) as a double; n must stay small.
double tetration2(int n);

// Closed-form communication / information predictions for a valid schedule.
// comm_* are in nats per sample scaled by 1.1/m (multiply by log2(e) for
// bits); info_* are the small-delta information constants, in nats.
struct BoundReport {
    double comm_odd = 0;   // (1.1/m1) sum_odd ln(a_i) prod_{even j<i} 1/a_j
    double comm_even = 0;  // (1.1/m2) sum_even ln(a_i) prod_{odd j<i} 1/a_j
    double info_odd = 0;   // (1/(5 m1^2 m2)) prod_odd a_j
    double info_even = 0;  // (1/(5 m1 m2^2)) prod_even a_j
};

BoundReport predicted_bounds(const Schedule& s, double m1, double m2);

// {"r": r, "alphas": [...]} with 17 significant digits.
std::string schedule_to_json(const Schedule& s);
Schedule schedule_from_json(const std::string& text);

}  // namespace fewbits
