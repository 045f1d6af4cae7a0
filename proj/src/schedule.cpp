#include "fewbits/schedule.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace fewbits {

double Schedule::odd_product() const {
    double p = 1.0;
    for (int i = 1; i <= r; i += 2) p *= alphas[i - 1];
    return p;
}

double Schedule::even_product() const {
    double p = 1.0;
    for (int i = 2; i <= r; i += 2) p *= alphas[i - 1];
    return p;
}

void validate_schedule(const Schedule& s, double m1, double m2) {
    if (s.r < 1 || static_cast<int>(s.alphas.size()) != s.r)
        throw ParameterDomainError("schedule: r must be positive and match alphas");
    for (double a : s.alphas)
        if (!(a > 1.0))
            throw ParameterDomainError("schedule: every alpha must exceed 1");
    constexpr double slack = 1.0 + 1e-12;  // allow exact-boundary constructions
    if (s.odd_product() > (m1 / 10.0) * slack)
        throw ParameterDomainError("schedule: odd-round product exceeds m1/10");
    if (s.even_product() > (m2 / 10.0) * slack)
        throw ParameterDomainError("schedule: even-round product exceeds m2/10");
}

Schedule one_way_schedule(double m1) {
    if (!(m1 > 10.0))
        throw ParameterDomainError("one_way_schedule: m1 must exceed 10");
    return Schedule{1, {m1 / 10.0}};
}

double tetration2(int n) {
    double t = 1.0;
    for (int i = 0; i < n; ++i) t = std::exp2(t);
    return t;
}

Schedule tetration_schedule(double m) {
    if (!(m > 10.0))
        throw ParameterDomainError("tetration_schedule: m must exceed 10");
    const double target = m / 10.0;
    int r0 = 1;
    while (std::exp(tetration2(r0) - 1.0) < target) ++r0;
    Schedule s;
    s.r = 2 * r0;
    s.alphas.resize(s.r);
    for (int k = 1; k < r0; ++k) {
        const double a = std::exp(tetration2(k) - tetration2(k - 1));
        s.alphas[2 * k - 2] = a;
        s.alphas[2 * k - 1] = a;
    }
    const double last = target * std::exp(1.0 - tetration2(r0 - 1));
    s.alphas[2 * r0 - 2] = last;
    s.alphas[2 * r0 - 1] = last;
    return s;
}

BoundReport predicted_bounds(const Schedule& s, double m1, double m2) {
    BoundReport b;
    double inv_even_before = 1.0;  // prod over even j < i of 1/a_j
    double inv_odd_before = 1.0;
    double sum_odd = 0.0, sum_even = 0.0;
    for (int i = 1; i <= s.r; ++i) {
        const double a = s.alphas[i - 1];
        if (i % 2 == 1) {
            sum_odd += std::log(a) * inv_even_before;
            inv_odd_before /= a;
        } else {
            sum_even += std::log(a) * inv_odd_before;
            inv_even_before /= a;
        }
    }
    b.comm_odd = 1.1 / m1 * sum_odd;
    b.comm_even = 1.1 / m2 * sum_even;
    b.info_odd = s.odd_product() / (5.0 * m1 * m1 * m2);
    b.info_even = s.even_product() / (5.0 * m1 * m2 * m2);
    return b;
}

std::string schedule_to_json(const Schedule& s) {
    std::string out = "{\"r\": " + std::to_string(s.r) + ", \"alphas\": [";
    char buf[40];
    for (int i = 0; i < s.r; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", s.alphas[i]);
        out += buf;
        if (i + 1 < s.r) out += ", ";
    }
    out += "]}";
    return out;
}

Schedule schedule_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Schedule s;
    s.r = j.at("r").get<int>();
    s.alphas = j.at("alphas").get<std::vector<double>>();
    if (static_cast<int>(s.alphas.size()) != s.r)
        throw ParameterDomainError("schedule_from_json: r does not match alphas");
    return s;
}

}  // namespace fewbits
