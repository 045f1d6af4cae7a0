#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace fewbits {

struct SelftestOptions {
    bool quick = false;     // reduced trial counts; smoke only, not the gate
    int threads = 0;        // 0: hardware concurrency
    std::uint64_t seed = 0x66657762ULL;
    std::string scratch_dir;  // defaults to a temp subdirectory
};

struct CriterionResult {
    std::string id;
    bool passed = false;
    std::string detail;
    double seconds = 0;
};

struct SelftestReport {
    std::vector<CriterionResult> results;
    bool all_passed = false;
};

// Runs the full verification suite, printing one pass/fail line per
// criterion to `log`.
SelftestReport run_selftest(const SelftestOptions& opts, std::ostream& log);

}  // namespace fewbits
