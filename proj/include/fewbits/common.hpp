#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fewbits {

enum class Party { alice, bob };
enum class Mode { oneway, interactive };

inline const char* to_string(Mode m) {
    return m == Mode::oneway ? "oneway" : "interactive";
}
inline const char* to_string(Party p) {
    return p == Party::alice ? "alice" : "bob";
}

// Parameter outside its admissible domain (m <= 10, delta out of range, ...).
struct ParameterDomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Bitstring does not decode as a valid transcript.
struct MalformedTranscriptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Schedule reveals no information (zero normalizer) or conditions on a
// zero-probability event.
struct DegenerateScheduleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Communication budget too small for the requested density plan.
struct BudgetTooSmallError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scaled bump support does not fit inside the unit cube.
struct SupportOverflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Codeword search exceeded the iteration cap.
struct CodewordOverflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- keyed counter-mode pseudo-random function ------------------------------
//
// All randomness in the library is derived from the SplitMix64 finalizer
// applied to chained 64-bit words.  The algorithm is fixed (no platform or
// library dependence), so seeded runs are reproducible byte-for-byte.

constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// prf64(seed, a, b, c): one keyed 64-bit word per (a, b, c).
constexpr std::uint64_t prf64(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

// Top 53 bits mapped to [0,1).
constexpr double unit_from_word(std::uint64_t w) {
    return static_cast<double>(w >> 11) * 0x1.0p-53;
}

// Sequential counter-mode stream, used wherever an ordinary RNG would be.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64() { return prf64(seed_, stream_, counter_++, 0); }
    double next_unit() { return unit_from_word(next_u64()); }
    bool next_bernoulli(double p_one) { return next_unit() < p_one; }

  private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

// Fixed stream tags so independent uses of the PRF never collide.
namespace stream_tag {
constexpr std::uint64_t codeword = 0x636F6465ULL;   // per-round codeword bits
constexpr std::uint64_t quantile = 0x7175616EULL;   // geometric quantile words
constexpr std::uint64_t samples = 0x73616D70ULL;    // density sampling
constexpr std::uint64_t bernoulli = 0x6265726EULL;  // bernoulli pair sampling
constexpr std::uint64_t trial = 0x7472696CULL;      // per-trial seed derivation
}  // namespace stream_tag

}  // namespace fewbits
