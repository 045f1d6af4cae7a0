#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <gmpxx.h>

#include "fewbits/bitstream.hpp"
#include "fewbits/common.hpp"
#include "fewbits/schedule.hpp"

namespace fewbits {

// Both parties derive the virtual codebook array V_{i,j}(l) lazily from a
// keyed PRF; nothing is ever materialized.  The derivation is fixed:
//   word = prf64(seed, codeword_tag ^ (round << 32), codeword_key(j), l)
//   V = 1  iff  (word >> 11) >= round(2^53 / alpha)
// so P(V = 0) = 1/alpha, and codeword_key folds the index to the low 64 bits
// XOR (bit length << 56).
struct SharedRandomness {
    std::uint64_t seed = 0;

    bool codeword_bit(std::uint32_t round, std::uint64_t key, std::uint32_t sample,
                      std::uint64_t threshold) const {
        const std::uint64_t w = prf64(seed, stream_tag::codeword ^ (static_cast<std::uint64_t>(round) << 32),
                                      key, sample);
        return (w >> 11) >= threshold;
    }
    std::uint64_t quantile_word(std::uint32_t round, std::uint64_t index) const {
        return prf64(seed, stream_tag::quantile ^ (static_cast<std::uint64_t>(round) << 32), index, 0);
    }
};

std::uint64_t bernoulli_threshold(double alpha);
std::uint64_t codeword_key(const mpz_class& j);

// How the minimum-index codeword is produced.
//  - search: literal minimum-index scan of the virtual array (cost grows as
//    alpha^|zero_set|; capped at 2^63 iterations).
//  - quantile: exact-in-distribution sampling of the same index through the
//    geometric quantile, evaluated in arbitrary precision so indices with
//    thousands of bits are handled.  Used automatically whenever the scan
//    would be too expensive.
enum class CodewordSelection { automatic, search, quantile };

bool use_search(double alpha, std::size_t zero_count, CodewordSelection mode);

mpz_class select_codeword(const SharedRandomness& rand, std::uint32_t round, double alpha,
                          std::span<const std::uint32_t> zero_set,
                          CodewordSelection mode = CodewordSelection::automatic);

// Prefix-coded message sequence.  Serialized layout: rounds as uint16 LE,
// n as uint32 LE, then the concatenated Elias gamma codewords packed
// MSB-first and zero-padded to a byte boundary.
struct Transcript {
    std::uint16_t rounds = 0;
    std::uint32_t n = 0;
    std::vector<mpz_class> round_indices;
    std::vector<std::uint8_t> bits;
    std::size_t bit_count = 0;

    std::vector<std::uint8_t> serialize() const;
    static Transcript deserialize(std::span<const std::uint8_t> bytes);
};

struct SessionState {
    Party party;
    std::vector<std::vector<std::uint8_t>> u;  // u[i-1][l], one vector per round
    std::vector<std::uint32_t> active;         // surviving indices after the last round
};

struct SessionResult {
    SessionState alice;
    SessionState bob;
    Transcript transcript;
};

// Receiver-side update: U_i(l) = V_{i,j}(l) for active l, 1 elsewhere.
// Appends the new round vector to state.u and shrinks state.active.
void apply_codeword(SessionState& state, std::uint32_t round, const mpz_class& j,
                    const SharedRandomness& rand, double alpha, std::uint32_t n);

struct SessionOptions {
    CodewordSelection selection = CodewordSelection::automatic;
};

// Runs the full r-round session over binarized sample vectors (0/1 bytes).
// Round 1 refines on x; parities alternate.
SessionResult run_session(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y,
                          const Schedule& schedule, const SharedRandomness& rand,
                          const SessionOptions& opts = {});

// Reconstructs the receiver view from a transcript alone (valid for sessions
// produced with search selection, where forced zeros are genuinely derived
// from the array).
SessionState reconstruct_from_transcript(const Transcript& t, const Schedule& schedule,
                                         const SharedRandomness& rand);

// Deterministically re-runs a session and checks that it reproduces the given
// transcript bit-for-bit; throws MalformedTranscriptError on mismatch.
SessionResult replay_session(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y,
                             const Schedule& schedule, const SharedRandomness& rand,
                             const Transcript& expected, const SessionOptions& opts = {});

}  // namespace fewbits
