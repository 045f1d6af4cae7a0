#include "fewbits/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <mpfr.h>

namespace fewbits {

std::uint64_t bernoulli_threshold(double alpha) {
    // P(V=0) = threshold / 2^53 = 1/alpha
    return static_cast<std::uint64_t>(std::llround(std::ldexp(1.0 / alpha, 53)));
}

std::uint64_t codeword_key(const mpz_class& j) {
    const std::uint64_t low = mpz_get_ui(j.get_mpz_t());
    const std::uint64_t len = mpz_sizeinbase(j.get_mpz_t(), 2);
    return low ^ (len << 56);
}

bool use_search(double alpha, std::size_t zero_count, CodewordSelection mode) {
    if (mode == CodewordSelection::search) return true;
    if (mode == CodewordSelection::quantile) return false;
    if (zero_count == 0) return true;
    // expected scan cost is alpha^s * s bit derivations; keep it under ~2^20
    const double cost_log2 = static_cast<double>(zero_count) * std::log2(alpha) +
                             std::log2(static_cast<double>(zero_count));
    return cost_log2 <= 20.0;
}

namespace {

mpz_class select_by_search(const SharedRandomness& rand, std::uint32_t round, double alpha,
                           std::span<const std::uint32_t> zero_set) {
    const std::uint64_t thr = bernoulli_threshold(alpha);
    constexpr std::uint64_t cap = 1ull << 63;
    for (std::uint64_t j = 1;; ++j) {
        if (j > cap)
            throw CodewordOverflowError("select_codeword: search exceeded 2^63 candidates");
        const std::uint64_t len = 64 - static_cast<std::uint64_t>(__builtin_clzll(j));
        const std::uint64_t key = j ^ (len << 56);
        bool all_zero = true;
        for (std::uint32_t l : zero_set) {
            if (rand.codeword_bit(round, key, l, thr)) {
                all_zero = false;
                break;
            }
        }
        if (all_zero) return mpz_class(static_cast<unsigned long>(j));
    }
}

// Exact geometric quantile: j = ceil(ln W / ln(1 - alpha^{-s})) with W a
// uniform built from enough keyed words to pin the integer part of a number
// with ~s*log2(alpha) bits.
mpz_class select_by_quantile(const SharedRandomness& rand, std::uint32_t round, double alpha,
                             std::size_t zero_count) {
    if (zero_count == 0) return 1;
    const double result_bits = static_cast<double>(zero_count) * std::log2(alpha);
    const auto prec = static_cast<mpfr_prec_t>(result_bits + 192.0);
    const std::size_t nwords = (static_cast<std::size_t>(prec) + 63) / 64;

    mpz_class wz = 0;
    for (std::size_t i = 0; i < nwords; ++i) {
        const auto w = static_cast<unsigned long>(rand.quantile_word(round, i));
        mpz_mul_2exp(wz.get_mpz_t(), wz.get_mpz_t(), 64);
        wz |= mpz_class(w);
    }
    if (wz == 0) wz = 1;

    mpfr_t w, q, denom, ratio;
    mpfr_inits2(prec, w, q, denom, ratio, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_z(w, wz.get_mpz_t(), MPFR_RNDN);
    mpfr_mul_2si(w, w, -64 * static_cast<long>(nwords), MPFR_RNDN);
    mpfr_log(w, w, MPFR_RNDN);  // ln W < 0

    mpfr_set_d(q, 1.0 / alpha, MPFR_RNDN);
    mpfr_pow_ui(q, q, static_cast<unsigned long>(zero_count), MPFR_RNDN);
    mpfr_neg(q, q, MPFR_RNDN);
    mpfr_log1p(denom, q, MPFR_RNDN);  // ln(1 - alpha^{-s}) < 0

    mpfr_div(ratio, w, denom, MPFR_RNDN);
    mpfr_ceil(ratio, ratio);
    mpz_class j;
    mpfr_get_z(j.get_mpz_t(), ratio, MPFR_RNDN);
    mpfr_clears(w, q, denom, ratio, static_cast<mpfr_ptr>(nullptr));
    if (j < 1) j = 1;
    return j;
}

}  // namespace

mpz_class select_codeword(const SharedRandomness& rand, std::uint32_t round, double alpha,
                          std::span<const std::uint32_t> zero_set, CodewordSelection mode) {
    if (!(alpha > 1.0))
        throw ParameterDomainError("select_codeword: alpha must exceed 1");
    if (use_search(alpha, zero_set.size(), mode))
        return select_by_search(rand, round, alpha, zero_set);
    return select_by_quantile(rand, round, alpha, zero_set.size());
}

std::vector<std::uint8_t> Transcript::serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(6 + bits.size());
    out.push_back(static_cast<std::uint8_t>(rounds & 0xff));
    out.push_back(static_cast<std::uint8_t>(rounds >> 8));
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>((n >> (8 * i)) & 0xff));
    out.insert(out.end(), bits.begin(), bits.end());
    return out;
}

Transcript Transcript::deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 6)
        throw MalformedTranscriptError("transcript: truncated header");
    Transcript t;
    t.rounds = static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
    t.n = 0;
    for (int i = 0; i < 4; ++i)
        t.n |= static_cast<std::uint32_t>(bytes[2 + i]) << (8 * i);
    t.bits.assign(bytes.begin() + 6, bytes.end());
    BitReader reader(t.bits.data(), 8 * t.bits.size());
    t.round_indices.reserve(t.rounds);
    std::size_t total = 0;
    for (std::uint16_t i = 0; i < t.rounds; ++i) {
        std::size_t used = 0;
        try {
            t.round_indices.push_back(elias_gamma_decode(reader, &used));
        } catch (const MalformedTranscriptError&) {
            throw MalformedTranscriptError("transcript: truncated codeword");
        }
        total += used;
    }
    if (reader.remaining() >= 8)
        throw MalformedTranscriptError("transcript: trailing bytes after last codeword");
    BitReader pad = reader;
    while (pad.remaining() > 0)
        if (pad.read()) throw MalformedTranscriptError("transcript: nonzero padding");
    t.bit_count = total;
    return t;
}

void apply_codeword(SessionState& state, std::uint32_t round, const mpz_class& j,
                    const SharedRandomness& rand, double alpha, std::uint32_t n) {
    const std::uint64_t key = codeword_key(j);
    const std::uint64_t thr = bernoulli_threshold(alpha);
    std::vector<std::uint8_t> ui(n, 1);
    std::vector<std::uint32_t> next_active;
    next_active.reserve(state.active.size());
    for (std::uint32_t l : state.active) {
        const bool bit = rand.codeword_bit(round, key, l, thr);
        ui[l] = bit ? 1 : 0;
        if (!bit) next_active.push_back(l);
    }
    state.u.push_back(std::move(ui));
    state.active = std::move(next_active);
}

namespace {

void apply_forced(SessionState& state, std::uint32_t round, const mpz_class& j,
                  const SharedRandomness& rand, double alpha, std::uint32_t n,
                  std::span<const std::uint8_t> sender_bits) {
    const std::uint64_t key = codeword_key(j);
    const std::uint64_t thr = bernoulli_threshold(alpha);
    std::vector<std::uint8_t> ui(n, 1);
    std::vector<std::uint32_t> next_active;
    next_active.reserve(state.active.size());
    for (std::uint32_t l : state.active) {
        const bool bit = sender_bits[l] != 0 && rand.codeword_bit(round, key, l, thr);
        ui[l] = bit ? 1 : 0;
        if (!bit) next_active.push_back(l);
    }
    state.u.push_back(std::move(ui));
    state.active = std::move(next_active);
}

std::vector<std::uint32_t> all_indices(std::uint32_t n) {
    std::vector<std::uint32_t> v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

SessionResult run_session(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y,
                          const Schedule& schedule, const SharedRandomness& rand,
                          const SessionOptions& opts) {
    if (x.size() != y.size() || x.empty())
        throw ParameterDomainError("run_session: sample vectors must be nonempty and equal length");
    if (x.size() > 0xffffffffull)
        throw ParameterDomainError("run_session: n exceeds transcript header range");
    if (schedule.r > 0xffff)
        throw ParameterDomainError("run_session: r exceeds transcript header range");
    const auto n = static_cast<std::uint32_t>(x.size());

    SessionResult res;
    res.alice = SessionState{Party::alice, {}, all_indices(n)};
    res.bob = SessionState{Party::bob, {}, all_indices(n)};
    res.transcript.rounds = static_cast<std::uint16_t>(schedule.r);
    res.transcript.n = n;

    BitWriter writer;
    std::vector<std::uint32_t> zero_set;
    for (std::uint32_t i = 1; i <= static_cast<std::uint32_t>(schedule.r); ++i) {
        const double alpha = schedule.alphas[i - 1];
        if (!(alpha > 1.0))
            throw ParameterDomainError("run_session: alpha must exceed 1");
        const bool odd = (i % 2) == 1;
        const auto sender_bits = odd ? x : y;
        SessionState& sender = odd ? res.alice : res.bob;
        SessionState& receiver = odd ? res.bob : res.alice;

        zero_set.clear();
        for (std::uint32_t l : sender.active)
            if (sender_bits[l] == 0) zero_set.push_back(l);

        const bool searched = use_search(alpha, zero_set.size(), opts.selection);
        const mpz_class j = searched
                                ? select_codeword(rand, i, alpha, zero_set, CodewordSelection::search)
                                : select_codeword(rand, i, alpha, zero_set, CodewordSelection::quantile);

        if (searched) {
            // the minimum-index property makes the zero positions come out of
            // the array itself, so each party derives its own copy
            apply_codeword(sender, i, j, rand, alpha, n);
            apply_codeword(receiver, i, j, rand, alpha, n);
        } else {
            apply_forced(sender, i, j, rand, alpha, n, sender_bits);
            receiver.u.push_back(sender.u.back());
            receiver.active = sender.active;
        }

        res.transcript.round_indices.push_back(j);
        elias_gamma_encode(j, writer);
    }
    res.transcript.bits = writer.bytes();
    res.transcript.bit_count = writer.bit_count();
    return res;
}

SessionState reconstruct_from_transcript(const Transcript& t, const Schedule& schedule,
                                         const SharedRandomness& rand) {
    if (t.rounds != schedule.r)
        throw MalformedTranscriptError("reconstruct: round count does not match schedule");
    SessionState state{Party::bob, {}, all_indices(t.n)};
    for (std::uint32_t i = 1; i <= t.rounds; ++i)
        apply_codeword(state, i, t.round_indices[i - 1], rand, schedule.alphas[i - 1], t.n);
    return state;
}

SessionResult replay_session(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y,
                             const Schedule& schedule, const SharedRandomness& rand,
                             const Transcript& expected, const SessionOptions& opts) {
    SessionResult res = run_session(x, y, schedule, rand, opts);
    if (res.transcript.serialize() != expected.serialize())
        throw MalformedTranscriptError("replay: transcript mismatch");
    return res;
}

}  // namespace fewbits
