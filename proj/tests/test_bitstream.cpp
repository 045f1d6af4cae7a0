#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fewbits/bitstream.hpp"
#include "fewbits/common.hpp"

using namespace fewbits;

namespace {

std::string encode_to_string(const mpz_class& j) {
    BitWriter w;
    elias_gamma_encode(j, w);
    std::string s;
    BitReader r(w.bytes().data(), w.bit_count());
    for (std::size_t i = 0; i < w.bit_count(); ++i) s += r.read() ? '1' : '0';
    return s;
}

}  // namespace

TEST_CASE("small codewords") {
    CHECK(encode_to_string(1) == "1");
    CHECK(encode_to_string(2) == "010");
    CHECK(encode_to_string(3) == "011");
    CHECK(encode_to_string(23).size() == 9);
    CHECK(elias_gamma_length(23) == 9);
    CHECK_THROWS_AS(elias_gamma_length(mpz_class(0)), ParameterDomainError);
}

TEST_CASE("round trip with the length law") {
    BitWriter w;
    for (unsigned long j = 1; j <= 100000; ++j) elias_gamma_encode(mpz_class(j), w);
    BitReader r(w.bytes().data(), w.bit_count());
    std::size_t total = 0;
    for (unsigned long j = 1; j <= 100000; ++j) {
        std::size_t used = 0;
        CHECK(elias_gamma_decode(r, &used) == mpz_class(j));
        const auto expected = 2 * static_cast<std::size_t>(std::log2(static_cast<double>(j))) + 1;
        REQUIRE(used == expected);
        total += used;
    }
    CHECK(total == w.bit_count());
}

TEST_CASE("huge indices survive the round trip") {
    CounterRng rng(99, 1);
    for (int t = 0; t < 50; ++t) {
        mpz_class j = 1;
        const int bits = 1 + static_cast<int>(rng.next_u64() % 2000);
        for (int b = 0; b < bits; ++b) {
            j <<= 1;
            if (rng.next_bernoulli(0.5)) j |= 1;
        }
        BitWriter w;
        elias_gamma_encode(j, w);
        CHECK(w.bit_count() == 2 * static_cast<std::size_t>(mpz_sizeinbase(j.get_mpz_t(), 2) - 1) + 1);
        BitReader r(w.bytes().data(), w.bit_count());
        CHECK(elias_gamma_decode(r) == j);
    }
}

TEST_CASE("truncated streams are rejected") {
    BitWriter w;
    elias_gamma_encode(mpz_class(1000), w);
    BitReader r(w.bytes().data(), w.bit_count() - 3);
    CHECK_THROWS_AS(elias_gamma_decode(r), MalformedTranscriptError);

    // all-zero stream never reaches a stop bit
    const std::uint8_t zeros[4] = {0, 0, 0, 0};
    BitReader rz(zeros, 32);
    CHECK_THROWS_AS(elias_gamma_decode(rz), MalformedTranscriptError);
}

TEST_CASE("writer packs msb first") {
    BitWriter w;
    for (bool b : {true, false, true, true, false, false, false, true, true})
        w.push(b);
    CHECK(w.bytes().size() == 2);
    CHECK(w.bytes()[0] == 0b10110001);
    CHECK(w.bytes()[1] == 0b10000000);
}
