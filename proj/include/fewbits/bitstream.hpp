#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <gmpxx.h>

#include "fewbits/common.hpp"

namespace fewbits {

// MSB-first bit accumulator: bit k of the stream is bit 7-(k mod 8) of byte
// k/8, and the final byte is zero-padded.
class BitWriter {
  public:
    void push(bool bit) {
        if (nbits_ % 8 == 0) bytes_.push_back(0);
        if (bit) bytes_.back() |= static_cast<std::uint8_t>(1u << (7 - nbits_ % 8));
        ++nbits_;
    }
    std::size_t bit_count() const { return nbits_; }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  private:
    std::vector<std::uint8_t> bytes_;
    std::size_t nbits_ = 0;
};

class BitReader {
  public:
    BitReader(const std::uint8_t* data, std::size_t nbits)
        : data_(data), nbits_(nbits) {}

    bool read() {
        if (pos_ >= nbits_)
            throw MalformedTranscriptError("bit reader: read past end of stream");
        const bool bit = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
        ++pos_;
        return bit;
    }
    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return nbits_ - pos_; }

  private:
    const std::uint8_t* data_;
    std::size_t nbits_;
    std::size_t pos_ = 0;
};

// Elias gamma code for j >= 1: floor(log2 j) zeros followed by the binary
// expansion of j, 2*floor(log2 j)+1 bits in total.
std::size_t elias_gamma_length(const mpz_class& j);
void elias_gamma_encode(const mpz_class& j, BitWriter& out);
mpz_class elias_gamma_decode(BitReader& in, std::size_t* bits_consumed = nullptr);

}  // namespace fewbits
