#include "fewbits/bitstream.hpp"

namespace fewbits {

std::size_t elias_gamma_length(const mpz_class& j) {
    if (j < 1) throw ParameterDomainError("elias gamma: index must be >= 1");
    const std::size_t bits = mpz_sizeinbase(j.get_mpz_t(), 2);  // floor(log2 j)+1
    return 2 * (bits - 1) + 1;
}

void elias_gamma_encode(const mpz_class& j, BitWriter& out) {
    if (j < 1) throw ParameterDomainError("elias gamma: index must be >= 1");
    const std::size_t bits = mpz_sizeinbase(j.get_mpz_t(), 2);
    for (std::size_t i = 0; i + 1 < bits; ++i) out.push(false);
    for (std::size_t i = bits; i-- > 0;)
        out.push(mpz_tstbit(j.get_mpz_t(), static_cast<mp_bitcnt_t>(i)) != 0);
}

mpz_class elias_gamma_decode(BitReader& in, std::size_t* bits_consumed) {
    std::size_t zeros = 0;
    while (!in.read()) ++zeros;
    mpz_class j = 1;
    for (std::size_t i = 0; i < zeros; ++i) {
        j <<= 1;
        if (in.read()) j |= 1;
    }
    if (bits_consumed) *bits_consumed = 2 * zeros + 1;
    return j;
}

}  // namespace fewbits
