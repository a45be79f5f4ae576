#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace shoenfield {

using Integer = mpz_class;
using Rational = mpq_class;

// All Rational values in this library are kept canonical (reduced, positive
// denominator) so that operator== and string output are well defined.
inline Rational make_rational(const Integer& num, const Integer& den) {
    if (den == 0)
        throw std::invalid_argument("rational: zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

inline Rational make_rational(long num, long den = 1) {
    return make_rational(Integer(num), Integer(den));
}

// Smallest integer >= q.
inline Integer rational_ceil(const Rational& q) {
    Integer out;
    mpz_cdiv_q(out.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return out;
}

// "a/b" even when b == 1, e.g. "1/1". Used for probability output.
inline std::string fraction_string(const Rational& q) {
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

// "a" when b == 1, otherwise "a/b". Used for program-text weights.
inline std::string weight_string(const Rational& q) {
    return q.get_str();
}

}  // namespace shoenfield
