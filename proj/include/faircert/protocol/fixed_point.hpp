#pragma once

#include <gmpxx.h>

namespace faircert {

using Int = mpz_class;

/// Signed fixed-point values embedded in a prime field.
struct FixedPointEncoding {
    int scale_bits = 16;
    Int modulus = default_modulus();

    /// 2^61 - 1.
    static Int default_modulus();

    /// round-to-nearest-even(x * 2^scale) as a signed integer. Throws
    /// EncodingError when non-finite or when |result| >= modulus / 2.
    Int quantize(double x) const;
    double dequantize(const Int& v) const;

    /// Field element for a real value.
    Int encode(double x) const;
    /// Signed lift of a field element back to a real.
    double decode(const Int& field) const;

    Int to_field(const Int& signed_value) const;
    Int to_signed(const Int& field) const;

    bool operator==(const FixedPointEncoding&) const = default;
};

/// round-to-nearest-even(x * 2^bits); exact for |x| * 2^bits < 2^53.
Int quantize_dyadic(double x, int bits);

/// v / 2^bits rounded to the nearest double.
double dyadic_to_double(const Int& v, int bits);

} // namespace faircert
