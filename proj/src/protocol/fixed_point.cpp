#include "faircert/protocol/fixed_point.hpp"

#include <cmath>

#include "faircert/error.hpp"

namespace faircert {

Int FixedPointEncoding::default_modulus() {
    Int p = 1;
    p <<= 61;
    return p - 1;
}

Int quantize_dyadic(double x, int bits) {
    if (!std::isfinite(x)) throw EncodingError("cannot encode a non-finite value");
    double scaled = std::ldexp(x, bits);
    if (std::abs(scaled) >= 0x1p62) throw EncodingError("value too large for fixed-point encoding");
    // nearbyint honours the default rounding mode, which is to-nearest-even.
    return Int(static_cast<long>(std::nearbyint(scaled)));
}

double dyadic_to_double(const Int& v, int bits) {
    return std::ldexp(v.get_d(), -bits);
}

Int FixedPointEncoding::quantize(double x) const {
    Int v = quantize_dyadic(x, scale_bits);
    Int a = abs(v);
    if (2 * a >= modulus) throw EncodingError("fixed-point overflow: magnitude reaches modulus/2");
    return v;
}

double FixedPointEncoding::dequantize(const Int& v) const { return dyadic_to_double(v, scale_bits); }

Int FixedPointEncoding::to_field(const Int& signed_value) const {
    Int r = signed_value % modulus;
    if (r < 0) r += modulus;
    return r;
}

Int FixedPointEncoding::to_signed(const Int& field) const {
    Int r = to_field(field);
    if (2 * r >= modulus) r -= modulus;
    return r;
}

Int FixedPointEncoding::encode(double x) const { return to_field(quantize(x)); }

double FixedPointEncoding::decode(const Int& field) const { return dequantize(to_signed(field)); }

} // namespace faircert
