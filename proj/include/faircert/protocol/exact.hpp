#pragma once

#include <string>
#include <vector>

#include "faircert/geometry.hpp"
#include "faircert/protocol/fixed_point.hpp"

namespace faircert {

/// Grid of query and representative points: multiples of 2^-kPointBits.
inline constexpr int kPointBits = 32;
/// Grid of sensitive values: multiples of 2^-kSensitiveBits.
inline constexpr int kSensitiveBits = 16;

using IntVec = std::vector<Int>;

/// Integer half-space a.x <= b.
struct IntRow {
    IntVec a;
    Int b;
    bool operator==(const IntRow&) const = default;
};
using IntRows = std::vector<IntRow>;

/// Model with every weight and bias an integer multiple of 2^-scale_bits.
class QuantizedModel {
public:
    QuantizedModel() = default;
    QuantizedModel(const ModelWeights& w, const FixedPointEncoding& enc);
    /// From integer parameters; shapes are validated.
    QuantizedModel(int n_inputs, int scale_bits, std::vector<std::vector<IntVec>> weights, std::vector<IntVec> biases);

    int n_inputs() const { return n_inputs_; }
    int n_classes() const { return n_classes_; }
    int n_layers() const { return static_cast<int>(weights_.size()); }
    int scale_bits() const { return scale_bits_; }
    int total_hidden() const;
    std::vector<int> hidden_sizes() const;
    /// weights()[l][r][c], biases()[l][r].
    const std::vector<std::vector<IntVec>>& weights() const { return weights_; }
    const std::vector<IntVec>& biases() const { return biases_; }
    std::vector<std::vector<IntVec>>& weights() { return weights_; }
    std::vector<IntVec>& biases() { return biases_; }

    /// The same network in floating point; every value is exact.
    ModelWeights dequantize() const;

    bool operator==(const QuantizedModel&) const = default;

private:
    int n_inputs_ = 0;
    int n_classes_ = 0;
    int scale_bits_ = 16;
    std::vector<std::vector<IntVec>> weights_;
    std::vector<IntVec> biases_;
};

/// Sensitive spec with domain values on the 2^-kSensitiveBits grid.
struct QuantizedSpec {
    std::vector<int> indices;
    std::vector<IntVec> domains;

    static QuantizedSpec from(const SensitiveSpec& spec);
    /// Float spec whose domain values are exactly the quantized ones.
    SensitiveSpec dequantize(int n_inputs) const;
    /// Lexicographic, first feature slowest.
    std::vector<IntVec> enumerate() const;
    bool operator==(const QuantizedSpec&) const = default;
};

/// Full point numerators over 2^kPointBits from a sliced point and s.
IntVec assemble_point(const QuantizedSpec& spec, int n_inputs, const IntVec& x_ns, const IntVec& s);
IntVec project_out_point(const QuantizedSpec& spec, const IntVec& x);

struct ForwardPass {
    /// Pre-activation numerators, layer-major; layer l has denominator
    /// den * 2^(scale*(l+1)).
    IntVec pre;
    /// Logit numerators over den * 2^(scale*L).
    IntVec logits;
};

ForwardPass forward_exact(const QuantizedModel& m, const IntVec& x, const Int& den);
ActivationCode code_exact(const ForwardPass& f);
/// Lowest index wins ties.
int argmax_exact(const IntVec& v);

/// Integer masked maps: pre-activation of layer l equals
/// (M x + c) / 2^(scale*(l+1)). Last entry maps to the logits.
struct IntAffine {
    std::vector<IntVec> m;
    IntVec c;
};
std::vector<IntAffine> masked_maps_exact(const QuantizedModel& m, const ActivationCode& code);

/// Neuron rows (in code order) followed by decision rows for `label`, over
/// the full input.
IntRows rows_exact(const QuantizedModel& m, const ActivationCode& code, int label);

/// Restricts full rows to the non-sensitive coordinates at s (numerators
/// over 2^kSensitiveBits); every row is scaled by 2^kSensitiveBits.
IntRows slice_rows(const IntRows& rows, const QuantizedSpec& spec, const IntVec& s);

/// b * den - a . x
Int slack(const IntRow& row, const IntVec& x, const Int& den);
Int norm_sq(const IntVec& a);
Int dot(const IntVec& a, const IntVec& x);

/// Rounded squared distance: round-half-up(d^2 * 2^16) where d is the
/// distance from x / den to the hyperplane of `row`.
struct SquaredDistance {
    Int rounded;
    /// d^2 = num / den exactly.
    Int num;
    Int den;
};
SquaredDistance squared_distance(const IntRow& row, const IntVec& x, const Int& den);
/// round-half-up(num / den * 2^16).
Int round_scaled(const Int& num, const Int& den);

/// Squared distance from x / den to the nearest face of [-B, B]^d.
SquaredDistance box_squared_distance(const IntVec& x, const Int& den, long box_bound);

Int pow2(int bits);
std::string to_decimal(const Int& v);
Int from_decimal(const std::string& s);
IntVec to_ints(const Vector& v, int bits);

} // namespace faircert
