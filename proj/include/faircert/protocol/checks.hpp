#pragma once

#include <map>
#include <string>
#include <variant>

#include "faircert/protocol/transcript.hpp"

namespace faircert {

/// Largest distance from the hyperplane (relative to the point grid) a facet
/// representative point may sit: 2^-kFacetSlackBits.
inline constexpr int kFacetSlackBits = 20;
/// Boundary tolerance on the top-two logit gap: 2^-kBoundaryTolBits.
inline constexpr int kBoundaryTolBits = 16;

/// Everything a slice-level check needs besides its own witnesses.
struct SliceContext {
    const QuantizedModel* model = nullptr;
    const QuantizedSpec* spec = nullptr;
    IntVec s;
    int label = 0;
};

struct PolytopeInput {
    SliceContext ctx;
    IntVec x_ns; // over 2^kPointBits
    ActivationCode code;
    IntRows rows;
    int slice_label = 0;
};

struct DistanceInput {
    IntRow row;
    IntVec x_ns;
    Int d_sq;
    /// Public bound used for range widths of rounded squared distances.
    int distance_bits = 64;
};

struct OrderInput {
    Int d_sq;
    IntVec pending;
    int distance_bits = 64;
};

struct BoundaryInput {
    SliceContext ctx;
    ActivationCode code;
    IntRows rows; // owner cell, sliced
    int row = 0;
    IntVec point; // sliced, over 2^kPointBits
    bool boundary = false;
};

struct NeighborInput {
    SliceContext ctx;
    IntRow owner_row;
    int row = 0;
    ActivationCode code; // claimed neighbor code
    IntVec point;
    IntRows rows;
};

/// Exact terminal squared distance of one branch: d^2 * 2^(2*kPointBits) = num / den.
struct Terminal {
    Int num;
    Int den;
    Int rounded;
};

struct MinInput {
    IntVec values;
    Int eps_sq;
    Int epsilon;
    std::vector<Terminal> terminals;
    int distance_bits = 64;
};

struct InferenceInput {
    const QuantizedModel* model = nullptr;
    IntVec x; // full query over 2^kPointBits
    ActivationCode code;
    IntVec logits;
    int label = 0;
};

using CheckInput =
    std::variant<PolytopeInput, DistanceInput, OrderInput, BoundaryInput, NeighborInput, MinInput, InferenceInput>;

CheckKind kind_of(const CheckInput& in);

struct CheckResult {
    bool ok = true;
    std::string detail;
};

class CheckBackend {
public:
    virtual ~CheckBackend() = default;
    virtual std::string name() const = 0;
    virtual CheckResult run(const CheckInput& in) = 0;
};

/// Direct exact-integer recomputation.
class ReplayBackend final : public CheckBackend {
public:
    std::string name() const override { return "replay"; }
    CheckResult run(const CheckInput& in) override;
};

/// Logit numerators of code's affine map at a full point over 2^kPointBits.
IntVec logits_at(const QuantizedModel& m, const ActivationCode& code, const IntVec& full_point);

/// Top-two logit gap of code's affine map at a sliced point is within the
/// boundary tolerance.
bool is_boundary_point(const SliceContext& ctx, const ActivationCode& code, const IntVec& point);

/// Point satisfies every row and lies within 2^-kFacetSlackBits of row `row`.
bool on_facet(const IntRows& rows, int row, const IntVec& point);

/// Bits needed for rounded squared distances inside [-B, B]^dim.
int distance_bits_for(long box_bound, int dim);

/// Terminal value of a branch that popped a boundary facet with rounded
/// squared distance `d_sq`. Every unexplored facet is at least
/// (d_sq - 1/2) * 2^-16 away in squared distance, so that is the bound,
/// capped by the box distance.
Terminal make_terminal(const Int& d_sq, const SquaredDistance& box);
Terminal terminal_of(const SquaredDistance& d);

/// floor(sqrt(min terminal) * 2^kPointBits).
Int epsilon_from_terminals(const std::vector<Terminal>& terms);

} // namespace faircert
