#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "faircert/protocol/checks.hpp"

namespace faircert {

/// Scalar field of BN254.
const Int& field_modulus();

/// Width of generic non-negativity gadgets; 2^kWideBits stays well below
/// half the field so negative values cannot pass.
inline constexpr int kWideBits = 248;

struct Term {
    std::size_t var = 0;
    Int coef;
};
using LinearCombination = std::vector<Term>;

/// a . w  *  b . w  =  c . w   (mod p); variable 0 is the constant 1.
struct Constraint {
    LinearCombination a, b, c;
};

struct ConstraintSystem {
    CheckKind kind = CheckKind::Polytope;
    std::size_t num_vars = 1;
    std::vector<Constraint> constraints;
    /// Some witness value left the signed range of the field; the system is
    /// then treated as unsatisfied.
    bool overflow = false;
};

using Assignment = std::vector<Int>;

/// Lowers one check into rank-1 constraints plus the witness assignment
/// derived from the (possibly dishonest) inputs.
std::pair<ConstraintSystem, Assignment> compile_check(const CheckInput& in);

struct Evaluation {
    bool satisfied = true;
    std::ptrdiff_t first_violated = -1;
};
Evaluation evaluate_constraints(const ConstraintSystem& cs, const Assignment& w);

/// Backend that compiles and evaluates every check, tallying constraint
/// counts per kind.
class ConstraintBackend final : public CheckBackend {
public:
    std::string name() const override { return "constraints"; }
    CheckResult run(const CheckInput& in) override;

    const std::map<CheckKind, std::size_t>& constraint_totals() const { return totals_; }
    const std::map<CheckKind, std::size_t>& instance_counts() const { return instances_; }

private:
    std::map<CheckKind, std::size_t> totals_;
    std::map<CheckKind, std::size_t> instances_;
};

} // namespace faircert
