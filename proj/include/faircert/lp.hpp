#pragma once

#include "faircert/model.hpp"

namespace faircert {

/// maximize objective . v  subject to  a_ub v <= b_ub,  a_eq v = b_eq,  v >= 0.
struct LinearProgram {
    Matrix a_ub;
    Vector b_ub;
    Matrix a_eq;
    Vector b_eq;
    Vector objective;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Vector solution;
    double value = 0.0;
};

/// Dense two-phase simplex with Bland's rule. Sized for the small programs
/// that arise from a single activation region (tens of rows and columns).
LpResult solve_lp(const LinearProgram& lp, double tol = 1e-10);

} // namespace faircert
