#include "faircert/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "faircert/error.hpp"

namespace faircert {

namespace {

class Tableau {
public:
    Tableau(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>((rows + 1) * (cols + 1)), 0.0) {}

    double& at(int r, int c) { return data_[static_cast<std::size_t>(r * (cols_ + 1) + c)]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r * (cols_ + 1) + c)]; }
    // row `rows_` is the objective row, column `cols_` the right-hand side
    double& rhs(int r) { return at(r, cols_); }
    double& cost(int c) { return at(rows_, c); }

    void pivot(int pr, int pc) {
        const double p = at(pr, pc);
        for (int c = 0; c <= cols_; ++c) {
            at(pr, c) /= p;
        }
        for (int r = 0; r <= rows_; ++r) {
            if (r == pr) {
                continue;
            }
            const double f = at(r, pc);
            if (f == 0.0) {
                continue;
            }
            for (int c = 0; c <= cols_; ++c) {
                at(r, c) -= f * at(pr, c);
            }
        }
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

private:
    int rows_;
    int cols_;
    std::vector<double> data_;
};

// Maximizes the objective row over columns [0, active_cols). Returns false when unbounded.
bool run_simplex(Tableau& t, std::vector<int>& basis, int active_cols, double tol) {
    const int max_iter = 50 * (t.rows() + t.cols()) + 1000;
    for (int iter = 0; iter < max_iter; ++iter) {
        int enter = -1;
        for (int c = 0; c < active_cols; ++c) {
            // objective row holds z_j - c_j; negative means improving
            if (t.cost(c) < -tol) {
                enter = c;
                break;
            }
        }
        if (enter < 0) {
            return true;
        }
        int leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < t.rows(); ++r) {
            const double coef = t.at(r, enter);
            if (coef > tol) {
                const double ratio = std::max(t.rhs(r), 0.0) / coef;
                if (leave < 0 || ratio < best - tol) {
                    best = ratio;
                    leave = r;
                } else if (ratio <= best + tol &&
                           basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)]) {
                    best = std::min(best, ratio);
                    leave = r;
                }
            }
        }
        if (leave < 0) {
            return false;
        }
        t.pivot(leave, enter);
        basis[static_cast<std::size_t>(leave)] = enter;
    }
    throw Error("simplex iteration limit reached");
}

} // namespace

LpResult solve_lp(const LinearProgram& lp, double tol) {
    const int n = static_cast<int>(lp.objective.size());
    const int m_ub = static_cast<int>(lp.a_ub.rows());
    const int m_eq = static_cast<int>(lp.a_eq.rows());
    if ((m_ub > 0 && lp.a_ub.cols() != n) || (m_eq > 0 && lp.a_eq.cols() != n) || lp.b_ub.size() != m_ub ||
        lp.b_eq.size() != m_eq) {
        throw DimensionError("linear program has inconsistent dimensions");
    }
    const int m = m_ub + m_eq;

    // columns: originals, one slack per inequality, then artificials
    std::vector<int> needs_artificial;
    for (int r = 0; r < m_ub; ++r) {
        if (lp.b_ub[r] < 0.0) {
            needs_artificial.push_back(r);
        }
    }
    for (int r = 0; r < m_eq; ++r) {
        needs_artificial.push_back(m_ub + r);
    }
    const int n_art = static_cast<int>(needs_artificial.size());
    const int first_art = n + m_ub;
    const int cols = first_art + n_art;

    Tableau t(m, cols);
    std::vector<int> basis(static_cast<std::size_t>(m), -1);
    for (int r = 0; r < m_ub; ++r) {
        const double sign = lp.b_ub[r] < 0.0 ? -1.0 : 1.0;
        for (int c = 0; c < n; ++c) {
            t.at(r, c) = sign * lp.a_ub(r, c);
        }
        t.at(r, n + r) = sign;
        t.rhs(r) = sign * lp.b_ub[r];
        if (sign > 0) {
            basis[static_cast<std::size_t>(r)] = n + r;
        }
    }
    for (int r = 0; r < m_eq; ++r) {
        const double sign = lp.b_eq[r] < 0.0 ? -1.0 : 1.0;
        for (int c = 0; c < n; ++c) {
            t.at(m_ub + r, c) = sign * lp.a_eq(r, c);
        }
        t.rhs(m_ub + r) = sign * lp.b_eq[r];
    }
    for (int k = 0; k < n_art; ++k) {
        const int r = needs_artificial[static_cast<std::size_t>(k)];
        t.at(r, first_art + k) = 1.0;
        basis[static_cast<std::size_t>(r)] = first_art + k;
    }

    // phase 1: maximize -sum(artificials)
    if (n_art > 0) {
        for (int c = 0; c <= cols; ++c) {
            t.cost(c) = 0.0;
        }
        for (int k = 0; k < n_art; ++k) {
            t.cost(first_art + k) = 1.0;
        }
        for (int k = 0; k < n_art; ++k) {
            const int r = needs_artificial[static_cast<std::size_t>(k)];
            for (int c = 0; c <= cols; ++c) {
                t.cost(c) -= t.at(r, c);
            }
        }
        run_simplex(t, basis, cols, tol);
        const double scale = 1.0 + lp.b_ub.cwiseAbs().sum() + lp.b_eq.cwiseAbs().sum();
        if (t.cost(cols) < -1e-9 * scale) {
            return {LpStatus::infeasible, {}, 0.0};
        }
        // drive remaining artificials out of the basis
        for (int r = 0; r < m; ++r) {
            if (basis[static_cast<std::size_t>(r)] < first_art) {
                continue;
            }
            int pc = -1;
            double best = tol;
            for (int c = 0; c < first_art; ++c) {
                if (std::abs(t.at(r, c)) > best) {
                    best = std::abs(t.at(r, c));
                    pc = c;
                }
            }
            if (pc >= 0) {
                t.pivot(r, pc);
                basis[static_cast<std::size_t>(r)] = pc;
            } else {
                // redundant row: zero it so it never constrains phase 2
                for (int c = 0; c <= cols; ++c) {
                    t.at(r, c) = 0.0;
                }
            }
        }
    }

    // phase 2
    for (int c = 0; c <= cols; ++c) {
        t.cost(c) = 0.0;
    }
    for (int c = 0; c < n; ++c) {
        t.cost(c) = -lp.objective[c];
    }
    for (int r = 0; r < m; ++r) {
        const int bc = basis[static_cast<std::size_t>(r)];
        if (bc < 0 || bc >= first_art) {
            continue;
        }
        const double f = t.cost(bc);
        if (f != 0.0) {
            for (int c = 0; c <= cols; ++c) {
                t.cost(c) -= f * t.at(r, c);
            }
        }
    }
    if (!run_simplex(t, basis, first_art, tol)) {
        return {LpStatus::unbounded, {}, 0.0};
    }
    Vector solution = Vector::Zero(n);
    for (int r = 0; r < m; ++r) {
        const int bc = basis[static_cast<std::size_t>(r)];
        if (bc >= 0 && bc < n) {
            solution[bc] = t.rhs(r);
        }
    }
    return {LpStatus::optimal, solution, lp.objective.dot(solution)};
}

} // namespace faircert
