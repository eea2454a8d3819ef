#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "faircert/certifier.hpp"
#include "faircert/error.hpp"
#include "faircert/log.hpp"

namespace faircert {

namespace {

Matrix stack_rows(const Matrix& eq_a, const Matrix& ineq_a, const std::vector<int>& work) {
    Matrix a(eq_a.rows() + static_cast<Eigen::Index>(work.size()), eq_a.cols());
    if (eq_a.rows() > 0) a.topRows(eq_a.rows()) = eq_a;
    for (std::size_t k = 0; k < work.size(); ++k) a.row(eq_a.rows() + static_cast<Eigen::Index>(k)) = ineq_a.row(work[k]);
    return a;
}

Eigen::Index rank_of(const Matrix& a) {
    if (a.rows() == 0) return 0;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    cod.setThreshold(1e-10);
    return cod.rank();
}

} // namespace

// Primal active-set method for min |z - x|^2 over a polyhedron.
Vector project_onto_polyhedron(const Vector& x, const Matrix& eq_a, const Vector& /*eq_b*/, const Matrix& ineq_a,
                               const Vector& ineq_b, Vector z) {
    const double scale = 1.0 + x.norm();
    std::vector<int> work;
    std::vector<char> in_work(static_cast<std::size_t>(ineq_a.rows()), 0);
    for (Eigen::Index i = 0; i < ineq_a.rows(); ++i) {
        if (std::abs(ineq_a.row(i).dot(z) - ineq_b(i)) > 1e-9 * scale) continue;
        work.push_back(static_cast<int>(i));
        if (rank_of(stack_rows(eq_a, ineq_a, work)) < static_cast<Eigen::Index>(eq_a.rows() + work.size())) {
            work.pop_back();
            continue;
        }
        in_work[static_cast<std::size_t>(i)] = 1;
    }

    for (int iter = 0; iter < 2000; ++iter) {
        Matrix a = stack_rows(eq_a, ineq_a, work);
        Vector g = x - z;
        Vector p = g;
        if (a.rows() > 0) {
            // p = g minus its component in the row space of a.
            Eigen::CompleteOrthogonalDecomposition<Matrix> cod_t(a.transpose());
            cod_t.setThreshold(1e-12);
            Vector lambda = cod_t.solve(g);
            p = g - a.transpose() * lambda;
            if (p.norm() <= 1e-12 * scale) {
                // Stationary on the working set: check inequality multipliers.
                int worst = -1;
                double most_negative = -1e-10;
                for (std::size_t k = 0; k < work.size(); ++k) {
                    double l = lambda(eq_a.rows() + static_cast<Eigen::Index>(k));
                    if (l < most_negative) {
                        most_negative = l;
                        worst = static_cast<int>(k);
                    }
                }
                if (worst < 0) return z;
                in_work[static_cast<std::size_t>(work[static_cast<std::size_t>(worst)])] = 0;
                work.erase(work.begin() + worst);
                continue;
            }
        } else if (p.norm() <= 1e-12 * scale) {
            return z;
        }

        double alpha = 1.0;
        int blocking = -1;
        for (Eigen::Index i = 0; i < ineq_a.rows(); ++i) {
            if (in_work[static_cast<std::size_t>(i)]) continue;
            double gp = ineq_a.row(i).dot(p);
            if (gp <= 1e-14) continue;
            double slack = std::max(0.0, ineq_b(i) - ineq_a.row(i).dot(z));
            double step = slack / gp;
            if (step < alpha) {
                alpha = step;
                blocking = static_cast<int>(i);
            }
        }
        z += alpha * p;
        if (blocking >= 0) {
            work.push_back(blocking);
            in_work[static_cast<std::size_t>(blocking)] = 1;
        }
    }
    logger().warn("projection QP hit its iteration limit");
    return z;
}

double exact_epsilon_oracle(const ModelWeights& w, const SensitiveSpec& spec, const Vector& x,
                            const CertifyOptions& options) {
    require_point(x, w.n_inputs(), "query");
    const int h = w.total_hidden();
    if (h > kExhaustiveHiddenLimit)
        throw Error("exhaustive oracle refuses networks with more than " + std::to_string(kExhaustiveHiddenLimit) +
                    " hidden neurons");

    const int label = w.predict(x);
    const Vector x_ns = spec.project_out(x);
    const Eigen::Index d = x_ns.size();
    const double bound = options.box_bound;

    double box = std::numeric_limits<double>::infinity();
    for (double v : x_ns) box = std::min(box, bound - std::abs(v));
    box = std::max(0.0, box);

    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : spec.enumerate()) {
        if (w.predict(spec.assemble(x_ns, s)) != label) return 0.0;
        double branch = box;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << h); ++mask) {
            std::vector<std::uint8_t> bits(static_cast<std::size_t>(h));
            for (int i = 0; i < h; ++i) bits[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
            Polytope cell = sliced_cell(w, spec, s, ActivationCode(bits), label);
            if (!representative_point(cell, bound)) continue;

            for (int t = cell.neuron_rows; t < cell.rows(); ++t) {
                Hyperplane hp{cell.a.row(t).transpose(), cell.b(t)};
                if (hp.a.norm() == 0.0) continue;
                if (projection_distance(x_ns, hp) >= branch) continue;
                auto start = representative_point(cell, bound, t);
                if (!start) continue;

                Matrix ineq(cell.rows() - 1 + 2 * d, d);
                Vector rhs(ineq.rows());
                Eigen::Index r = 0;
                for (int i = 0; i < cell.rows(); ++i) {
                    if (i == t) continue;
                    ineq.row(r) = cell.a.row(i);
                    rhs(r++) = cell.b(i);
                }
                for (Eigen::Index j = 0; j < d; ++j) {
                    ineq.row(r).setZero();
                    ineq(r, j) = 1.0;
                    rhs(r++) = bound;
                    ineq.row(r).setZero();
                    ineq(r, j) = -1.0;
                    rhs(r++) = bound;
                }
                Matrix eq = hp.a.transpose();
                Vector eq_b = Vector::Constant(1, hp.b);
                Vector z = project_onto_polyhedron(x_ns, eq, eq_b, ineq, rhs, start->center);
                branch = std::min(branch, (z - x_ns).norm());
            }
        }
        best = std::min(best, branch);
    }
    return best;
}

} // namespace faircert
