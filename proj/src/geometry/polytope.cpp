#include <cmath>

#include "faircert/error.hpp"
#include "faircert/geometry.hpp"
#include "faircert/lp.hpp"

namespace faircert {

bool Polytope::contains(const Vector& x, double tol) const {
    if (x.size() != dim) {
        throw DimensionError("point dimension does not match polytope");
    }
    return ((a * x - b).array() <= tol).all();
}

Polytope polytope_from_code(const ModelWeights& w, const ActivationCode& code) {
    const auto maps = masked_affine_maps(w, code);
    Polytope p;
    p.dim = w.n_inputs();
    p.source_code = code;
    p.neuron_rows = w.total_hidden();
    p.a.resize(p.neuron_rows, p.dim);
    p.b.resize(p.neuron_rows);
    int row = 0;
    for (std::size_t l = 0; l + 1 < maps.size(); ++l) {
        const auto& [am, cm] = maps[l];
        for (Eigen::Index i = 0; i < am.rows(); ++i, ++row) {
            // bit 1: pre > 0  ->  -g(x) <= 0;  bit 0: g(x) <= 0
            const double sign = code[static_cast<std::size_t>(row)] ? -1.0 : 1.0;
            p.a.row(row) = sign * am.row(i);
            p.b[row] = -sign * cm[i];
        }
    }
    return p;
}

Polytope decision_cell(const ModelWeights& w, const ActivationCode& code, int label) {
    if (label < 0 || label >= w.n_classes()) {
        throw DimensionError("label out of range");
    }
    Polytope p = polytope_from_code(w, code);
    const auto [am, cm] = linear_map_from_code(w, code);
    const int extra = w.n_classes() - 1;
    p.a.conservativeResize(p.neuron_rows + extra, Eigen::NoChange);
    p.b.conservativeResize(p.neuron_rows + extra);
    int row = p.neuron_rows;
    for (int j = 0; j < w.n_classes(); ++j) {
        if (j == label) {
            continue;
        }
        p.a.row(row) = am.row(j) - am.row(label);
        p.b[row] = cm[label] - cm[j];
        p.decision_classes.push_back(j);
        ++row;
    }
    p.label = label;
    return p;
}

Polytope reduce_poly_dim(const Polytope& p, const SensitiveSpec& spec, const std::vector<double>& s) {
    if (static_cast<int>(s.size()) != spec.k()) {
        throw DimensionError("sensitive value tuple has " + std::to_string(s.size()) + " entries, expected " +
                             std::to_string(spec.k()));
    }
    if (p.dim != spec.n_inputs()) {
        throw DimensionError("polytope dimension does not match the sensitive spec");
    }
    const auto& keep = spec.non_sensitive_indices();
    Polytope out = p;
    out.dim = static_cast<int>(keep.size());
    out.a.resize(p.a.rows(), out.dim);
    for (int c = 0; c < out.dim; ++c) {
        out.a.col(c) = p.a.col(keep[static_cast<std::size_t>(c)]);
    }
    out.b = p.b;
    for (int j = 0; j < spec.k(); ++j) {
        const int idx = spec.features()[static_cast<std::size_t>(j)].index;
        if (idx < 0 || idx >= p.dim) {
            throw DimensionError("sensitive index out of range");
        }
        out.b -= p.a.col(idx) * s[static_cast<std::size_t>(j)];
    }
    return out;
}

double projection_distance(const Vector& x, const Hyperplane& h) {
    if (x.size() != h.a.size()) {
        throw DimensionError("point and hyperplane dimensions differ");
    }
    const double norm = h.a.norm();
    if (!(norm > 0.0)) {
        throw DimensionError("hyperplane has a zero normal vector");
    }
    return std::abs(h.b - h.a.dot(x)) / norm;
}

Vector projection_foot(const Vector& x, const Hyperplane& h) {
    const double n2 = h.a.squaredNorm();
    if (!(n2 > 0.0)) {
        throw DimensionError("hyperplane has a zero normal vector");
    }
    return x + ((h.b - h.a.dot(x)) / n2) * h.a;
}

std::optional<ChebyshevBall> representative_point(const Polytope& p, double box_bound, std::optional<int> tight_row) {
    const int d = p.dim;
    if (!(box_bound > 0.0)) {
        throw DimensionError("box bound must be positive");
    }
    Vector normal;
    if (tight_row) {
        if (*tight_row < 0 || *tight_row >= p.rows()) {
            throw DimensionError("tight row out of range");
        }
        normal = p.a.row(*tight_row).transpose();
        const double nn = normal.norm();
        if (!(nn > 0.0)) {
            return std::nullopt;
        }
        normal /= nn;
    }

    // Variables: u = x + B (so u >= 0) followed by the radius r >= 0.
    std::vector<Eigen::Index> kept;
    std::vector<double> radius_coef;
    for (int i = 0; i < p.rows(); ++i) {
        if (tight_row && i == *tight_row) {
            continue;
        }
        Vector ai = p.a.row(i).transpose();
        const double n = ai.norm();
        if (n <= 1e-300) {
            if (p.b[i] < -1e-12) {
                return std::nullopt;
            }
            continue;
        }
        double coef = 1.0;
        if (tight_row) {
            // radius measured inside the tight hyperplane
            const Vector unit = ai / n;
            coef = (unit - unit.dot(normal) * normal).norm();
        }
        kept.push_back(i);
        radius_coef.push_back(coef);
    }
    const auto m_rows = static_cast<Eigen::Index>(kept.size());
    LinearProgram lp;
    lp.a_ub = Matrix::Zero(m_rows + 2 * d + 1, d + 1);
    lp.b_ub = Vector::Zero(m_rows + 2 * d + 1);
    for (Eigen::Index k = 0; k < m_rows; ++k) {
        const Eigen::Index i = kept[static_cast<std::size_t>(k)];
        const double n = p.a.row(i).norm();
        lp.a_ub.block(k, 0, 1, d) = p.a.row(i) / n;
        lp.a_ub(k, d) = radius_coef[static_cast<std::size_t>(k)];
        lp.b_ub[k] = (p.b[i] + box_bound * p.a.row(i).sum()) / n;
    }
    for (int j = 0; j < d; ++j) {
        lp.a_ub(m_rows + 2 * j, j) = 1.0;
        lp.a_ub(m_rows + 2 * j, d) = 1.0;
        lp.b_ub[m_rows + 2 * j] = 2.0 * box_bound;
        lp.a_ub(m_rows + 2 * j + 1, j) = -1.0;
        lp.a_ub(m_rows + 2 * j + 1, d) = 1.0;
        lp.b_ub[m_rows + 2 * j + 1] = 0.0;
    }
    lp.a_ub(m_rows + 2 * d, d) = 1.0;
    lp.b_ub[m_rows + 2 * d] = box_bound;
    if (tight_row) {
        const double n = p.a.row(*tight_row).norm();
        lp.a_eq = Matrix::Zero(1, d + 1);
        lp.a_eq.block(0, 0, 1, d) = p.a.row(*tight_row) / n;
        lp.b_eq = Vector::Constant(1, (p.b[*tight_row] + box_bound * p.a.row(*tight_row).sum()) / n);
    } else {
        lp.a_eq = Matrix::Zero(0, d + 1);
        lp.b_eq = Vector::Zero(0);
    }
    lp.objective = Vector::Zero(d + 1);
    lp.objective[d] = 1.0;

    const LpResult res = solve_lp(lp);
    if (res.status != LpStatus::optimal) {
        return std::nullopt;
    }
    ChebyshevBall ball;
    ball.center = res.solution.head(d).array() - box_bound;
    ball.radius = res.solution[d];
    if (tight_row) {
        // snap back onto the hyperplane
        Hyperplane h{p.a.row(*tight_row).transpose(), p.b[*tight_row]};
        ball.center = projection_foot(ball.center, h);
    }
    return ball;
}

} // namespace faircert
