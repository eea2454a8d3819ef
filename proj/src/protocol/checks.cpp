#include "faircert/protocol/checks.hpp"

#include <algorithm>

namespace faircert {

namespace {

CheckResult fail(std::string why) { return CheckResult{false, std::move(why)}; }

const Int& point_den() {
    static const Int d = pow2(kPointBits);
    return d;
}

IntRows derived_rows(const SliceContext& ctx, const ActivationCode& code) {
    return slice_rows(rows_exact(*ctx.model, code, ctx.label), *ctx.spec, ctx.s);
}

CheckResult replay(const PolytopeInput& in) {
    const auto& m = *in.ctx.model;
    IntVec full = assemble_point(*in.ctx.spec, m.n_inputs(), in.x_ns, in.ctx.s);
    auto f = forward_exact(m, full, point_den());
    if (code_exact(f) != in.code) return fail("activation code does not match the query");
    if (derived_rows(in.ctx, in.code) != in.rows) return fail("polytope rows differ from the committed weights");
    if (argmax_exact(f.logits) != in.slice_label) return fail("slice label is not the argmax");
    return {};
}

CheckResult replay(const DistanceInput& in) {
    if (norm_sq(in.row.a) == 0) return fail("degenerate row");
    if (squared_distance(in.row, in.x_ns, point_den()).rounded != in.d_sq) return fail("squared distance mismatch");
    return {};
}

CheckResult replay(const OrderInput& in) {
    for (const auto& t : in.pending)
        if (t < in.d_sq) return fail("a pending facet is closer than the popped one");
    return {};
}

CheckResult replay(const BoundaryInput& in) {
    if (in.row < 0 || static_cast<std::size_t>(in.row) >= in.rows.size()) return fail("row out of range");
    for (const auto& r : in.rows)
        if (slack(r, in.point, point_den()) < 0) return fail("representative point leaves the owner polytope");
    if (!on_facet(in.rows, in.row, in.point)) return fail("representative point is not on the facet");
    if (derived_rows(in.ctx, in.code) != in.rows) return fail("owner rows differ from the committed weights");
    bool is_boundary = is_boundary_point(in.ctx, in.code, in.point);
    if (is_boundary != in.boundary) return fail(in.boundary ? "claimed boundary but logits differ" : "facet is a decision boundary");
    return {};
}

CheckResult replay(const NeighborInput& in) {
    const auto& m = *in.ctx.model;
    IntVec full = assemble_point(*in.ctx.spec, m.n_inputs(), in.point, in.ctx.s);
    if (code_exact(forward_exact(m, full, point_den())) != in.code)
        return fail("neighbor code does not match its representative point");
    if (derived_rows(in.ctx, in.code) != in.rows) return fail("neighbor rows differ from the committed weights");
    const auto& shared = in.rows.at(static_cast<std::size_t>(in.row));
    if (shared.b != -in.owner_row.b) return fail("shared facet is not common to both polytopes");
    for (std::size_t k = 0; k < shared.a.size(); ++k)
        if (shared.a[k] != -in.owner_row.a[k]) return fail("shared facet is not common to both polytopes");
    for (std::size_t k = static_cast<std::size_t>(m.total_hidden()); k < in.rows.size(); ++k)
        if (slack(in.rows[k], in.point, point_den()) < 0) return fail("neighbor point outside the label region");
    return {};
}

CheckResult replay(const MinInput& in) {
    if (in.values.empty()) return fail("empty value list");
    if (in.values.size() != in.terminals.size()) return fail("one value per sensitive assignment expected");
    for (std::size_t i = 0; i < in.values.size(); ++i)
        if (in.values[i] != in.terminals[i].rounded) return fail("listed value differs from the branch result");
    bool member = false;
    for (const auto& v : in.values) {
        if (in.eps_sq > v) return fail("claimed minimum exceeds a listed value");
        if (v == in.eps_sq) member = true;
    }
    if (!member) return fail("claimed minimum is not in the list");
    if (in.epsilon < 0) return fail("negative epsilon");
    bool tight = false;
    for (const auto& t : in.terminals) {
        if (in.epsilon * in.epsilon * t.den > t.num) return fail("epsilon exceeds a branch distance");
        Int up = in.epsilon + 1;
        if (up * up * t.den > t.num) tight = true;
    }
    if (!tight) return fail("epsilon is not the rounded-down minimum");
    return {};
}

CheckResult replay(const InferenceInput& in) {
    auto f = forward_exact(*in.model, in.x, point_den());
    if (code_exact(f) != in.code) return fail("activation code does not match the query");
    if (f.logits != in.logits) return fail("logits differ from the committed weights");
    if (argmax_exact(f.logits) != in.label) return fail("label is not the argmax");
    return {};
}

} // namespace

CheckKind kind_of(const CheckInput& in) { return static_cast<CheckKind>(in.index() + 1); }

CheckResult ReplayBackend::run(const CheckInput& in) {
    return std::visit([](const auto& x) { return replay(x); }, in);
}

IntVec logits_at(const QuantizedModel& m, const ActivationCode& code, const IntVec& full_point) {
    auto maps = masked_maps_exact(m, code);
    const auto& out = maps.back();
    IntVec logits;
    for (std::size_t j = 0; j < out.m.size(); ++j) logits.push_back(dot(out.m[j], full_point) + out.c[j] * point_den());
    return logits;
}

bool is_boundary_point(const SliceContext& ctx, const ActivationCode& code, const IntVec& point) {
    const auto& m = *ctx.model;
    IntVec logits = logits_at(m, code, assemble_point(*ctx.spec, m.n_inputs(), point, ctx.s));
    const auto y = static_cast<std::size_t>(ctx.label);
    Int logit_den = pow2(kPointBits + m.scale_bits() * m.n_layers());
    for (std::size_t j = 0; j < logits.size(); ++j) {
        if (j == y) continue;
        if ((logits[y] - logits[j]) * pow2(kBoundaryTolBits) <= logit_den) return true;
    }
    return false;
}

bool on_facet(const IntRows& rows, int row, const IntVec& point) {
    const auto& den = point_den();
    if (row < 0 || static_cast<std::size_t>(row) >= rows.size()) return false;
    for (const auto& r : rows)
        if (r.a.size() != point.size() || slack(r, point, den) < 0) return false;
    const IntRow& tight = rows[static_cast<std::size_t>(row)];
    Int r = slack(tight, point, den);
    // dist <= 2^-k  <=>  r^2 * 2^(2k) <= |a|^2 * den^2
    return r * r * pow2(2 * kFacetSlackBits) <= norm_sq(tight.a) * den * den;
}

int distance_bits_for(long box_bound, int dim) {
    Int worst = Int(4) * box_bound * box_bound * std::max(dim, 1) * pow2(16) + 1;
    return static_cast<int>(mpz_sizeinbase(worst.get_mpz_t(), 2)) + 1;
}

Terminal terminal_of(const SquaredDistance& d) {
    Int den = d.den / pow2(2 * kPointBits);
    return Terminal{d.num, den, d.rounded};
}

Terminal make_terminal(const Int& d_sq, const SquaredDistance& box) {
    Terminal t{0, 1, 0};
    if (d_sq > 0) t = Terminal{(2 * d_sq - 1) * pow2(2 * kPointBits - 17), 1, d_sq};
    Terminal b = terminal_of(box);
    return t.num * b.den <= b.num * t.den ? t : b;
}

Int epsilon_from_terminals(const std::vector<Terminal>& terms) {
    Int best_num = -1;
    Int best_den = 1;
    for (const auto& t : terms)
        if (best_num < 0 || t.num * best_den < best_num * t.den) {
            best_num = t.num;
            best_den = t.den;
        }
    if (best_num < 0) return 0;
    Int q = best_num / best_den;
    Int r;
    mpz_sqrt(r.get_mpz_t(), q.get_mpz_t());
    return r;
}

} // namespace faircert
