#include "faircert/protocol/constraints.hpp"

#include <algorithm>

namespace faircert {

const Int& field_modulus() {
    static const Int p("21888242871839275222246405745257275088548364400416034343698204186575808495617", 10);
    return p;
}

namespace {

Int mod_p(const Int& v) {
    Int r = v % field_modulus();
    if (r < 0) r += field_modulus();
    return r;
}

struct Sig {
    LinearCombination lc;
    Int value; // true integer value, not reduced
    /// Value is only meaningful modulo p (inverses); exempt from range tracking.
    bool field = false;

    bool is_constant() const {
        return std::all_of(lc.begin(), lc.end(), [](const Term& t) { return t.var == 0; });
    }
};

class Builder {
public:
    explicit Builder(CheckKind kind) {
        cs_.kind = kind;
        w_.push_back(1);
        half_ = field_modulus() / 2;
    }

    Sig constant(const Int& v) { return Sig{{Term{0, v}}, v}; }

    Sig witness(const Int& v) {
        track(v);
        std::size_t id = w_.size();
        w_.push_back(mod_p(v));
        return Sig{{Term{id, 1}}, v};
    }

    Sig field_witness(const Int& v) {
        std::size_t id = w_.size();
        w_.push_back(mod_p(v));
        return Sig{{Term{id, 1}}, mod_p(v), true};
    }

    std::vector<Sig> witnesses(const IntVec& vs) {
        std::vector<Sig> out;
        for (const auto& v : vs) out.push_back(witness(v));
        return out;
    }

    Sig add(const Sig& a, const Sig& b) {
        Sig r = a;
        r.lc.insert(r.lc.end(), b.lc.begin(), b.lc.end());
        r.value += b.value;
        r.field = a.field || b.field;
        if (r.field) r.value = mod_p(r.value);
        return r;
    }

    Sig scale(const Sig& a, const Int& k) {
        Sig r = a;
        for (auto& t : r.lc) t.coef *= k;
        r.value *= k;
        if (r.field) r.value = mod_p(r.value);
        return r;
    }

    Sig sub(const Sig& a, const Sig& b) { return add(a, scale(b, -1)); }

    Sig mul(const Sig& a, const Sig& b) {
        if (a.is_constant()) return scale(b, a.value);
        if (b.is_constant()) return scale(a, b.value);
        Sig out;
        if (a.field || b.field) {
            out = field_witness(a.value * b.value);
        } else {
            out = witness(a.value * b.value);
        }
        cs_.constraints.push_back(Constraint{a.lc, b.lc, out.lc});
        return out;
    }

    Sig sum(const std::vector<Sig>& xs) {
        Sig acc = constant(0);
        for (const auto& x : xs) {
            acc.lc.insert(acc.lc.end(), x.lc.begin(), x.lc.end());
            acc.value += x.value;
            acc.field = acc.field || x.field;
        }
        if (acc.field) acc.value = mod_p(acc.value);
        return acc;
    }

    void equal(const Sig& a, const Sig& b) {
        Sig d = sub(a, b);
        if (!d.field) track(d.value);
        cs_.constraints.push_back(Constraint{d.lc, one(), {}});
    }

    Sig boolean(bool bit) {
        Sig b = witness(bit ? 1 : 0);
        cs_.constraints.push_back(Constraint{b.lc, b.lc, b.lc});
        return b;
    }

    /// x in [0, 2^width) by bit decomposition.
    void nonneg(const Sig& x, int width) {
        track(x.value);
        Int v = x.value;
        if (v < 0 || v >= pow2(width)) v = mod_p(v); // no honest decomposition exists
        Sig acc = constant(0);
        acc.lc.reserve(static_cast<std::size_t>(width) + 1);
        for (int k = 0; k < width; ++k) {
            bool bit = mpz_tstbit(v.get_mpz_t(), static_cast<mp_bitcnt_t>(k)) != 0;
            Sig b = boolean(bit);
            acc.lc.push_back(Term{b.lc.front().var, pow2(k)});
            if (bit) acc.value += pow2(k);
        }
        equal(acc, x);
    }

    /// Non-negative slack of a strict or non-strict comparison.
    void geq(const Sig& a, const Sig& b, int width) { nonneg(sub(a, b), width); }

    std::pair<ConstraintSystem, Assignment> finish() {
        cs_.num_vars = w_.size();
        for (auto& c : cs_.constraints)
            for (auto* lc : {&c.a, &c.b, &c.c})
                for (auto& t : *lc) t.coef = mod_p(t.coef);
        return {std::move(cs_), std::move(w_)};
    }

    void flag_overflow() { cs_.overflow = true; }

private:
    LinearCombination one() const { return {Term{0, 1}}; }
    void track(const Int& v) {
        if (abs(v) >= half_) cs_.overflow = true;
    }

    ConstraintSystem cs_;
    Assignment w_;
    Int half_;
};

struct ModelSigs {
    std::vector<std::vector<std::vector<Sig>>> w;
    std::vector<std::vector<Sig>> b;
};

ModelSigs declare_model(Builder& bld, const QuantizedModel& m) {
    ModelSigs out;
    for (int l = 0; l < m.n_layers(); ++l) {
        std::vector<std::vector<Sig>> rows;
        for (const auto& r : m.weights()[static_cast<std::size_t>(l)]) rows.push_back(bld.witnesses(r));
        out.w.push_back(std::move(rows));
        out.b.push_back(bld.witnesses(m.biases()[static_cast<std::size_t>(l)]));
    }
    return out;
}

std::vector<Sig> declare_bits(Builder& bld, const ActivationCode& code) {
    std::vector<Sig> out;
    for (std::size_t i = 0; i < code.size(); ++i) out.push_back(bld.boolean(code[i]));
    return out;
}

/// Forward pass with the ReLU pattern fixed by `bits`; each bit is tied to
/// the sign of its pre-activation (1 iff > 0). Returns logits if requested.
std::vector<Sig> forward_with_code(Builder& bld, const ModelSigs& ms, const QuantizedModel& m,
                                   const std::vector<Sig>& x, const std::vector<Sig>& bits, bool with_logits) {
    std::vector<Sig> a = x;
    Int den = pow2(kPointBits);
    std::size_t offset = 0;
    for (int l = 0; l < m.n_layers(); ++l) {
        bool last = l + 1 == m.n_layers();
        if (last && !with_logits) break;
        const auto& w = ms.w[static_cast<std::size_t>(l)];
        std::vector<Sig> z;
        for (std::size_t r = 0; r < w.size(); ++r) {
            std::vector<Sig> terms;
            for (std::size_t c = 0; c < a.size(); ++c) terms.push_back(bld.mul(w[r][c], a[c]));
            terms.push_back(bld.scale(ms.b[static_cast<std::size_t>(l)][r], den));
            z.push_back(bld.sum(terms));
        }
        if (last) return z;
        for (std::size_t r = 0; r < z.size(); ++r) {
            const Sig& bit = bits[offset + r];
            Sig t = bld.mul(bit, z[r]);
            // bit = 1: z - 1 >= 0; bit = 0: -z >= 0.
            bld.nonneg(bld.sub(bld.sub(bld.scale(t, 2), z[r]), bit), kWideBits);
            z[r] = t;
        }
        offset += z.size();
        a = std::move(z);
        den *= pow2(m.scale_bits());
    }
    return {};
}

struct AffineSigs {
    std::vector<std::vector<Sig>> m;
    std::vector<Sig> c;
};

std::vector<AffineSigs> masked_maps(Builder& bld, const ModelSigs& ms, const QuantizedModel& qm,
                                    const std::vector<Sig>& bits) {
    std::vector<AffineSigs> maps;
    maps.push_back(AffineSigs{ms.w[0], ms.b[0]});
    std::size_t offset = 0;
    for (int l = 1; l < qm.n_layers(); ++l) {
        const auto& prev = maps.back();
        std::vector<std::vector<Sig>> pm;
        std::vector<Sig> pc;
        for (std::size_t j = 0; j < prev.m.size(); ++j) {
            std::vector<Sig> row;
            for (const auto& v : prev.m[j]) row.push_back(bld.mul(bits[offset + j], v));
            pm.push_back(std::move(row));
            pc.push_back(bld.mul(bits[offset + j], prev.c[j]));
        }
        const auto& w = ms.w[static_cast<std::size_t>(l)];
        AffineSigs next;
        const Int bias_scale = pow2(qm.scale_bits() * l);
        for (std::size_t r = 0; r < w.size(); ++r) {
            std::vector<Sig> row;
            for (std::size_t k = 0; k < static_cast<std::size_t>(qm.n_inputs()); ++k) {
                std::vector<Sig> terms;
                for (std::size_t j = 0; j < pm.size(); ++j) terms.push_back(bld.mul(w[r][j], pm[j][k]));
                row.push_back(bld.sum(terms));
            }
            std::vector<Sig> cterms;
            for (std::size_t j = 0; j < pc.size(); ++j) cterms.push_back(bld.mul(w[r][j], pc[j]));
            cterms.push_back(bld.scale(ms.b[static_cast<std::size_t>(l)][r], bias_scale));
            next.m.push_back(std::move(row));
            next.c.push_back(bld.sum(cterms));
        }
        offset += prev.m.size();
        maps.push_back(std::move(next));
    }
    return maps;
}

struct RowSig {
    std::vector<Sig> a;
    Sig b;
};

std::vector<RowSig> sliced_rows(Builder& bld, const std::vector<AffineSigs>& maps, const std::vector<Sig>& bits,
                                const SliceContext& ctx) {
    std::vector<RowSig> full;
    std::size_t i = 0;
    for (std::size_t l = 0; l + 1 < maps.size(); ++l) {
        for (std::size_t r = 0; r < maps[l].m.size(); ++r, ++i) {
            RowSig row;
            for (const auto& v : maps[l].m[r]) row.a.push_back(bld.sub(v, bld.scale(bld.mul(bits[i], v), 2)));
            row.b = bld.sub(bld.scale(bld.mul(bits[i], maps[l].c[r]), 2), maps[l].c[r]);
            full.push_back(std::move(row));
        }
    }
    const auto& out = maps.back();
    const auto y = static_cast<std::size_t>(ctx.label);
    for (std::size_t j = 0; j < out.m.size(); ++j) {
        if (j == y) continue;
        RowSig row;
        for (std::size_t k = 0; k < out.m[j].size(); ++k) row.a.push_back(bld.sub(out.m[j][k], out.m[y][k]));
        row.b = bld.sub(out.c[y], out.c[j]);
        full.push_back(std::move(row));
    }
    const Int scale = pow2(kSensitiveBits);
    std::vector<RowSig> sliced;
    for (const auto& row : full) {
        RowSig r;
        r.b = bld.scale(row.b, scale);
        for (std::size_t k = 0; k < row.a.size(); ++k) {
            auto it = std::find(ctx.spec->indices.begin(), ctx.spec->indices.end(), static_cast<int>(k));
            if (it == ctx.spec->indices.end()) {
                r.a.push_back(bld.scale(row.a[k], scale));
            } else {
                const Int& s = ctx.s.at(static_cast<std::size_t>(it - ctx.spec->indices.begin()));
                r.b = bld.sub(r.b, bld.scale(row.a[k], s));
            }
        }
        sliced.push_back(std::move(r));
    }
    return sliced;
}

std::vector<RowSig> declare_rows(Builder& bld, const IntRows& rows) {
    std::vector<RowSig> out;
    for (const auto& r : rows) out.push_back(RowSig{bld.witnesses(r.a), bld.witness(r.b)});
    return out;
}

void rows_equal(Builder& bld, const std::vector<RowSig>& derived, const std::vector<RowSig>& claimed) {
    if (derived.size() != claimed.size() || (!derived.empty() && derived[0].a.size() != claimed[0].a.size())) {
        bld.flag_overflow();
        return;
    }
    for (std::size_t i = 0; i < derived.size(); ++i) {
        if (claimed[i].a.size() != derived[i].a.size()) {
            bld.flag_overflow();
            return;
        }
        for (std::size_t k = 0; k < derived[i].a.size(); ++k) bld.equal(derived[i].a[k], claimed[i].a[k]);
        bld.equal(derived[i].b, claimed[i].b);
    }
}

/// b * den - a . x  for a witness point.
Sig slack_sig(Builder& bld, const RowSig& row, const std::vector<Sig>& x) {
    std::vector<Sig> terms{bld.scale(row.b, pow2(kPointBits))};
    for (std::size_t k = 0; k < row.a.size() && k < x.size(); ++k) terms.push_back(bld.scale(bld.mul(row.a[k], x[k]), -1));
    return bld.sum(terms);
}

std::vector<Sig> full_point(Builder& bld, const SliceContext& ctx, const std::vector<Sig>& x_ns) {
    std::vector<Sig> full;
    std::size_t next = 0;
    const Int lift = pow2(kPointBits - kSensitiveBits);
    for (int i = 0; i < ctx.model->n_inputs(); ++i) {
        auto it = std::find(ctx.spec->indices.begin(), ctx.spec->indices.end(), i);
        if (it == ctx.spec->indices.end()) {
            full.push_back(x_ns.at(next++));
        } else {
            full.push_back(bld.constant(ctx.s.at(static_cast<std::size_t>(it - ctx.spec->indices.begin())) * lift));
        }
    }
    return full;
}

std::vector<Sig> constants(Builder& bld, const IntVec& xs) {
    std::vector<Sig> out;
    for (const auto& x : xs) out.push_back(bld.constant(x));
    return out;
}

void argmax_is(Builder& bld, const std::vector<Sig>& logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        bld.flag_overflow();
        return;
    }
    for (std::size_t j = 0; j < logits.size(); ++j) {
        if (static_cast<int>(j) == label) continue;
        Sig d = bld.sub(logits[static_cast<std::size_t>(label)], logits[j]);
        if (static_cast<int>(j) < label) d = bld.sub(d, bld.constant(1));
        bld.nonneg(d, kWideBits);
    }
}

void compile(Builder& bld, const PolytopeInput& in) {
    const auto& m = *in.ctx.model;
    auto ms = declare_model(bld, m);
    auto bits = declare_bits(bld, in.code);
    if (bits.size() != static_cast<std::size_t>(m.total_hidden())) return bld.flag_overflow();
    auto x = constants(bld, assemble_point(*in.ctx.spec, m.n_inputs(), in.x_ns, in.ctx.s));
    auto logits = forward_with_code(bld, ms, m, x, bits, true);
    argmax_is(bld, logits, in.slice_label);
    auto derived = sliced_rows(bld, masked_maps(bld, ms, m, bits), bits, in.ctx);
    rows_equal(bld, derived, declare_rows(bld, in.rows));
}

void compile(Builder& bld, const DistanceInput& in) {
    auto a = bld.witnesses(in.row.a);
    Sig b = bld.witness(in.row.b);
    if (a.size() != in.x_ns.size()) return bld.flag_overflow();
    std::vector<Sig> sq;
    for (const auto& v : a) sq.push_back(bld.mul(v, v));
    Sig n = bld.sum(sq);
    Int n_mod = mod_p(n.value);
    Int inv = 0;
    if (n_mod != 0) mpz_invert(inv.get_mpz_t(), n_mod.get_mpz_t(), field_modulus().get_mpz_t());
    bld.equal(bld.mul(n, bld.field_witness(inv)), bld.constant(1));

    std::vector<Sig> terms{bld.scale(b, pow2(kPointBits))};
    for (std::size_t k = 0; k < a.size(); ++k) terms.push_back(bld.scale(a[k], -in.x_ns[k]));
    Sig r = bld.sum(terms);
    Sig d = bld.witness(in.d_sq);
    Sig q = bld.add(bld.scale(bld.mul(r, r), pow2(17)), bld.scale(n, pow2(2 * kPointBits)));
    Sig dm = bld.scale(bld.mul(d, n), pow2(2 * kPointBits + 1));
    Sig rem = bld.sub(q, dm);
    bld.nonneg(rem, kWideBits);
    bld.nonneg(bld.sub(bld.sub(bld.scale(n, pow2(2 * kPointBits + 1)), bld.constant(1)), rem), kWideBits);
    bld.nonneg(d, in.distance_bits);
}

void compile(Builder& bld, const OrderInput& in) {
    Sig d = bld.witness(in.d_sq);
    for (const auto& t : in.pending) bld.geq(bld.witness(t), d, in.distance_bits);
}

void compile(Builder& bld, const BoundaryInput& in) {
    const auto& m = *in.ctx.model;
    auto rows = declare_rows(bld, in.rows);
    auto p = bld.witnesses(in.point);
    if (in.row < 0 || static_cast<std::size_t>(in.row) >= rows.size()) return bld.flag_overflow();
    for (const auto& row : rows) bld.nonneg(slack_sig(bld, row, p), kWideBits);

    const auto& tight = rows[static_cast<std::size_t>(in.row)];
    Sig r = slack_sig(bld, tight, p);
    std::vector<Sig> sq;
    for (const auto& v : tight.a) sq.push_back(bld.mul(v, v));
    Sig n = bld.sum(sq);
    bld.nonneg(bld.sub(bld.scale(n, pow2(2 * kPointBits)), bld.scale(bld.mul(r, r), pow2(2 * kFacetSlackBits))),
               kWideBits);

    auto ms = declare_model(bld, m);
    auto bits = declare_bits(bld, in.code);
    if (bits.size() != static_cast<std::size_t>(m.total_hidden())) return bld.flag_overflow();
    auto maps = masked_maps(bld, ms, m, bits);
    rows_equal(bld, sliced_rows(bld, maps, bits, in.ctx), rows);
    auto x = full_point(bld, in.ctx, p);
    const auto& out = maps.back();
    std::vector<Sig> logits;
    for (std::size_t j = 0; j < out.m.size(); ++j) {
        std::vector<Sig> terms{bld.scale(out.c[j], pow2(kPointBits))};
        for (std::size_t k = 0; k < x.size(); ++k) terms.push_back(bld.mul(out.m[j][k], x[k]));
        logits.push_back(bld.sum(terms));
    }
    const auto y = static_cast<std::size_t>(in.ctx.label);
    Sig den = bld.constant(pow2(kPointBits + m.scale_bits() * m.n_layers()));
    if (in.boundary) {
        std::size_t best = y == 0 ? 1 : 0;
        for (std::size_t j = 0; j < logits.size(); ++j)
            if (j != y && logits[j].value > logits[best].value) best = j;
        bld.nonneg(bld.sub(den, bld.scale(bld.sub(logits[y], logits[best]), pow2(kBoundaryTolBits))), kWideBits);
    } else {
        for (std::size_t j = 0; j < logits.size(); ++j) {
            if (j == y) continue;
            Sig gap = bld.scale(bld.sub(logits[y], logits[j]), pow2(kBoundaryTolBits));
            bld.nonneg(bld.sub(bld.sub(gap, den), bld.constant(1)), kWideBits);
        }
    }
}

void compile(Builder& bld, const NeighborInput& in) {
    const auto& m = *in.ctx.model;
    auto ms = declare_model(bld, m);
    auto bits = declare_bits(bld, in.code);
    if (bits.size() != static_cast<std::size_t>(m.total_hidden())) return bld.flag_overflow();
    auto p = bld.witnesses(in.point);
    forward_with_code(bld, ms, m, full_point(bld, in.ctx, p), bits, false);
    auto claimed = declare_rows(bld, in.rows);
    rows_equal(bld, sliced_rows(bld, masked_maps(bld, ms, m, bits), bits, in.ctx), claimed);
    if (in.row < 0 || static_cast<std::size_t>(in.row) >= claimed.size()) return bld.flag_overflow();
    const auto& shared = claimed[static_cast<std::size_t>(in.row)];
    auto owner_a = bld.witnesses(in.owner_row.a);
    Sig owner_b = bld.witness(in.owner_row.b);
    if (owner_a.size() != shared.a.size()) return bld.flag_overflow();
    for (std::size_t k = 0; k < owner_a.size(); ++k) bld.equal(bld.add(shared.a[k], owner_a[k]), bld.constant(0));
    bld.equal(bld.add(shared.b, owner_b), bld.constant(0));
    for (std::size_t k = static_cast<std::size_t>(m.total_hidden()); k < claimed.size(); ++k)
        bld.nonneg(slack_sig(bld, claimed[k], p), kWideBits);
}

void compile(Builder& bld, const MinInput& in) {
    if (in.values.empty() || in.values.size() != in.terminals.size()) return bld.flag_overflow();
    auto values = bld.witnesses(in.values);
    for (std::size_t i = 0; i < values.size(); ++i) bld.equal(values[i], bld.constant(in.terminals[i].rounded));
    Sig eps_sq = bld.witness(in.eps_sq);
    Sig prod = bld.constant(1);
    for (const auto& v : values) {
        bld.geq(v, eps_sq, in.distance_bits);
        prod = bld.mul(prod, bld.sub(v, eps_sq));
    }
    bld.equal(prod, bld.constant(0));

    Sig eps = bld.witness(in.epsilon);
    bld.nonneg(eps, kWideBits);
    Sig e2 = bld.mul(eps, eps);
    Sig up = bld.add(eps, bld.constant(1));
    Sig u2 = bld.mul(up, up);
    std::size_t tightest = 0;
    for (std::size_t i = 0; i < in.terminals.size(); ++i) {
        const auto& t = in.terminals[i];
        const auto& best = in.terminals[tightest];
        if (t.num * best.den < best.num * t.den) tightest = i;
    }
    for (std::size_t i = 0; i < in.terminals.size(); ++i) {
        Sig num = bld.witness(in.terminals[i].num);
        Sig den = bld.witness(in.terminals[i].den);
        bld.geq(num, bld.mul(e2, den), kWideBits);
        if (i == tightest) bld.nonneg(bld.sub(bld.sub(bld.mul(u2, den), num), bld.constant(1)), kWideBits);
    }
}

void compile(Builder& bld, const InferenceInput& in) {
    const auto& m = *in.model;
    auto ms = declare_model(bld, m);
    auto bits = declare_bits(bld, in.code);
    if (bits.size() != static_cast<std::size_t>(m.total_hidden()) || in.logits.size() != static_cast<std::size_t>(m.n_classes()))
        return bld.flag_overflow();
    auto logits = forward_with_code(bld, ms, m, constants(bld, in.x), bits, true);
    auto claimed = bld.witnesses(in.logits);
    for (std::size_t j = 0; j < logits.size(); ++j) bld.equal(logits[j], claimed[j]);
    argmax_is(bld, claimed, in.label);
}

Int eval(const LinearCombination& lc, const Assignment& w) {
    Int acc = 0;
    for (const auto& t : lc) acc += t.coef * w[t.var];
    return acc;
}

} // namespace

std::pair<ConstraintSystem, Assignment> compile_check(const CheckInput& in) {
    Builder bld(kind_of(in));
    std::visit([&](const auto& x) { compile(bld, x); }, in);
    return bld.finish();
}

Evaluation evaluate_constraints(const ConstraintSystem& cs, const Assignment& w) {
    Evaluation out;
    if (w.size() != cs.num_vars || w.empty() || w[0] != 1) {
        out.satisfied = false;
        return out;
    }
    const Int& p = field_modulus();
    for (std::size_t i = 0; i < cs.constraints.size(); ++i) {
        const auto& c = cs.constraints[i];
        Int lhs = eval(c.a, w) * eval(c.b, w) - eval(c.c, w);
        if (lhs % p != 0) {
            out.satisfied = false;
            out.first_violated = static_cast<std::ptrdiff_t>(i);
            return out;
        }
    }
    if (cs.overflow) out.satisfied = false;
    return out;
}

CheckResult ConstraintBackend::run(const CheckInput& in) {
    auto [cs, w] = compile_check(in);
    totals_[cs.kind] += cs.constraints.size();
    instances_[cs.kind] += 1;
    auto ev = evaluate_constraints(cs, w);
    if (ev.satisfied) return {};
    if (cs.overflow && ev.first_violated < 0) return CheckResult{false, "witness outside the field's signed range"};
    return CheckResult{false, "constraint " + std::to_string(ev.first_violated) + " of " +
                                  std::to_string(cs.constraints.size()) + " violated"};
}

} // namespace faircert
