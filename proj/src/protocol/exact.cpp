#include "faircert/protocol/exact.hpp"

#include <algorithm>

#include "faircert/error.hpp"

namespace faircert {

Int pow2(int bits) {
    Int r = 1;
    r <<= static_cast<mp_bitcnt_t>(bits);
    return r;
}

std::string to_decimal(const Int& v) { return v.get_str(10); }

Int from_decimal(const std::string& s) {
    Int v;
    if (s.empty() || v.set_str(s, 10) != 0) throw SchemaError("not a decimal integer: '" + s + "'");
    return v;
}

IntVec to_ints(const Vector& v, int bits) {
    IntVec out;
    out.reserve(static_cast<std::size_t>(v.size()));
    for (double x : v) out.push_back(quantize_dyadic(x, bits));
    return out;
}

QuantizedModel::QuantizedModel(const ModelWeights& w, const FixedPointEncoding& enc)
    : n_inputs_(w.n_inputs()), n_classes_(w.n_classes()), scale_bits_(enc.scale_bits) {
    for (const auto& layer : w.layers()) {
        std::vector<IntVec> rows;
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            IntVec row;
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) row.push_back(enc.quantize(layer.weights(r, c)));
            rows.push_back(std::move(row));
        }
        IntVec bias;
        for (double b : layer.bias) bias.push_back(enc.quantize(b));
        weights_.push_back(std::move(rows));
        biases_.push_back(std::move(bias));
    }
}

QuantizedModel::QuantizedModel(int n_inputs, int scale_bits, std::vector<std::vector<IntVec>> weights,
                               std::vector<IntVec> biases)
    : n_inputs_(n_inputs), scale_bits_(scale_bits), weights_(std::move(weights)), biases_(std::move(biases)) {
    if (weights_.empty() || weights_.size() != biases_.size()) throw SchemaError("layer count mismatch");
    std::size_t width = static_cast<std::size_t>(n_inputs_);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (weights_[l].empty() || biases_[l].size() != weights_[l].size()) throw SchemaError("bias shape mismatch");
        for (const auto& row : weights_[l])
            if (row.size() != width) throw SchemaError("weight shape mismatch");
        width = weights_[l].size();
    }
    n_classes_ = static_cast<int>(width);
}

int QuantizedModel::total_hidden() const {
    int h = 0;
    for (int l = 0; l + 1 < n_layers(); ++l) h += static_cast<int>(weights_[static_cast<std::size_t>(l)].size());
    return h;
}

std::vector<int> QuantizedModel::hidden_sizes() const {
    std::vector<int> out;
    for (int l = 0; l + 1 < n_layers(); ++l) out.push_back(static_cast<int>(weights_[static_cast<std::size_t>(l)].size()));
    return out;
}

ModelWeights QuantizedModel::dequantize() const {
    std::vector<Layer> layers;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Layer layer;
        layer.weights = Matrix(static_cast<Eigen::Index>(weights_[l].size()),
                               static_cast<Eigen::Index>(weights_[l].front().size()));
        layer.bias = Vector(static_cast<Eigen::Index>(biases_[l].size()));
        for (std::size_t r = 0; r < weights_[l].size(); ++r) {
            for (std::size_t c = 0; c < weights_[l][r].size(); ++c)
                layer.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    dyadic_to_double(weights_[l][r][c], scale_bits_);
            layer.bias(static_cast<Eigen::Index>(r)) = dyadic_to_double(biases_[l][r], scale_bits_);
        }
        layers.push_back(std::move(layer));
    }
    return ModelWeights(std::move(layers));
}

QuantizedSpec QuantizedSpec::from(const SensitiveSpec& spec) {
    QuantizedSpec q;
    for (const auto& f : spec.features()) {
        q.indices.push_back(f.index);
        IntVec dom;
        for (double v : f.domain) dom.push_back(quantize_dyadic(v, kSensitiveBits));
        q.domains.push_back(std::move(dom));
    }
    return q;
}

SensitiveSpec QuantizedSpec::dequantize(int n_inputs) const {
    std::vector<SensitiveFeature> features;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        SensitiveFeature f{indices[i], {}};
        for (const auto& v : domains[i]) f.domain.push_back(dyadic_to_double(v, kSensitiveBits));
        features.push_back(std::move(f));
    }
    return SensitiveSpec(std::move(features), n_inputs);
}

std::vector<IntVec> QuantizedSpec::enumerate() const {
    std::vector<IntVec> out{IntVec{}};
    for (const auto& dom : domains) {
        std::vector<IntVec> next;
        for (const auto& prefix : out) {
            for (const auto& v : dom) {
                IntVec e = prefix;
                e.push_back(v);
                next.push_back(std::move(e));
            }
        }
        out = std::move(next);
    }
    return out;
}

IntVec assemble_point(const QuantizedSpec& spec, int n_inputs, const IntVec& x_ns, const IntVec& s) {
    IntVec full(static_cast<std::size_t>(n_inputs));
    std::vector<int> slot(static_cast<std::size_t>(n_inputs), -1);
    for (std::size_t k = 0; k < spec.indices.size(); ++k) slot[static_cast<std::size_t>(spec.indices[k])] = static_cast<int>(k);
    std::size_t next = 0;
    const Int lift = pow2(kPointBits - kSensitiveBits);
    for (int i = 0; i < n_inputs; ++i) {
        int k = slot[static_cast<std::size_t>(i)];
        if (k >= 0) {
            full[static_cast<std::size_t>(i)] = s.at(static_cast<std::size_t>(k)) * lift;
        } else {
            full[static_cast<std::size_t>(i)] = x_ns.at(next++);
        }
    }
    if (next != x_ns.size()) throw DimensionError("sliced point has wrong length");
    return full;
}

IntVec project_out_point(const QuantizedSpec& spec, const IntVec& x) {
    IntVec out;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::find(spec.indices.begin(), spec.indices.end(), static_cast<int>(i)) == spec.indices.end())
            out.push_back(x[i]);
    return out;
}

ForwardPass forward_exact(const QuantizedModel& m, const IntVec& x, const Int& den) {
    if (static_cast<int>(x.size()) != m.n_inputs()) throw DimensionError("point has wrong length");
    ForwardPass out;
    IntVec a = x;
    Int d = den;
    for (int l = 0; l < m.n_layers(); ++l) {
        const auto& w = m.weights()[static_cast<std::size_t>(l)];
        const auto& b = m.biases()[static_cast<std::size_t>(l)];
        IntVec z(w.size());
        for (std::size_t r = 0; r < w.size(); ++r) z[r] = dot(w[r], a) + b[r] * d;
        if (l + 1 == m.n_layers()) {
            out.logits = std::move(z);
            break;
        }
        for (auto& v : z) out.pre.push_back(v);
        for (auto& v : z)
            if (v < 0) v = 0;
        a = std::move(z);
        d *= pow2(m.scale_bits());
    }
    return out;
}

ActivationCode code_exact(const ForwardPass& f) {
    std::vector<std::uint8_t> bits;
    for (const auto& v : f.pre) bits.push_back(v > 0 ? 1 : 0);
    return ActivationCode(std::move(bits));
}

int argmax_exact(const IntVec& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    return best;
}

std::vector<IntAffine> masked_maps_exact(const QuantizedModel& m, const ActivationCode& code) {
    if (static_cast<int>(code.size()) != m.total_hidden()) throw DimensionError("activation code has wrong length");
    std::vector<IntAffine> maps;
    IntAffine first{m.weights()[0], m.biases()[0]};
    maps.push_back(std::move(first));
    std::size_t offset = 0;
    for (int l = 1; l < m.n_layers(); ++l) {
        const auto& prev = maps.back();
        const auto& w = m.weights()[static_cast<std::size_t>(l)];
        const auto& b = m.biases()[static_cast<std::size_t>(l)];
        const std::size_t width = prev.m.size();
        const std::size_t n = static_cast<std::size_t>(m.n_inputs());
        IntAffine next;
        next.m.assign(w.size(), IntVec(n, Int(0)));
        next.c.assign(w.size(), Int(0));
        const Int bias_scale = pow2(m.scale_bits() * l);
        for (std::size_t r = 0; r < w.size(); ++r) {
            for (std::size_t j = 0; j < width; ++j) {
                if (!code[offset + j] || w[r][j] == 0) continue;
                for (std::size_t k = 0; k < n; ++k) next.m[r][k] += w[r][j] * prev.m[j][k];
                next.c[r] += w[r][j] * prev.c[j];
            }
            next.c[r] += b[r] * bias_scale;
        }
        offset += width;
        maps.push_back(std::move(next));
    }
    return maps;
}

IntRows rows_exact(const QuantizedModel& m, const ActivationCode& code, int label) {
    auto maps = masked_maps_exact(m, code);
    IntRows rows;
    std::size_t i = 0;
    for (std::size_t l = 0; l + 1 < maps.size(); ++l) {
        for (std::size_t r = 0; r < maps[l].m.size(); ++r, ++i) {
            IntRow row{maps[l].m[r], maps[l].c[r]};
            if (code[i]) {
                for (auto& v : row.a) v = -v;
            } else {
                row.b = -row.b;
            }
            rows.push_back(std::move(row));
        }
    }
    const auto& out = maps.back();
    const auto y = static_cast<std::size_t>(label);
    for (std::size_t j = 0; j < out.m.size(); ++j) {
        if (j == y) continue;
        IntRow row;
        for (std::size_t k = 0; k < out.m[j].size(); ++k) row.a.push_back(out.m[j][k] - out.m[y][k]);
        row.b = out.c[y] - out.c[j];
        rows.push_back(std::move(row));
    }
    return rows;
}

IntRows slice_rows(const IntRows& rows, const QuantizedSpec& spec, const IntVec& s) {
    const Int scale = pow2(kSensitiveBits);
    IntRows out;
    for (const auto& row : rows) {
        IntRow r;
        r.b = row.b * scale;
        for (std::size_t i = 0; i < row.a.size(); ++i) {
            auto it = std::find(spec.indices.begin(), spec.indices.end(), static_cast<int>(i));
            if (it == spec.indices.end()) {
                r.a.push_back(row.a[i] * scale);
            } else {
                r.b -= row.a[i] * s.at(static_cast<std::size_t>(it - spec.indices.begin()));
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

Int dot(const IntVec& a, const IntVec& x) {
    if (a.size() != x.size()) throw DimensionError("dot product of mismatched lengths");
    Int acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * x[i];
    return acc;
}

Int slack(const IntRow& row, const IntVec& x, const Int& den) { return row.b * den - dot(row.a, x); }

Int norm_sq(const IntVec& a) {
    Int acc = 0;
    for (const auto& v : a) acc += v * v;
    return acc;
}

Int round_scaled(const Int& num, const Int& den) {
    Int q = (2 * num * pow2(16) + den);
    Int d2 = 2 * den;
    mpz_fdiv_q(q.get_mpz_t(), q.get_mpz_t(), d2.get_mpz_t());
    return q;
}

SquaredDistance squared_distance(const IntRow& row, const IntVec& x, const Int& den) {
    Int n = norm_sq(row.a);
    if (n == 0) throw Error("distance to a degenerate row");
    Int r = slack(row, x, den);
    SquaredDistance out;
    out.num = r * r;
    out.den = den * den * n;
    out.rounded = round_scaled(out.num, out.den);
    return out;
}

SquaredDistance box_squared_distance(const IntVec& x, const Int& den, long box_bound) {
    Int worst = 0;
    for (const auto& v : x) worst = std::max(worst, Int(abs(v)));
    Int r = Int(box_bound) * den - worst;
    if (r < 0) r = 0;
    SquaredDistance out;
    out.num = r * r;
    out.den = den * den;
    out.rounded = round_scaled(out.num, out.den);
    return out;
}

} // namespace faircert
