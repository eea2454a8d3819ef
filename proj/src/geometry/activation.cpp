#include <stdexcept>

#include "faircert/error.hpp"
#include "faircert/geometry.hpp"

namespace faircert {

ActivationCode::ActivationCode(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) {
        if (b > 1) {
            throw SchemaError("activation code bits must be 0 or 1");
        }
    }
}

ActivationCode ActivationCode::from_string(const std::string& s) {
    std::vector<std::uint8_t> bits;
    bits.reserve(s.size());
    for (char c : s) {
        if (c != '0' && c != '1') {
            throw SchemaError("activation code string must contain only 0 and 1: \"" + s + "\"");
        }
        bits.push_back(c == '1' ? 1 : 0);
    }
    return ActivationCode(std::move(bits));
}

ActivationCode ActivationCode::flipped(std::size_t i) const {
    if (i >= bits_.size()) {
        throw DimensionError("bit index out of range");
    }
    auto copy = bits_;
    copy[i] ^= 1U;
    return ActivationCode(std::move(copy));
}

std::string ActivationCode::to_string() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto b : bits_) {
        s.push_back(b != 0 ? '1' : '0');
    }
    return s;
}

std::size_t hamming(const ActivationCode& a, const ActivationCode& b) {
    if (a.size() != b.size()) {
        throw DimensionError("hamming distance of codes with different lengths");
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] != b[i]) ? 1 : 0;
    }
    return d;
}

Vector pre_activations(const ModelWeights& w, const Vector& x) {
    require_point(x, w.n_inputs(), "input");
    Vector all(w.total_hidden());
    Vector h = x;
    Eigen::Index offset = 0;
    const auto& layers = w.layers();
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        Vector pre = layers[l].weights * h + layers[l].bias;
        all.segment(offset, pre.size()) = pre;
        offset += pre.size();
        h = pre.cwiseMax(0.0);
    }
    return all;
}

ActivationCode activation_code(const ModelWeights& w, const Vector& x) {
    const Vector pre = pre_activations(w, x);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(pre.size()));
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
        // ties map to 0
        bits[static_cast<std::size_t>(i)] = pre[i] > 0.0 ? 1 : 0;
    }
    return ActivationCode(std::move(bits));
}

std::vector<std::pair<Matrix, Vector>> masked_affine_maps(const ModelWeights& w, const ActivationCode& code) {
    if (static_cast<int>(code.size()) != w.total_hidden()) {
        throw DimensionError("activation code has length " + std::to_string(code.size()) + ", expected " +
                             std::to_string(w.total_hidden()));
    }
    const auto& layers = w.layers();
    std::vector<std::pair<Matrix, Vector>> maps;
    maps.reserve(layers.size());
    Matrix a = layers[0].weights;
    Vector c = layers[0].bias;
    maps.emplace_back(a, c);
    std::size_t offset = 0;
    for (std::size_t l = 1; l < layers.size(); ++l) {
        // mask rows of the previous pre-activation map
        const auto width = static_cast<std::size_t>(a.rows());
        for (std::size_t i = 0; i < width; ++i) {
            if (!code[offset + i]) {
                a.row(static_cast<Eigen::Index>(i)).setZero();
                c[static_cast<Eigen::Index>(i)] = 0.0;
            }
        }
        offset += width;
        Matrix next_a = layers[l].weights * a;
        Vector next_c = layers[l].weights * c + layers[l].bias;
        a = std::move(next_a);
        c = std::move(next_c);
        maps.emplace_back(a, c);
    }
    return maps;
}

std::pair<Matrix, Vector> linear_map_from_code(const ModelWeights& w, const ActivationCode& code) {
    auto maps = masked_affine_maps(w, code);
    return std::move(maps.back());
}

} // namespace faircert
