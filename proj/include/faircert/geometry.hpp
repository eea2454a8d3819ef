#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "faircert/model.hpp"

namespace faircert {

/// On/off state of every hidden neuron, layer-major. Identifies one linear region.
class ActivationCode {
public:
    ActivationCode() = default;
    explicit ActivationCode(std::vector<std::uint8_t> bits);
    static ActivationCode from_string(const std::string& s);

    std::size_t size() const { return bits_.size(); }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    ActivationCode flipped(std::size_t i) const;
    std::string to_string() const;

    auto operator<=>(const ActivationCode&) const = default;

private:
    std::vector<std::uint8_t> bits_;
};

std::size_t hamming(const ActivationCode& a, const ActivationCode& b);

/// {x | a x <= b}. The first `neuron_rows` rows are induced by the hidden
/// neurons under `source_code`; when `label` is set, one decision row per
/// competing class follows (logit_j - logit_label <= 0), in increasing class
/// order.
struct Polytope {
    Matrix a;
    Vector b;
    int dim = 0;
    ActivationCode source_code;
    int neuron_rows = 0;
    std::optional<int> label;
    std::vector<int> decision_classes;

    int rows() const { return static_cast<int>(a.rows()); }
    bool is_decision_row(int i) const { return i >= neuron_rows; }
    bool contains(const Vector& x, double tol = 1e-9) const;
};

struct Hyperplane {
    Vector a;
    double b = 0.0;
};

struct Facet {
    ActivationCode owner_code;
    int tight_row = 0;
    Hyperplane hyperplane;
    bool is_boundary = false;
    std::optional<ActivationCode> flipped_code;
};

struct SensitiveFeature {
    int index = 0;
    std::vector<double> domain;
};

/// Sensitive feature set with finite domains. Enumeration is lexicographic in
/// the listed order: the first feature varies slowest.
class SensitiveSpec {
public:
    SensitiveSpec() = default;
    SensitiveSpec(std::vector<SensitiveFeature> features, int n_inputs);

    int k() const { return static_cast<int>(features_.size()); }
    int n_inputs() const { return n_inputs_; }
    const std::vector<SensitiveFeature>& features() const { return features_; }
    std::vector<int> sensitive_indices() const;
    const std::vector<int>& non_sensitive_indices() const { return non_sensitive_; }

    std::vector<std::vector<double>> enumerate() const;

    Vector project_out(const Vector& x) const;
    Vector assemble(const Vector& x_ns, const std::vector<double>& s) const;
    bool is_sensitive(int index) const;

    static SensitiveSpec from_json(const nlohmann::json& doc, int n_inputs);
    nlohmann::json to_json() const;
    static SensitiveSpec load(const std::string& path, int n_inputs);

private:
    std::vector<SensitiveFeature> features_;
    int n_inputs_ = 0;
    std::vector<int> non_sensitive_;
};

/// Pre-activations of every hidden neuron, layer-major.
Vector pre_activations(const ModelWeights& w, const Vector& x);

ActivationCode activation_code(const ModelWeights& w, const Vector& x);

/// Affine map of each hidden layer's pre-activation as a function of the
/// input, with earlier ReLUs replaced by the code's masks. Entry l maps
/// x -> pre-activation of hidden layer l; the final entry is the logit map.
std::vector<std::pair<Matrix, Vector>> masked_affine_maps(const ModelWeights& w, const ActivationCode& code);

Polytope polytope_from_code(const ModelWeights& w, const ActivationCode& code);

/// Appends the decision rows for `label` to a polytope built from `code`.
Polytope decision_cell(const ModelWeights& w, const ActivationCode& code, int label);

std::pair<Matrix, Vector> linear_map_from_code(const ModelWeights& w, const ActivationCode& code);

Polytope reduce_poly_dim(const Polytope& p, const SensitiveSpec& spec, const std::vector<double>& s);

double projection_distance(const Vector& x, const Hyperplane& h);

/// Orthogonal projection of x onto the hyperplane.
Vector projection_foot(const Vector& x, const Hyperplane& h);

struct ChebyshevBall {
    Vector center;
    double radius = 0.0;
};

/// Chebyshev center of p intersected with [-box_bound, box_bound]^d. With
/// `tight_row`, the ball lives inside the hyperplane of that row (facet
/// representative point). Returns nullopt when the region is empty.
std::optional<ChebyshevBall> representative_point(const Polytope& p, double box_bound,
                                                  std::optional<int> tight_row = std::nullopt);

} // namespace faircert
