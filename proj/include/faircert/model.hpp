#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace faircert {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Layer {
    Matrix weights; // out x in
    Vector bias;    // out
};

/// Fully-connected ReLU classifier. ReLU follows every layer except the last;
/// the last layer emits one logit per class.
class ModelWeights {
public:
    /// Validates dimension chaining, n_classes >= 2 and finiteness.
    explicit ModelWeights(std::vector<Layer> layers);

    int n_inputs() const { return static_cast<int>(layers_.front().weights.cols()); }
    int n_classes() const { return static_cast<int>(layers_.back().weights.rows()); }
    int n_layers() const { return static_cast<int>(layers_.size()); }
    std::vector<int> hidden_sizes() const;
    int total_hidden() const;

    const std::vector<Layer>& layers() const { return layers_; }

    Vector logits(const Vector& x) const;
    /// argmax of the logits; the lowest index wins ties.
    int predict(const Vector& x) const;

    static ModelWeights from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    static ModelWeights load(const std::string& path);
    void save(const std::string& path) const;

    bool operator==(const ModelWeights& other) const;

private:
    std::vector<Layer> layers_;
};

int argmax_lowest(const Vector& v);

/// Checks len(x) == n and every entry is finite.
void require_point(const Vector& x, int n, const char* what);

} // namespace faircert
