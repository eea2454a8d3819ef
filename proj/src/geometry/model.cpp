#include "faircert/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "faircert/error.hpp"

namespace faircert {

namespace {

bool all_finite(const Matrix& m) {
    return m.allFinite();
}

} // namespace

ModelWeights::ModelWeights(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) {
        throw SchemaError("model has no layers");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        if (layer.weights.rows() == 0 || layer.weights.cols() == 0) {
            throw SchemaError("layer " + std::to_string(l) + " has an empty weight matrix");
        }
        if (layer.bias.size() != layer.weights.rows()) {
            throw SchemaError("layer " + std::to_string(l) + ": bias length " +
                              std::to_string(layer.bias.size()) + " != rows " +
                              std::to_string(layer.weights.rows()));
        }
        if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
            throw SchemaError("layer " + std::to_string(l) + ": input width " +
                              std::to_string(layer.weights.cols()) + " != previous output " +
                              std::to_string(layers_[l - 1].weights.rows()));
        }
        if (!all_finite(layer.weights) || !layer.bias.allFinite()) {
            throw SchemaError("layer " + std::to_string(l) + " has non-finite entries");
        }
    }
    if (n_classes() < 2) {
        throw SchemaError("model must have at least two classes");
    }
}

std::vector<int> ModelWeights::hidden_sizes() const {
    std::vector<int> sizes;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        sizes.push_back(static_cast<int>(layers_[l].weights.rows()));
    }
    return sizes;
}

int ModelWeights::total_hidden() const {
    int total = 0;
    for (int s : hidden_sizes()) {
        total += s;
    }
    return total;
}

Vector ModelWeights::logits(const Vector& x) const {
    require_point(x, n_inputs(), "input");
    Vector h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Vector pre = layers_[l].weights * h + layers_[l].bias;
        h = (l + 1 < layers_.size()) ? Vector(pre.cwiseMax(0.0)) : pre;
    }
    return h;
}

int ModelWeights::predict(const Vector& x) const {
    return argmax_lowest(logits(x));
}

int argmax_lowest(const Vector& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

void require_point(const Vector& x, int n, const char* what) {
    if (x.size() != n) {
        throw DimensionError(std::string(what) + " has dimension " + std::to_string(x.size()) +
                             ", expected " + std::to_string(n));
    }
    if (!x.allFinite()) {
        throw DimensionError(std::string(what) + " has non-finite entries");
    }
}

ModelWeights ModelWeights::from_json(const nlohmann::json& doc) {
    auto field = [&](const nlohmann::json& obj, const char* key, const std::string& where) -> const nlohmann::json& {
        if (!obj.is_object() || !obj.contains(key)) {
            throw SchemaError(where + ": missing field \"" + key + "\"");
        }
        return obj.at(key);
    };
    const auto& jlayers = field(doc, "layers", "model");
    if (!jlayers.is_array() || jlayers.empty()) {
        throw SchemaError("model: \"layers\" must be a non-empty array");
    }
    std::vector<Layer> layers;
    for (std::size_t l = 0; l < jlayers.size(); ++l) {
        const std::string where = "model.layers[" + std::to_string(l) + "]";
        const auto& jw = field(jlayers[l], "weights", where);
        const auto& jb = field(jlayers[l], "bias", where);
        if (!jw.is_array() || jw.empty() || !jw[0].is_array()) {
            throw SchemaError(where + ".weights must be a non-empty array of rows");
        }
        const auto rows = static_cast<Eigen::Index>(jw.size());
        const auto cols = static_cast<Eigen::Index>(jw[0].size());
        Layer layer{Matrix(rows, cols), Vector(rows)};
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto& jrow = jw[static_cast<std::size_t>(r)];
            if (!jrow.is_array() || static_cast<Eigen::Index>(jrow.size()) != cols) {
                throw SchemaError(where + ".weights[" + std::to_string(r) + "] has wrong length");
            }
            for (Eigen::Index c = 0; c < cols; ++c) {
                const auto& v = jrow[static_cast<std::size_t>(c)];
                if (!v.is_number()) {
                    throw SchemaError(where + ".weights[" + std::to_string(r) + "][" + std::to_string(c) +
                                      "] is not a number");
                }
                layer.weights(r, c) = v.get<double>();
            }
        }
        if (!jb.is_array() || static_cast<Eigen::Index>(jb.size()) != rows) {
            throw SchemaError(where + ".bias must have " + std::to_string(rows) + " entries");
        }
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto& v = jb[static_cast<std::size_t>(r)];
            if (!v.is_number()) {
                throw SchemaError(where + ".bias[" + std::to_string(r) + "] is not a number");
            }
            layer.bias[r] = v.get<double>();
        }
        layers.push_back(std::move(layer));
    }
    ModelWeights model(std::move(layers));
    if (field(doc, "n_inputs", "model").get<int>() != model.n_inputs()) {
        throw SchemaError("model: n_inputs does not match first layer width");
    }
    if (field(doc, "n_classes", "model").get<int>() != model.n_classes()) {
        throw SchemaError("model: n_classes does not match last layer height");
    }
    return model;
}

nlohmann::json ModelWeights::to_json() const {
    nlohmann::json jlayers = nlohmann::json::array();
    for (const Layer& layer : layers_) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                row.push_back(layer.weights(r, c));
            }
            rows.push_back(std::move(row));
        }
        nlohmann::json bias = nlohmann::json::array();
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
            bias.push_back(layer.bias[r]);
        }
        jlayers.push_back({{"weights", std::move(rows)}, {"bias", std::move(bias)}});
    }
    return {{"n_inputs", n_inputs()}, {"n_classes", n_classes()}, {"layers", std::move(jlayers)}};
}

ModelWeights ModelWeights::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open model file " + path);
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
    try {
        return from_json(doc);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

void ModelWeights::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw SchemaError("cannot write model file " + path);
    }
    out << to_json().dump() << '\n';
}

bool ModelWeights::operator==(const ModelWeights& other) const {
    if (layers_.size() != other.layers_.size()) {
        return false;
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& a = layers_[l];
        const auto& b = other.layers_[l];
        if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols() ||
            a.weights != b.weights || a.bias != b.bias) {
            return false;
        }
    }
    return true;
}

} // namespace faircert
