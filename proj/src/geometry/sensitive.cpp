#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "faircert/error.hpp"
#include "faircert/geometry.hpp"

namespace faircert {

SensitiveSpec::SensitiveSpec(std::vector<SensitiveFeature> features, int n_inputs)
    : features_(std::move(features)), n_inputs_(n_inputs) {
    std::set<int> seen;
    for (const auto& f : features_) {
        if (f.index < 0 || f.index >= n_inputs_) {
            throw DimensionError("sensitive index " + std::to_string(f.index) + " out of range for " +
                                 std::to_string(n_inputs_) + " inputs");
        }
        if (!seen.insert(f.index).second) {
            throw SchemaError("sensitive index " + std::to_string(f.index) + " listed twice");
        }
        if (f.domain.empty()) {
            throw SchemaError("sensitive feature " + std::to_string(f.index) + " has an empty domain");
        }
        for (double v : f.domain) {
            if (!std::isfinite(v)) {
                throw SchemaError("sensitive feature " + std::to_string(f.index) + " has a non-finite value");
            }
        }
    }
    for (int i = 0; i < n_inputs_; ++i) {
        if (!seen.count(i)) {
            non_sensitive_.push_back(i);
        }
    }
}

std::vector<int> SensitiveSpec::sensitive_indices() const {
    std::vector<int> out;
    for (const auto& f : features_) {
        out.push_back(f.index);
    }
    return out;
}

bool SensitiveSpec::is_sensitive(int index) const {
    return std::any_of(features_.begin(), features_.end(), [&](const auto& f) { return f.index == index; });
}

std::vector<std::vector<double>> SensitiveSpec::enumerate() const {
    std::vector<std::vector<double>> out{{}};
    for (const auto& f : features_) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : out) {
            for (double v : f.domain) {
                auto t = prefix;
                t.push_back(v);
                next.push_back(std::move(t));
            }
        }
        out = std::move(next);
    }
    return out;
}

Vector SensitiveSpec::project_out(const Vector& x) const {
    require_point(x, n_inputs_, "input");
    Vector out(static_cast<Eigen::Index>(non_sensitive_.size()));
    for (std::size_t i = 0; i < non_sensitive_.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = x[non_sensitive_[i]];
    }
    return out;
}

Vector SensitiveSpec::assemble(const Vector& x_ns, const std::vector<double>& s) const {
    if (x_ns.size() != static_cast<Eigen::Index>(non_sensitive_.size())) {
        throw DimensionError("non-sensitive point has wrong dimension");
    }
    if (static_cast<int>(s.size()) != k()) {
        throw DimensionError("sensitive value tuple has wrong arity");
    }
    Vector x(n_inputs_);
    for (std::size_t i = 0; i < non_sensitive_.size(); ++i) {
        x[non_sensitive_[i]] = x_ns[static_cast<Eigen::Index>(i)];
    }
    for (std::size_t j = 0; j < features_.size(); ++j) {
        x[features_[j].index] = s[j];
    }
    return x;
}

SensitiveSpec SensitiveSpec::from_json(const nlohmann::json& doc, int n_inputs) {
    if (!doc.is_object() || !doc.contains("features") || !doc.at("features").is_array()) {
        throw SchemaError("sensitive spec: missing \"features\" array");
    }
    std::vector<SensitiveFeature> features;
    for (const auto& jf : doc.at("features")) {
        if (!jf.is_object() || !jf.contains("index") || !jf.contains("domain") || !jf.at("domain").is_array()) {
            throw SchemaError("sensitive spec: each feature needs \"index\" and \"domain\"");
        }
        SensitiveFeature f;
        f.index = jf.at("index").get<int>();
        for (const auto& v : jf.at("domain")) {
            f.domain.push_back(v.get<double>());
        }
        features.push_back(std::move(f));
    }
    return SensitiveSpec(std::move(features), n_inputs);
}

nlohmann::json SensitiveSpec::to_json() const {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& f : features_) {
        features.push_back({{"index", f.index}, {"domain", f.domain}});
    }
    return {{"features", features}};
}

SensitiveSpec SensitiveSpec::load(const std::string& path, int n_inputs) {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open spec file " + path);
    }
    try {
        return from_json(nlohmann::json::parse(in), n_inputs);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

} // namespace faircert
