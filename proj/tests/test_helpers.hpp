#pragma once

#include <fstream>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "faircert/model.hpp"

namespace faircert::test {

inline std::string fixture(const std::string& name) { return std::string(FAIRCERT_FIXTURE_DIR) + "/" + name; }

inline std::vector<Vector> load_queries(const std::string& name) {
    std::ifstream in(fixture(name));
    auto doc = nlohmann::json::parse(in);
    std::vector<Vector> out;
    for (const auto& q : doc.at("queries")) {
        auto xs = q.get<std::vector<double>>();
        out.push_back(Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size())));
    }
    return out;
}

inline Vector uniform_vec(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

/// Uniform sample from the ball of the given radius.
inline Vector ball_sample(std::mt19937_64& rng, const Vector& center, double radius) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector dir(center.size());
    for (auto& v : dir) v = g(rng);
    double r = radius * std::pow(u(rng), 1.0 / static_cast<double>(center.size()));
    return center + dir.normalized() * r;
}

} // namespace faircert::test
