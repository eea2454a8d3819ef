#include <algorithm>
#include <future>
#include <limits>

#include "faircert/certifier.hpp"
#include "faircert/error.hpp"
#include "faircert/log.hpp"

namespace faircert {

namespace {

/// A zero pre-activation only marks a region boundary when the neuron's
/// masked row moves with the non-sensitive inputs. A row that is
/// identically zero (dead upstream units, zero bias) is no boundary.
bool has_zero_preactivation(const ModelWeights& w, const SensitiveSpec& spec, const Vector& full) {
    Vector pre = pre_activations(w, full);
    if (std::none_of(pre.begin(), pre.end(), [](double v) { return v == 0.0; })) return false;
    auto maps = masked_affine_maps(w, activation_code(w, full));
    Eigen::Index idx = 0;
    for (std::size_t l = 0; l + 1 < maps.size(); ++l) {
        const Matrix& m = maps[l].first;
        for (Eigen::Index r = 0; r < m.rows(); ++r, ++idx) {
            if (pre(idx) != 0.0) continue;
            for (int c : spec.non_sensitive_indices())
                if (m(r, c) != 0.0) return true;
        }
    }
    return false;
}

bool touches_boundary(const ModelWeights& w, const SensitiveSpec& spec, const Vector& x,
                      const CertifyOptions& options) {
    auto check = [&](const Vector& p) {
        return options.tie_check ? options.tie_check(p) : has_zero_preactivation(w, spec, p);
    };
    if (check(x)) return true;
    Vector x_ns = spec.project_out(x);
    for (const auto& s : spec.enumerate())
        if (check(spec.assemble(x_ns, s))) return true;
    return false;
}

} // namespace

std::optional<Perturbation> perturb_off_boundaries(const ModelWeights& w, const SensitiveSpec& spec, Vector& x,
                                                   const CertifyOptions& options) {
    if (!touches_boundary(w, spec, x, options)) return std::nullopt;
    if (spec.non_sensitive_indices().empty()) throw Error("cannot perturb: every feature is sensitive");
    Perturbation p;
    p.coordinate = spec.non_sensitive_indices().front();
    p.original = x;
    for (int attempt = 1; attempt <= 16; ++attempt) {
        x(p.coordinate) = p.original(p.coordinate) + attempt * options.perturbation_step;
        if (!touches_boundary(w, spec, x, options)) {
            p.delta = x(p.coordinate) - p.original(p.coordinate);
            logger().info("query perturbed by {} on coordinate {}", p.delta, p.coordinate);
            return p;
        }
    }
    throw Error("could not move query off region boundaries");
}

CertificateBundle certify_fairness(const ModelWeights& w, const SensitiveSpec& spec, const Vector& x,
                                   const CertifyOptions& options) {
    require_point(x, w.n_inputs(), "query");
    if (spec.n_inputs() != w.n_inputs()) throw DimensionError("sensitive spec does not match model input size");

    CertificateBundle cert;
    cert.query = x;
    cert.perturbation = perturb_off_boundaries(w, spec, cert.query, options);
    cert.label = w.predict(cert.query);

    const Vector x_ns = spec.project_out(cert.query);
    const auto values = spec.enumerate();
    cert.per_s.resize(values.size());

    auto run = [&](std::size_t i) { cert.per_s[i] = geocert_lb(w, spec, values[i], x_ns, cert.label, options); };
    int threads = std::max(1, options.threads);
    if (threads == 1 || values.size() == 1) {
        for (std::size_t i = 0; i < values.size(); ++i) run(i);
    } else {
        // Branches are independent; each worker owns a stride of indices.
        std::vector<std::future<void>> jobs;
        for (int t = 0; t < threads; ++t) {
            jobs.push_back(std::async(std::launch::async, [&, t] {
                for (std::size_t i = static_cast<std::size_t>(t); i < values.size();
                     i += static_cast<std::size_t>(threads))
                    run(i);
            }));
        }
        for (auto& j : jobs) j.get();
    }

    cert.epsilon_lb = std::numeric_limits<double>::infinity();
    for (const auto& tr : cert.per_s) {
        cert.epsilon_list.push_back(tr.epsilon_s);
        cert.epsilon_lb = std::min(cert.epsilon_lb, tr.epsilon_s);
    }
    return cert;
}

} // namespace faircert
