#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "faircert/geometry.hpp"

namespace faircert {

struct FacetCandidate;

/// Externally computed ordering key and boundary verdict for a facet.
struct FacetEval {
    double distance = 0.0;
    bool is_boundary = false;
};

struct CertifyOptions {
    double box_bound = 100.0;
    /// Top-two logit gap at a facet's representative point at or below which
    /// the facet counts as a decision boundary.
    double boundary_tol = 1e-9;
    /// Facets whose inscribed radius (inside the facet hyperplane) is below
    /// this are pruned as degenerate or empty.
    double min_radius = 1e-9;
    /// Shift applied to the first non-sensitive coordinate when the query
    /// sits exactly on a region boundary.
    double perturbation_step = 1e-12;
    int threads = 1;
    std::size_t max_pops = 200000;
    /// Optional replacement for the default "some pre-activation is exactly
    /// zero" test; receives a full-dimensional point.
    std::function<bool(const Vector&)> tie_check;
    /// Optional replacement for the distance and boundary test of a pushed
    /// facet. Returning nullopt prunes it. Must be thread-safe.
    std::function<std::optional<FacetEval>(const std::vector<double>& s, const ActivationCode& owner,
                                           const FacetCandidate& c)>
        facet_eval;
};

enum class CandidateStatus { pushed, pruned, known };

/// One row of a visited cell as seen by the traversal.
struct FacetCandidate {
    int row = 0;
    std::string facet_id;
    CandidateStatus status = CandidateStatus::pruned;
    double distance = 0.0;
    double radius = 0.0;
    bool is_boundary = false;
    Hyperplane hyperplane;
    Vector rep_point; // sliced coordinates, only for pushed candidates
};

/// A cell (activation region intersected with the label's decision region,
/// sliced at one sensitive value) visited by the traversal.
struct VisitedCell {
    ActivationCode code;
    Vector rep_point; // Chebyshev center, sliced coordinates
    double radius = 0.0;
    std::vector<FacetCandidate> candidates;
};

struct TraversalPop {
    std::string facet_id;
    int cell_index = 0; // owner cell in TraversalTrace::visited
    int tight_row = 0;
    Hyperplane hyperplane;
    double distance = 0.0;
    bool is_boundary = false;
    Vector rep_point;
    std::optional<ActivationCode> neighbor_code;
    /// Index into `visited` when this pop expanded a new cell, -1 otherwise.
    int expanded_cell = -1;
};

enum class BranchOutcome { boundary, box_limited, label_flip };

std::string to_string(BranchOutcome o);

struct TraversalTrace {
    std::vector<double> s_value;
    ActivationCode start_code;
    int label = 0;
    int slice_label = 0;
    std::vector<VisitedCell> visited;
    std::vector<TraversalPop> pops;
    double epsilon_s = 0.0;
    double box_distance = 0.0;
    BranchOutcome outcome = BranchOutcome::boundary;
    /// Pop distances were non-decreasing. Logged, not enforced.
    bool monotone = true;

    std::size_t pop_count() const { return pops.size(); }
};

struct Perturbation {
    int coordinate = 0;
    double delta = 0.0;
    Vector original;
};

struct CertificateBundle {
    Vector query; // the certified point (after any tie perturbation)
    std::optional<Perturbation> perturbation;
    int label = 0;
    double epsilon_lb = 0.0;
    std::vector<TraversalTrace> per_s;
    std::vector<double> epsilon_list;
};

/// Identifier shared by the two cells adjacent to a neuron facet, or unique
/// to the owner cell for a decision facet.
std::string facet_id(const ActivationCode& owner, int row, int neuron_rows, const std::vector<int>& decision_classes);

/// Sliced cell of `code` for `label` at sensitive value `s`.
Polytope sliced_cell(const ModelWeights& w, const SensitiveSpec& spec, const std::vector<double>& s,
                     const ActivationCode& code, int label);

/// Largest gap between the top two entries.
double top_two_gap(const Vector& logits);

/// Best-first facet traversal in the slice at `s`, using projection distances.
/// `label` defaults to the prediction at the sliced query.
TraversalTrace geocert_lb(const ModelWeights& w, const SensitiveSpec& spec, const std::vector<double>& s,
                          const Vector& x_ns, std::optional<int> label = std::nullopt,
                          const CertifyOptions& options = {});

/// Moves x off region boundaries for every slice, if needed.
std::optional<Perturbation> perturb_off_boundaries(const ModelWeights& w, const SensitiveSpec& spec, Vector& x,
                                                   const CertifyOptions& options);

CertificateBundle certify_fairness(const ModelWeights& w, const SensitiveSpec& spec, const Vector& x,
                                   const CertifyOptions& options = {});

/// Largest network the exhaustive oracle accepts.
inline constexpr int kExhaustiveHiddenLimit = 12;

/// Exact distance to the decision boundary by enumerating every activation
/// region and solving a small projection QP per boundary face. Test oracle.
double exact_epsilon_oracle(const ModelWeights& w, const SensitiveSpec& spec, const Vector& x,
                            const CertifyOptions& options = {});

/// Squared-distance projection onto {z | eq_a z = eq_b, ineq_a z <= ineq_b},
/// starting from a feasible point. Returns the minimizer.
Vector project_onto_polyhedron(const Vector& x, const Matrix& eq_a, const Vector& eq_b, const Matrix& ineq_a,
                               const Vector& ineq_b, Vector start);

nlohmann::json certificate_to_json(const CertificateBundle& cert);
CertificateBundle certificate_from_json(const nlohmann::json& doc);

} // namespace faircert
