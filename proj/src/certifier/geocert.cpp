#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include "faircert/certifier.hpp"
#include "faircert/error.hpp"
#include "faircert/log.hpp"

namespace faircert {

std::string to_string(BranchOutcome o) {
    switch (o) {
    case BranchOutcome::boundary: return "boundary";
    case BranchOutcome::box_limited: return "box_limited";
    case BranchOutcome::label_flip: return "label_flip";
    }
    return "unknown";
}

std::string facet_id(const ActivationCode& owner, int row, int neuron_rows, const std::vector<int>& decision_classes) {
    if (row < neuron_rows) {
        // Both sides of a neuron facet agree once the flipped bit is cleared.
        auto bits = owner.bits();
        bits[static_cast<std::size_t>(row)] = 0;
        return "n" + std::to_string(row) + ":" + ActivationCode(bits).to_string();
    }
    int cls = decision_classes.at(static_cast<std::size_t>(row - neuron_rows));
    return "d" + std::to_string(cls) + ":" + owner.to_string();
}

Polytope sliced_cell(const ModelWeights& w, const SensitiveSpec& spec, const std::vector<double>& s,
                     const ActivationCode& code, int label) {
    return reduce_poly_dim(decision_cell(w, code, label), spec, s);
}

double top_two_gap(const Vector& logits) {
    if (logits.size() < 2) return std::numeric_limits<double>::infinity();
    double first = -std::numeric_limits<double>::infinity();
    double second = first;
    for (double v : logits) {
        if (v > first) {
            second = first;
            first = v;
        } else if (v > second) {
            second = v;
        }
    }
    return first - second;
}

namespace {

constexpr double kDuplicateTol = 1e-10;

struct QueueEntry {
    double distance;
    std::uint64_t seq;
    int cell;
    int candidate;
    bool operator>(const QueueEntry& o) const {
        if (distance != o.distance) return distance > o.distance;
        return seq > o.seq;
    }
};

class Traversal {
public:
    Traversal(const ModelWeights& w, const SensitiveSpec& spec, const std::vector<double>& s, const Vector& x_ns,
              int label, const CertifyOptions& opt, TraversalTrace& trace)
        : w_(w), spec_(spec), s_(s), x_ns_(x_ns), label_(label), opt_(opt), trace_(trace) {}

    void run(const ActivationCode& start) {
        auto first = visit(start);
        if (!first) throw Error("query cell is empty in its own slice");
        double last = 0.0;
        while (!queue_.empty()) {
            if (trace_.pops.size() >= opt_.max_pops) throw Error("traversal exceeded max_pops");
            QueueEntry e = queue_.top();
            queue_.pop();
            const FacetCandidate& cand = trace_.visited[static_cast<std::size_t>(e.cell)]
                                             .candidates[static_cast<std::size_t>(e.candidate)];
            TraversalPop pop;
            pop.facet_id = cand.facet_id;
            pop.cell_index = e.cell;
            pop.tight_row = cand.row;
            pop.hyperplane = cand.hyperplane;
            pop.distance = cand.distance;
            pop.is_boundary = cand.is_boundary;
            pop.rep_point = cand.rep_point;
            if (pop.distance < last) trace_.monotone = false;
            last = pop.distance;

            // A decision facet has no neighbor of the same label.
            if (!pop.is_boundary && pop.tight_row >= neuron_rows_) {
                logger().warn("decision facet {} not flagged as boundary; treating as boundary", pop.facet_id);
                pop.is_boundary = true;
            }
            if (pop.is_boundary) {
                trace_.pops.push_back(std::move(pop));
                finish_at(last);
                return;
            }
            const ActivationCode& owner = trace_.visited[static_cast<std::size_t>(e.cell)].code;
            ActivationCode next = owner.flipped(static_cast<std::size_t>(pop.tight_row));
            pop.neighbor_code = next;
            if (!seen_codes_.count(next)) {
                auto idx = visit(next);
                if (!idx) {
                    // Lower-dimensional neighbor: stopping here only lowers the bound.
                    logger().warn("empty neighbor behind facet {}; treating as boundary", pop.facet_id);
                    pop.is_boundary = true;
                    trace_.pops.push_back(std::move(pop));
                    finish_at(last);
                    return;
                }
                pop.expanded_cell = *idx;
            }
            trace_.pops.push_back(std::move(pop));
        }
        trace_.outcome = BranchOutcome::box_limited;
        trace_.epsilon_s = trace_.box_distance;
    }

private:
    void finish_at(double d) {
        if (d > trace_.box_distance) {
            trace_.outcome = BranchOutcome::box_limited;
            trace_.epsilon_s = trace_.box_distance;
        } else {
            trace_.outcome = BranchOutcome::boundary;
            trace_.epsilon_s = d;
        }
    }

    static bool duplicates_earlier_row(const Polytope& cell, int r) {
        const double nr = cell.a.row(r).norm();
        if (nr == 0.0) return false;
        for (int k = 0; k < r; ++k) {
            const double nk = cell.a.row(k).norm();
            if (nk == 0.0) continue;
            double diff = (cell.a.row(r) / nr - cell.a.row(k) / nk).cwiseAbs().maxCoeff();
            diff = std::max(diff, std::abs(cell.b(r) / nr - cell.b(k) / nk));
            if (diff <= kDuplicateTol * (1.0 + std::abs(cell.b(k) / nk))) return true;
        }
        return false;
    }

    std::optional<int> visit(const ActivationCode& code) {
        Polytope cell = sliced_cell(w_, spec_, s_, code, label_);
        auto center = representative_point(cell, opt_.box_bound);
        if (!center || center->radius < opt_.min_radius) return std::nullopt;
        seen_codes_.insert(code);

        VisitedCell vc;
        vc.code = code;
        vc.rep_point = center->center;
        vc.radius = center->radius;

        auto affine = linear_map_from_code(w_, code);
        int idx = static_cast<int>(trace_.visited.size());
        neuron_rows_ = cell.neuron_rows;
        for (int r = 0; r < cell.rows(); ++r) {
            FacetCandidate c;
            c.row = r;
            c.facet_id = facet_id(code, r, cell.neuron_rows, cell.decision_classes);
            c.hyperplane = Hyperplane{cell.a.row(r).transpose(), cell.b(r)};
            if (seen_facets_.count(c.facet_id)) {
                c.status = CandidateStatus::known;
                vc.candidates.push_back(std::move(c));
                continue;
            }
            seen_facets_.insert(c.facet_id);
            if (duplicates_earlier_row(cell, r)) {
                // Same hyperplane and side as an earlier row: the facet is that row's.
                c.status = CandidateStatus::pruned;
                vc.candidates.push_back(std::move(c));
                continue;
            }
            auto ball = c.hyperplane.a.norm() == 0.0 ? std::nullopt : representative_point(cell, opt_.box_bound, r);
            if (!ball || ball->radius < opt_.min_radius) {
                c.status = CandidateStatus::pruned;
                c.radius = ball ? ball->radius : 0.0;
                vc.candidates.push_back(std::move(c));
                continue;
            }
            c.status = CandidateStatus::pushed;
            c.radius = ball->radius;
            c.rep_point = ball->center;
            c.distance = projection_distance(x_ns_, c.hyperplane);
            Vector full = spec_.assemble(c.rep_point, s_);
            Vector logits = affine.first * full + affine.second;
            c.is_boundary = top_two_gap(logits) <= opt_.boundary_tol;
            if (opt_.facet_eval) {
                auto ev = opt_.facet_eval(s_, code, c);
                if (!ev) {
                    c.status = CandidateStatus::pruned;
                    c.rep_point = Vector();
                    vc.candidates.push_back(std::move(c));
                    continue;
                }
                c.distance = ev->distance;
                c.is_boundary = ev->is_boundary;
            }
            queue_.push(QueueEntry{c.distance, seq_++, idx, static_cast<int>(vc.candidates.size())});
            vc.candidates.push_back(std::move(c));
        }
        trace_.visited.push_back(std::move(vc));
        return idx;
    }

    const ModelWeights& w_;
    const SensitiveSpec& spec_;
    const std::vector<double>& s_;
    const Vector& x_ns_;
    int label_;
    const CertifyOptions& opt_;
    TraversalTrace& trace_;
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue_;
    std::set<ActivationCode> seen_codes_;
    std::set<std::string> seen_facets_;
    std::uint64_t seq_ = 0;
    int neuron_rows_ = 0;
};

} // namespace

TraversalTrace geocert_lb(const ModelWeights& w, const SensitiveSpec& spec, const std::vector<double>& s,
                          const Vector& x_ns, std::optional<int> label, const CertifyOptions& options) {
    if (static_cast<int>(s.size()) != spec.k()) throw DimensionError("sensitive value has wrong length");
    require_point(x_ns, spec.n_inputs() - spec.k(), "non-sensitive point");

    TraversalTrace trace;
    trace.s_value = s;
    Vector full = spec.assemble(x_ns, s);
    trace.slice_label = w.predict(full);
    trace.label = label.value_or(trace.slice_label);
    trace.start_code = activation_code(w, full);

    double box = std::numeric_limits<double>::infinity();
    for (double v : x_ns) box = std::min(box, options.box_bound - std::abs(v));
    trace.box_distance = std::max(0.0, box);

    if (trace.slice_label != trace.label) {
        trace.outcome = BranchOutcome::label_flip;
        trace.epsilon_s = 0.0;
        return trace;
    }
    Traversal(w, spec, s, x_ns, trace.label, options, trace).run(trace.start_code);
    if (!trace.monotone) logger().debug("non-monotone pop distances at s index");
    return trace;
}

} // namespace faircert
