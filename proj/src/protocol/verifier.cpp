#include "faircert/protocol/verifier.hpp"

#include <map>
#include <set>
#include <sstream>

#include "faircert/certifier.hpp"
#include "faircert/error.hpp"

namespace faircert {

std::string Verdict::message() const {
    if (accepted) return "accept";
    std::ostringstream os;
    os << "reject";
    if (kind) os << ' ' << to_string(*kind) << '#' << index;
    os << ": " << reason;
    return os.str();
}

QuantizedModel model_from_openings(const std::vector<Opening>& openings, int scale_bits) {
    std::map<std::string, std::string> by_label;
    for (const auto& o : openings)
        if (!by_label.emplace(o.label, o.content).second) throw SchemaError("duplicate opening " + o.label);
    auto arch = by_label.find("arch");
    if (arch == by_label.end()) throw SchemaError("architecture leaf not opened");

    int n_inputs = 0;
    int scale = 0;
    std::vector<int> widths;
    {
        std::string layers;
        std::stringstream ss(arch->second);
        std::string part;
        while (std::getline(ss, part, ';')) {
            auto eq = part.find('=');
            if (eq == std::string::npos) throw SchemaError("malformed architecture leaf");
            std::string key = part.substr(0, eq);
            std::string val = part.substr(eq + 1);
            if (key == "inputs") n_inputs = std::stoi(val);
            else if (key == "scale") scale = std::stoi(val);
            else if (key == "layers") layers = val;
        }
        std::stringstream ls(layers);
        while (std::getline(ls, part, ',')) widths.push_back(std::stoi(part));
    }
    if (n_inputs <= 0 || widths.empty() || scale != scale_bits) throw SchemaError("malformed architecture leaf");

    std::vector<std::vector<IntVec>> weights;
    std::vector<IntVec> biases;
    std::size_t used = 1;
    int fan_in = n_inputs;
    for (std::size_t l = 0; l < widths.size(); ++l) {
        if (widths[l] <= 0) throw SchemaError("malformed architecture leaf");
        std::vector<IntVec> w(static_cast<std::size_t>(widths[l]));
        IntVec b;
        const int li = static_cast<int>(l);
        for (int r = 0; r < widths[l]; ++r) {
            for (int c = 0; c < fan_in; ++c) {
                auto it = by_label.find(weight_label(li, r, c));
                if (it == by_label.end()) throw SchemaError("missing opening " + weight_label(li, r, c));
                w[static_cast<std::size_t>(r)].push_back(from_decimal(it->second));
                ++used;
            }
            auto it = by_label.find(bias_label(li, r));
            if (it == by_label.end()) throw SchemaError("missing opening " + bias_label(li, r));
            b.push_back(from_decimal(it->second));
            ++used;
        }
        weights.push_back(std::move(w));
        biases.push_back(std::move(b));
        fan_in = widths[l];
    }
    if (used != by_label.size()) throw SchemaError("unexpected model openings");
    return QuantizedModel(n_inputs, scale_bits, std::move(weights), std::move(biases));
}

namespace {

struct Reject {
    std::optional<CheckKind> kind;
    std::ptrdiff_t index;
    std::string reason;
};

const Int& point_den() {
    static const Int d = pow2(kPointBits);
    return d;
}

struct Cell {
    ActivationCode code;
    IntRows rows;
};

class Replayer {
public:
    Replayer(const Commitment& c, const ProofTranscript& t, CheckBackend& backend)
        : c_(c), t_(t), backend_(backend) {}

    void run(const IntVec& query, int label, const Int& epsilon) {
        if (!(t_.commitment == c_)) fail(CheckKind::Opening, -1, "transcript refers to a different commitment");
        for (std::size_t i = 0; i < t_.model_openings.size(); ++i) {
            const auto& o = t_.model_openings[i];
            if (o.label.rfind("p/", 0) == 0 || o.label.rfind("f/", 0) == 0 || !verify_opening(c_, o))
                fail(CheckKind::Opening, static_cast<std::ptrdiff_t>(i), "authentication path does not match the root");
        }
        try {
            model_ = model_from_openings(t_.model_openings, c_.encoding.scale_bits);
        } catch (const std::exception& e) {
            fail(CheckKind::Opening, -1, e.what());
        }
        check_public(query, label, epsilon);

        y_ = t_.label;
        std::vector<Terminal> terminals;
        const auto values = t_.spec.enumerate();
        for (std::size_t i = 0; i < values.size(); ++i) terminals.push_back(branch(values[i], i));

        const auto min_at = pos_;
        const auto& mp = take<MinProof>(CheckKind::Min);
        if (mp.epsilon != t_.epsilon) fail(CheckKind::Min, min_at, "minimum proof epsilon differs from the claim");
        check(CheckKind::Min, min_at, MinInput{mp.values, mp.eps_sq, mp.epsilon, terminals, dist_bits_});

        const auto inf_at = pos_;
        const auto& ip = take<InferenceProof>(CheckKind::Inference);
        if (ip.label != t_.label) fail(CheckKind::Inference, inf_at, "inferred label differs from the claim");
        check(CheckKind::Inference, inf_at, InferenceInput{&model_, point_, parse_code(CheckKind::Inference, inf_at, ip.code),
                                                          ip.logits, ip.label});
        if (pos_ != static_cast<std::ptrdiff_t>(t_.subproofs.size()))
            fail(t_.subproofs[static_cast<std::size_t>(pos_)].kind(), pos_, "unexpected trailing subproof");
    }

private:
    [[noreturn]] void fail(std::optional<CheckKind> k, std::ptrdiff_t i, std::string why) {
        throw Reject{k, i, std::move(why)};
    }

    void check(CheckKind k, std::ptrdiff_t i, const CheckInput& in) {
        CheckResult r;
        try {
            r = backend_.run(in);
        } catch (const std::exception& e) {
            r = CheckResult{false, e.what()};
        }
        if (!r.ok) fail(k, i, r.detail);
    }

    template <class T>
    const T& take(CheckKind k) {
        if (pos_ >= static_cast<std::ptrdiff_t>(t_.subproofs.size())) fail(k, pos_, "transcript ends early");
        const auto& sp = t_.subproofs[static_cast<std::size_t>(pos_)];
        const T* body = std::get_if<T>(&sp.body);
        if (!body) fail(sp.kind(), pos_, "expected a " + to_string(k) + " subproof here");
        ++pos_;
        return *body;
    }

    ActivationCode parse_code(CheckKind k, std::ptrdiff_t i, const std::string& s) {
        try {
            auto code = ActivationCode::from_string(s);
            if (code.size() != static_cast<std::size_t>(model_.total_hidden())) fail(k, i, "activation code has wrong length");
            return code;
        } catch (const Error& e) {
            fail(k, i, e.what());
        }
    }

    IntVec open_point(CheckKind k, std::ptrdiff_t i, const Opening& o, const std::string& expected) {
        if (o.label != expected || !verify_opening(c_, o)) fail(k, i, "representative point opening does not authenticate");
        IntVec p;
        try {
            p = parse_point_content(o.content);
        } catch (const std::exception&) {
            fail(k, i, "malformed representative point");
        }
        if (p.size() != x_ns_.size()) fail(k, i, "representative point has wrong dimension");
        return p;
    }

    void check_public(const IntVec& query, int label, const Int& epsilon) {
        const auto& spec = t_.spec;
        const int n = model_.n_inputs();
        if (query != t_.query) fail(std::nullopt, -1, "transcript was made for a different query");
        if (label != t_.label) fail(CheckKind::Inference, -1, "claimed label differs from the transcript");
        if (epsilon != t_.epsilon) fail(CheckKind::Min, -1, "claimed epsilon differs from the transcript");
        if (static_cast<int>(query.size()) != n) fail(std::nullopt, -1, "query has wrong dimension");
        if (t_.box_bound <= 0) fail(std::nullopt, -1, "non-positive box bound");
        if (t_.label < 0 || t_.label >= model_.n_classes()) fail(std::nullopt, -1, "label out of range");
        if (spec.indices.empty() || spec.indices.size() != spec.domains.size())
            fail(std::nullopt, -1, "malformed sensitive spec");
        std::set<int> seen;
        for (std::size_t i = 0; i < spec.indices.size(); ++i)
            if (spec.indices[i] < 0 || spec.indices[i] >= n || !seen.insert(spec.indices[i]).second ||
                spec.domains[i].empty())
                fail(std::nullopt, -1, "malformed sensitive spec");
        if (static_cast<int>(seen.size()) >= n) fail(std::nullopt, -1, "every feature is sensitive");
        if (t_.leakage.size() != spec.enumerate().size()) fail(std::nullopt, -1, "one leakage counter per branch expected");

        point_ = query;
        if (t_.perturbation) {
            const auto& p = *t_.perturbation;
            if (p.coordinate < 0 || p.coordinate >= n || seen.count(p.coordinate) || p.delta == 0 ||
                abs(p.delta) > kMaxPerturbationSteps)
                fail(std::nullopt, -1, "invalid tie perturbation");
            point_[static_cast<std::size_t>(p.coordinate)] += p.delta;
        }
        x_ns_ = project_out_point(spec, point_);
        const Int bound = Int(t_.box_bound) * point_den();
        for (const auto& v : x_ns_)
            if (abs(v) > bound) fail(std::nullopt, -1, "query outside the bounding box");
        box_ = box_squared_distance(x_ns_, point_den(), t_.box_bound);
        dist_bits_ = distance_bits_for(t_.box_bound, static_cast<int>(x_ns_.size()));
        for (int j = 0; j < model_.n_classes(); ++j)
            if (j != t_.label) decision_classes_.push_back(j);
    }

    void expect_distances(std::vector<Cell>& cells, std::size_t cell_index, std::set<std::string>& seen_facets,
                          std::map<std::pair<int, int>, Int>& pending) {
        const Cell& cell = cells[cell_index];
        const int h = model_.total_hidden();
        for (std::size_t r = 0; r < cell.rows.size(); ++r) {
            std::string fid = facet_id(cell.code, static_cast<int>(r), h, decision_classes_);
            if (!seen_facets.insert(fid).second) continue;
            const auto at = pos_;
            const auto& d = take<DistanceProof>(CheckKind::Distance);
            if (d.cell != static_cast<int>(cell_index) || d.row != static_cast<int>(r))
                fail(CheckKind::Distance, at, "distance subproofs out of row order");
            if (d.pruned) continue;
            check(CheckKind::Distance, at, DistanceInput{cell.rows[r], x_ns_, d.d_sq, dist_bits_});
            pending[{d.cell, d.row}] = d.d_sq;
        }
    }

    Terminal branch(const IntVec& s, std::size_t branch_index) {
        const auto poly_at = pos_;
        const auto& poly = take<PolytopeProof>(CheckKind::Polytope);
        if (poly.s != s) fail(CheckKind::Polytope, poly_at, "sensitive assignment out of order");
        SliceContext ctx{&model_, &t_.spec, s, y_};
        ActivationCode start = parse_code(CheckKind::Polytope, poly_at, poly.code);
        check(CheckKind::Polytope, poly_at, PolytopeInput{ctx, x_ns_, start, poly.rows, poly.slice_label});
        if (poly.slice_label != y_) {
            if (t_.leakage[branch_index] != 0) fail(std::nullopt, -1, "leakage counter differs from the pops");
            return Terminal{0, 1, 0};
        }

        std::vector<Cell> cells{Cell{start, poly.rows}};
        std::set<ActivationCode> seen_codes{start};
        std::set<std::string> seen_facets;
        std::map<std::pair<int, int>, Int> pending;
        expect_distances(cells, 0, seen_facets, pending);

        std::optional<Terminal> terminal;
        int pops = 0;
        while (!pending.empty()) {
            const auto order_at = pos_;
            const auto& ord = take<OrderProof>(CheckKind::Order);
            auto it = pending.find({ord.cell, ord.row});
            if (it == pending.end() || it->second != ord.d_sq)
                fail(CheckKind::Order, order_at, "popped facet is not pending with this distance");
            IntVec all;
            for (const auto& [key, d] : pending) all.push_back(d);
            check(CheckKind::Order, order_at, OrderInput{ord.d_sq, all, dist_bits_});
            pending.erase(it);
            ++pops;

            const auto bnd_at = pos_;
            const auto& bnd = take<BoundaryProof>(CheckKind::Boundary);
            if (bnd.cell != ord.cell || bnd.row != ord.row)
                fail(CheckKind::Boundary, bnd_at, "boundary subproof is not about the popped facet");
            const Cell& owner = cells[static_cast<std::size_t>(ord.cell)];
            IntVec point = open_point(CheckKind::Boundary, bnd_at, bnd.point, facet_label(y_, s, owner.code, bnd.row));
            check(CheckKind::Boundary, bnd_at, BoundaryInput{ctx, owner.code, owner.rows, bnd.row, point, bnd.boundary});
            const IntRow& row = owner.rows[static_cast<std::size_t>(bnd.row)];
            if (bnd.boundary) {
                terminal = make_terminal(ord.d_sq, box_);
                break;
            }

            const auto nb_at = pos_;
            const auto& nb = take<NeighborProof>(CheckKind::Neighbor);
            if (nb.cell != ord.cell || nb.row != ord.row)
                fail(CheckKind::Neighbor, nb_at, "neighbor subproof is not about the popped facet");
            if (nb.row >= model_.total_hidden()) fail(CheckKind::Neighbor, nb_at, "decision facet has no neighbor");
            ActivationCode code = parse_code(CheckKind::Neighbor, nb_at, nb.neighbor_code);
            if (hamming(code, owner.code) != 1 || code != owner.code.flipped(static_cast<std::size_t>(nb.row)))
                fail(CheckKind::Neighbor, nb_at, "neighbor code is not the single-bit flip across this facet");
            if (nb.visited) {
                if (!seen_codes.count(code)) fail(CheckKind::Neighbor, nb_at, "neighbor marked visited was never expanded");
                continue;
            }
            if (seen_codes.count(code)) fail(CheckKind::Neighbor, nb_at, "neighbor expanded twice");
            if (!nb.point) fail(CheckKind::Neighbor, nb_at, "missing neighbor representative point");
            IntVec z = open_point(CheckKind::Neighbor, nb_at, *nb.point, cell_label(y_, s, code));
            IntRow owner_row = row;
            check(CheckKind::Neighbor, nb_at, NeighborInput{ctx, owner_row, nb.row, code, z, nb.rows});
            seen_codes.insert(code);
            cells.push_back(Cell{code, nb.rows});
            expect_distances(cells, cells.size() - 1, seen_facets, pending);
        }
        if (t_.leakage[branch_index] != pops) fail(std::nullopt, -1, "leakage counter differs from the pops");
        return terminal ? *terminal : terminal_of(box_);
    }

    const Commitment& c_;
    const ProofTranscript& t_;
    CheckBackend& backend_;
    QuantizedModel model_;
    IntVec point_;
    IntVec x_ns_;
    SquaredDistance box_;
    int dist_bits_ = 64;
    int y_ = 0;
    std::vector<int> decision_classes_;
    std::ptrdiff_t pos_ = 0;
};

} // namespace

Verdict verify_certificate(const Commitment& c, const IntVec& query, int label, const Int& epsilon,
                           const ProofTranscript& t, CheckBackend& backend) {
    Verdict v;
    try {
        Replayer(c, t, backend).run(query, label, epsilon);
        v.accepted = true;
    } catch (const Reject& r) {
        v.kind = r.kind;
        v.index = r.index;
        v.reason = r.reason;
    } catch (const std::exception& e) {
        v.reason = std::string("malformed transcript: ") + e.what();
    }
    return v;
}

Verdict verify_certificate(const Commitment& c, const Vector& query, int label, double epsilon,
                           const ProofTranscript& t, CheckBackend& backend) {
    return verify_certificate(c, to_ints(query, kPointBits), label, quantize_dyadic(epsilon, kPointBits), t, backend);
}

} // namespace faircert
