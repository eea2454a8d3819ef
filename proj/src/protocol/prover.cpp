#include "faircert/protocol/prover.hpp"

#include <algorithm>
#include <cmath>

#include "faircert/error.hpp"
#include "faircert/log.hpp"
#include "faircert/protocol/checks.hpp"

namespace faircert {

namespace {

const Int& point_den() {
    static const Int d = pow2(kPointBits);
    return d;
}

IntVec ints_of(const std::vector<double>& v, int bits) {
    IntVec out;
    for (double x : v) out.push_back(quantize_dyadic(x, bits));
    return out;
}

Vector snap(const Vector& x) {
    Vector out = x;
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = dyadic_to_double(quantize_dyadic(x(i), kPointBits), kPointBits);
    return out;
}

std::string derivation_key(int label, const IntVec& s, const ActivationCode& code) {
    return slice_key(label, s) + "/" + code.to_string();
}

/// Zero pre-activation on a row that moves with the non-sensitive inputs,
/// or tied top logits.
bool has_exact_tie(const QuantizedModel& m, const QuantizedSpec& spec, const Vector& full) {
    auto f = forward_exact(m, to_ints(full, kPointBits), point_den());
    if (std::any_of(f.pre.begin(), f.pre.end(), [](const Int& v) { return v == 0; })) {
        auto maps = masked_maps_exact(m, code_exact(f));
        std::vector<bool> sensitive(static_cast<std::size_t>(m.n_inputs()), false);
        for (int i : spec.indices) sensitive[static_cast<std::size_t>(i)] = true;
        std::size_t idx = 0;
        for (std::size_t l = 0; l + 1 < maps.size(); ++l)
            for (const auto& row : maps[l].m) {
                if (f.pre[idx++] != 0) continue;
                for (std::size_t c = 0; c < row.size(); ++c)
                    if (!sensitive[c] && row[c] != 0) return true;
            }
    }
    int top = argmax_exact(f.logits);
    for (std::size_t j = 0; j < f.logits.size(); ++j)
        if (static_cast<int>(j) != top && f.logits[j] == f.logits[static_cast<std::size_t>(top)]) return true;
    return false;
}

} // namespace

struct Prover::Session {
    int label = 0;
    IntVec x_ns;
    std::size_t epoch = 0;
    std::mutex mu;
    /// Facet points computed during the traversal; only popped ones are kept.
    RepTable scratch;
    RepTable appends;
};

Prover::Prover(QuantizedModel model, QuantizedSpec spec, CommitSecret secret, ProveOptions options)
    : model_(std::move(model)),
      spec_(std::move(spec)),
      float_model_(model_.dequantize()),
      float_spec_(spec_.dequantize(model_.n_inputs())),
      options_(options),
      randomness_(secret.randomness),
      table_(std::move(secret.table)) {
    FixedPointEncoding enc;
    enc.scale_bits = model_.scale_bits();
    committed_ = std::make_shared<const CommittedModel>(model_, table_, randomness_, enc);
}

void Prover::expect_commitment(const Commitment& published) const {
    std::shared_lock lock(table_mutex_);
    if (!(committed_->commitment() == published))
        throw Error("model and secret do not reproduce the published commitment root");
}

Commitment Prover::commitment() const {
    std::shared_lock lock(table_mutex_);
    return committed_->commitment();
}

CommitSecret Prover::secret() const {
    std::shared_lock lock(table_mutex_);
    return CommitSecret{randomness_, table_};
}

std::optional<IntVec> Prover::lookup(const std::string& label) const {
    std::shared_lock lock(table_mutex_);
    auto it = table_.find(label);
    if (it == table_.end()) return std::nullopt;
    return it->second;
}

Prover::SliceRows Prover::rows_for(const IntVec& s, const ActivationCode& code, int label, std::size_t epoch) {
    const std::string key = derivation_key(label, s, code);
    {
        std::lock_guard lock(cache_mutex_);
        auto it = derivations_.find(key);
        if (it != derivations_.end()) return SliceRows{it->second.first, it->second.second < epoch};
    }
    IntRows rows = slice_rows(rows_exact(model_, code, label), spec_, s);
    std::lock_guard lock(cache_mutex_);
    auto [it, inserted] = derivations_.emplace(key, std::make_pair(rows, epoch));
    return SliceRows{std::move(rows), !inserted && it->second.second < epoch};
}

std::optional<IntVec> Prover::facet_point(Session& ses, const IntVec& s, const ActivationCode& code,
                                          const IntRows& rows, int row, const Vector& center) {
    const std::string label = facet_label(ses.label, s, code, row);
    if (auto p = lookup(label)) {
        if (!on_facet(rows, row, *p)) throw Error("committed point " + label + " is not on its facet");
        std::lock_guard lock(ses.mu);
        ses.scratch[label] = *p;
        return p;
    }
    const IntRow& tight = rows[static_cast<std::size_t>(row)];
    Vector normal(static_cast<Eigen::Index>(tight.a.size()));
    for (std::size_t k = 0; k < tight.a.size(); ++k) normal(static_cast<Eigen::Index>(k)) = tight.a[k].get_d();
    normal /= normal.norm();
    for (int bits : {kFacetShiftBits, kFacetShiftBits - 2, kFacetShiftBits + 2, kFacetShiftBits - 4}) {
        IntVec p = to_ints(center - std::ldexp(1.0, -bits) * normal, kPointBits);
        if (!on_facet(rows, row, p)) continue;
        std::lock_guard lock(ses.mu);
        ses.scratch[label] = p;
        return p;
    }
    return std::nullopt;
}

std::optional<IntVec> Prover::cell_point(Session& ses, const IntVec& s, const ActivationCode& code, const IntRows& rows,
                                         const Vector& center) {
    const std::string label = cell_label(ses.label, s, code);
    auto valid = [&](const IntVec& p) {
        IntVec full = assemble_point(spec_, model_.n_inputs(), p, s);
        if (code_exact(forward_exact(model_, full, point_den())) != code) return false;
        for (std::size_t k = static_cast<std::size_t>(model_.total_hidden()); k < rows.size(); ++k)
            if (slack(rows[k], p, point_den()) < 0) return false;
        return true;
    };
    if (auto p = lookup(label)) {
        if (!valid(*p)) throw Error("committed point " + label + " is not inside its cell");
        return p;
    }
    IntVec p = to_ints(center, kPointBits);
    if (!valid(p)) return std::nullopt;
    std::lock_guard lock(ses.mu);
    ses.appends[label] = p;
    return p;
}

CertifyOptions Prover::certify_options(Session& ses) const {
    CertifyOptions opt;
    opt.box_bound = static_cast<double>(options_.box_bound);
    opt.min_radius = std::ldexp(1.0, -kProverMinRadiusBits);
    opt.perturbation_step = std::ldexp(1.0, -kPointBits);
    opt.threads = options_.threads;
    opt.tie_check = [this](const Vector& full) { return has_exact_tie(model_, spec_, full); };
    opt.facet_eval = [this, &ses](const std::vector<double>& s, const ActivationCode& owner,
                                  const FacetCandidate& c) -> std::optional<FacetEval> {
        IntVec si = ints_of(s, kSensitiveBits);
        auto& self = const_cast<Prover&>(*this);
        IntRows rows = self.rows_for(si, owner, ses.label, ses.epoch).rows;
        if (c.row < 0 || static_cast<std::size_t>(c.row) >= rows.size())
            throw Error("floating and exact polytopes disagree on row count");
        const IntRow& row = rows[static_cast<std::size_t>(c.row)];
        if (norm_sq(row.a) == 0) return std::nullopt;
        auto p = self.facet_point(ses, si, owner, rows, c.row, c.rep_point);
        if (!p) return std::nullopt;
        Int d = squared_distance(row, ses.x_ns, point_den()).rounded;
        SliceContext ctx{&model_, &spec_, si, ses.label};
        return FacetEval{std::sqrt(std::ldexp(d.get_d(), -16)), is_boundary_point(ctx, owner, *p)};
    };
    return opt;
}

std::size_t Prover::commit_appends(Session& ses) {
    if (ses.appends.empty()) return 0;
    std::unique_lock lock(table_mutex_);
    std::size_t added = 0;
    for (auto& [label, p] : ses.appends) added += table_.emplace(label, p).second ? 1 : 0;
    if (added == 0) return 0;
    FixedPointEncoding enc;
    enc.scale_bits = model_.scale_bits();
    committed_ = std::make_shared<const CommittedModel>(model_, table_, randomness_, enc);
    logger().info("representative-point table grew by {} entries; commitment root changed", added);
    return added;
}

std::size_t Prover::warm_up(const Vector& x) { return prove(x).table_appends; }

ProveOutput Prover::prove(const Vector& x_in) {
    require_point(x_in, model_.n_inputs(), "query");
    Session ses;
    ses.epoch = ++epochs_;
    CertifyOptions opt = certify_options(ses);

    const Vector x0 = snap(x_in);
    Vector x = x0;
    auto pert = perturb_off_boundaries(float_model_, float_spec_, x, opt);
    const IntVec xq0 = to_ints(x0, kPointBits);
    const IntVec xq = to_ints(x, kPointBits);
    const auto fwd = forward_exact(model_, xq, point_den());
    ses.label = argmax_exact(fwd.logits);
    ses.x_ns = project_out_point(spec_, xq);
    for (const auto& v : ses.x_ns)
        if (abs(v) > Int(options_.box_bound) * point_den()) throw DimensionError("query lies outside the bounding box");

    ProveOutput out;
    out.certificate = certify_fairness(float_model_, float_spec_, x, opt);
    if (out.certificate.label != ses.label) throw Error("floating prediction disagrees with the quantized model");

    const auto values = spec_.enumerate();
    // Keep popped facet points and add cell points of every expanded cell.
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& tr = out.certificate.per_s[i];
        for (const auto& pop : tr.pops) {
            const auto& cell = tr.visited[static_cast<std::size_t>(pop.cell_index)];
            const std::string label = facet_label(ses.label, values[i], cell.code, pop.tight_row);
            if (!lookup(label)) ses.appends[label] = ses.scratch.at(label);
            if (pop.expanded_cell < 0) continue;
            const auto& next = tr.visited[static_cast<std::size_t>(pop.expanded_cell)];
            IntRows rows = rows_for(values[i], next.code, ses.label, ses.epoch).rows;
            if (!cell_point(ses, values[i], next.code, rows, next.rep_point))
                throw Error("cannot place a representative point inside cell " + next.code.to_string());
        }
    }
    out.table_appends = commit_appends(ses);
    out.commitment_updated = out.table_appends > 0;

    std::shared_ptr<const CommittedModel> cm;
    {
        std::shared_lock lock(table_mutex_);
        cm = committed_;
    }
    const std::size_t hits_before = hits_.load();
    auto rows_cached = [&](const IntVec& s, const ActivationCode& code) {
        auto r = rows_for(s, code, ses.label, ses.epoch);
        if (r.from_cache) ++hits_;
        return std::make_pair(std::move(r.rows), r.from_cache);
    };

    ProofTranscript t;
    t.commitment = cm->commitment();
    t.query = xq0;
    t.label = ses.label;
    t.box_bound = options_.box_bound;
    t.spec = spec_;
    if (pert) t.perturbation = PerturbationRecord{pert->coordinate, xq[static_cast<std::size_t>(pert->coordinate)] -
                                                                        xq0[static_cast<std::size_t>(pert->coordinate)]};
    t.model_openings = cm->open_model();

    const SquaredDistance box = box_squared_distance(ses.x_ns, point_den(), options_.box_bound);
    std::vector<Terminal> terminals;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& s = values[i];
        const auto& tr = out.certificate.per_s[i];
        IntVec full = assemble_point(spec_, model_.n_inputs(), ses.x_ns, s);
        auto f = forward_exact(model_, full, point_den());
        int slice_label = argmax_exact(f.logits);
        if (code_exact(f) != tr.start_code || slice_label != tr.slice_label)
            throw Error("floating traversal disagrees with the quantized model at its start cell");

        IntRows start_rows = rows_for(s, tr.start_code, ses.label, ses.epoch).rows;
        t.subproofs.push_back(SubProof{PolytopeProof{s, tr.start_code.to_string(), start_rows, slice_label}, false});
        if (slice_label != ses.label) {
            terminals.push_back(Terminal{0, 1, 0});
            t.leakage.push_back(0);
            continue;
        }

        auto emit_distances = [&](int cell_index) {
            const auto& cell = tr.visited[static_cast<std::size_t>(cell_index)];
            IntRows rows = rows_for(s, cell.code, ses.label, ses.epoch).rows;
            for (const auto& c : cell.candidates) {
                if (c.status == CandidateStatus::known) continue;
                DistanceProof d{cell_index, c.row, c.status == CandidateStatus::pruned, 0};
                if (!d.pruned) d.d_sq = squared_distance(rows[static_cast<std::size_t>(c.row)], ses.x_ns, point_den()).rounded;
                t.subproofs.push_back(SubProof{d, false});
            }
        };
        emit_distances(0);

        std::optional<Terminal> terminal;
        for (const auto& pop : tr.pops) {
            const auto& owner = tr.visited[static_cast<std::size_t>(pop.cell_index)];
            auto [rows, pre] = rows_cached(s, owner.code);
            const IntRow& row = rows[static_cast<std::size_t>(pop.tight_row)];
            SquaredDistance d = squared_distance(row, ses.x_ns, point_den());
            t.subproofs.push_back(SubProof{OrderProof{pop.cell_index, pop.tight_row, d.rounded}, false});
            t.subproofs.push_back(SubProof{
                BoundaryProof{pop.cell_index, pop.tight_row, pop.is_boundary,
                              cm->open(facet_label(ses.label, s, owner.code, pop.tight_row))},
                pre});
            if (pop.is_boundary) {
                terminal = make_terminal(d.rounded, box);
                break;
            }
            if (pop.tight_row >= model_.total_hidden() || !pop.neighbor_code)
                throw Error("traversal crossed a facet that the exact checks cannot certify");
            NeighborProof nb;
            nb.cell = pop.cell_index;
            nb.row = pop.tight_row;
            nb.neighbor_code = pop.neighbor_code->to_string();
            nb.visited = pop.expanded_cell < 0;
            bool nb_pre = false;
            if (!nb.visited) {
                const auto& next = tr.visited[static_cast<std::size_t>(pop.expanded_cell)];
                auto [next_rows, p] = rows_cached(s, next.code);
                nb.rows = std::move(next_rows);
                nb.point = cm->open(cell_label(ses.label, s, next.code));
                nb_pre = p;
            }
            t.subproofs.push_back(SubProof{nb, nb_pre});
            if (!nb.visited) emit_distances(pop.expanded_cell);
        }
        terminals.push_back(terminal ? *terminal : terminal_of(box));
        t.leakage.push_back(static_cast<int>(tr.pops.size()));
    }

    MinProof mp;
    for (const auto& term : terminals) mp.values.push_back(term.rounded);
    mp.eps_sq = *std::min_element(mp.values.begin(), mp.values.end());
    mp.epsilon = epsilon_from_terminals(terminals);
    t.epsilon = mp.epsilon;
    t.subproofs.push_back(SubProof{mp, false});
    t.subproofs.push_back(SubProof{InferenceProof{code_exact(fwd).to_string(), fwd.logits, ses.label}, false});

    out.cache_hits = hits_.load() - hits_before;
    out.transcript = std::move(t);
    return out;
}

} // namespace faircert
