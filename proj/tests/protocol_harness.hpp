#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "faircert/protocol/constraints.hpp"
#include "faircert/protocol/prover.hpp"
#include "faircert/protocol/verifier.hpp"
#include "test_helpers.hpp"

namespace faircert::test {

struct ProtocolFixture {
    std::string name;
    ModelWeights w;
    SensitiveSpec spec;
    std::vector<Vector> queries;
};

inline ProtocolFixture load_protocol_fixture(const std::string& name) {
    auto w = ModelWeights::load(fixture(name + ".json"));
    auto spec = SensitiveSpec::load(fixture(name + ".sensitive.json"), w.n_inputs());
    return {name, w, spec, load_queries(name + ".queries.json")};
}

inline Prover make_prover(const ProtocolFixture& f, std::uint64_t seed = 1) {
    return Prover(QuantizedModel(f.w, FixedPointEncoding{}), QuantizedSpec::from(f.spec),
                  CommitSecret{randomness_from_seed(seed), {}});
}

inline Verdict verify_own_claim(const ProofTranscript& t, CheckBackend& backend) {
    return verify_certificate(t.commitment, t.query, t.label, t.epsilon, t, backend);
}

enum class Mutation { WrongCode, PolytopeRow, Distance, SkippedPop, FalseBoundary, WrongMin, WrongLabel };

inline const std::vector<Mutation>& all_mutations() {
    static const std::vector<Mutation> all{Mutation::WrongCode,  Mutation::PolytopeRow,   Mutation::Distance,
                                           Mutation::SkippedPop, Mutation::FalseBoundary, Mutation::WrongMin,
                                           Mutation::WrongLabel};
    return all;
}

inline std::string mutation_name(Mutation m) {
    switch (m) {
    case Mutation::WrongCode: return "wrong-code";
    case Mutation::PolytopeRow: return "polytope-row";
    case Mutation::Distance: return "distance";
    case Mutation::SkippedPop: return "non-minimal-pop";
    case Mutation::FalseBoundary: return "false-boundary";
    case Mutation::WrongMin: return "wrong-min";
    case Mutation::WrongLabel: return "wrong-label";
    }
    return "?";
}

/// Subproof kind a verifier should name for each mutation.
inline CheckKind mutation_kind(Mutation m) {
    switch (m) {
    case Mutation::WrongCode:
    case Mutation::PolytopeRow: return CheckKind::Polytope;
    case Mutation::Distance: return CheckKind::Distance;
    case Mutation::SkippedPop: return CheckKind::Order;
    case Mutation::FalseBoundary: return CheckKind::Boundary;
    case Mutation::WrongMin: return CheckKind::Min;
    case Mutation::WrongLabel: return CheckKind::Inference;
    }
    return CheckKind::Opening;
}

template <class Body>
std::vector<std::size_t> positions_of(const ProofTranscript& t) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < t.subproofs.size(); ++i)
        if (std::holds_alternative<Body>(t.subproofs[i].body)) out.push_back(i);
    return out;
}

template <class T>
const T& pick(const std::vector<T>& xs, std::mt19937_64& rng) {
    return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
}

/// Pops whose facet could be swapped for a strictly farther pending one:
/// (subproof index, replacement cell, row, squared distance).
struct PopSwap {
    std::size_t at;
    int cell;
    int row;
    Int d_sq;
};

inline std::vector<PopSwap> pop_swaps(const ProofTranscript& t) {
    std::vector<PopSwap> out;
    std::map<std::pair<int, int>, Int> pending;
    for (std::size_t i = 0; i < t.subproofs.size(); ++i) {
        const auto& body = t.subproofs[i].body;
        if (std::holds_alternative<PolytopeProof>(body)) {
            pending.clear();
        } else if (const auto* d = std::get_if<DistanceProof>(&body)) {
            if (!d->pruned) pending[{d->cell, d->row}] = d->d_sq;
        } else if (const auto* o = std::get_if<OrderProof>(&body)) {
            for (const auto& [key, v] : pending)
                if (v > o->d_sq) {
                    out.push_back({i, key.first, key.second, v});
                    break;
                }
            pending.erase({o->cell, o->row});
        }
    }
    return out;
}

/// Applies one mutation of the given class. The returned transcript keeps a
/// self-consistent public claim, so rejection must come from the tampered
/// subproof. nullopt when the transcript has nothing of that kind to tamper.
inline std::optional<ProofTranscript> mutate(const ProofTranscript& honest, Mutation m, std::mt19937_64& rng) {
    ProofTranscript t = honest;
    std::uniform_int_distribution<int> coin(0, 1);
    switch (m) {
    case Mutation::WrongCode: {
        auto at = positions_of<PolytopeProof>(t);
        if (at.empty()) return std::nullopt;
        auto& p = std::get<PolytopeProof>(t.subproofs[pick(at, rng)].body);
        if (p.code.empty()) return std::nullopt;
        auto bit = std::uniform_int_distribution<std::size_t>(0, p.code.size() - 1)(rng);
        p.code[bit] = p.code[bit] == '1' ? '0' : '1';
        return t;
    }
    case Mutation::PolytopeRow: {
        auto at = positions_of<PolytopeProof>(t);
        if (at.empty()) return std::nullopt;
        auto& p = std::get<PolytopeProof>(t.subproofs[pick(at, rng)].body);
        if (p.rows.empty()) return std::nullopt;
        auto& row = p.rows[std::uniform_int_distribution<std::size_t>(0, p.rows.size() - 1)(rng)];
        row.b += coin(rng) ? 1 : -1;
        return t;
    }
    case Mutation::Distance: {
        std::vector<std::size_t> at;
        for (auto i : positions_of<DistanceProof>(t))
            if (!std::get<DistanceProof>(t.subproofs[i].body).pruned) at.push_back(i);
        if (at.empty()) return std::nullopt;
        auto& d = std::get<DistanceProof>(t.subproofs[pick(at, rng)].body);
        // One ulp either way, or about 1e-3 in squared distance.
        static const std::vector<long> steps{1, -1, 66};
        d.d_sq += pick(steps, rng);
        return t;
    }
    case Mutation::SkippedPop: {
        auto swaps = pop_swaps(t);
        if (swaps.empty()) return std::nullopt;
        const auto& s = pick(swaps, rng);
        auto& o = std::get<OrderProof>(t.subproofs[s.at].body);
        o.cell = s.cell;
        o.row = s.row;
        o.d_sq = s.d_sq;
        return t;
    }
    case Mutation::FalseBoundary: {
        auto at = positions_of<BoundaryProof>(t);
        if (at.empty()) return std::nullopt;
        auto& b = std::get<BoundaryProof>(t.subproofs[pick(at, rng)].body);
        b.boundary = !b.boundary;
        return t;
    }
    case Mutation::WrongMin: {
        auto at = positions_of<MinProof>(t);
        if (at.empty()) return std::nullopt;
        auto& mp = std::get<MinProof>(t.subproofs[at.front()].body);
        switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
        case 0: mp.eps_sq += 1; break;
        case 1:
            mp.values[std::uniform_int_distribution<std::size_t>(0, mp.values.size() - 1)(rng)] += 1;
            break;
        default:
            // Inflate the certified radius and claim it publicly.
            mp.epsilon += 1 + std::uniform_int_distribution<long>(0, 1 << 20)(rng);
            t.epsilon = mp.epsilon;
            break;
        }
        return t;
    }
    case Mutation::WrongLabel: {
        auto at = positions_of<InferenceProof>(t);
        if (at.empty() || t.spec.indices.empty()) return std::nullopt;
        auto& ip = std::get<InferenceProof>(t.subproofs[at.front()].body);
        int classes = static_cast<int>(ip.logits.size());
        if (classes < 2) return std::nullopt;
        int other = (ip.label + std::uniform_int_distribution<int>(1, classes - 1)(rng)) % classes;
        if (coin(rng)) {
            // Also forge logits that make the wrong label the argmax.
            std::swap(ip.logits[static_cast<std::size_t>(ip.label)], ip.logits[static_cast<std::size_t>(other)]);
        }
        ip.label = other;
        return t;
    }
    }
    return std::nullopt;
}

/// Constraint totals per kind over the first five queries of the toy and
/// german_2_4 fixtures, seed 1. Pinned.
inline const std::map<CheckKind, std::size_t> kGoldenTotals{
    {CheckKind::Polytope, 33280}, {CheckKind::Distance, 42174}, {CheckKind::Order, 5464},
    {CheckKind::Boundary, 133221}, {CheckKind::Neighbor, 60774}, {CheckKind::Min, 10750},
    {CheckKind::Inference, 15180}};
/// A Distance check in two dimensions.
inline constexpr std::size_t kGoldenDistance2d = 569;

inline std::map<CheckKind, std::size_t> golden_constraint_totals() {
    std::map<CheckKind, std::size_t> totals;
    for (std::string name : {"toy_2_2_2", "german_2_4"}) {
        auto f = load_protocol_fixture(name);
        Prover prover = make_prover(f, 1);
        for (std::size_t i = 0; i < 5; ++i) {
            ConstraintBackend backend;
            verify_own_claim(prover.prove(f.queries[i]).transcript, backend);
            for (const auto& [k, n] : backend.constraint_totals()) totals[k] += n;
        }
    }
    return totals;
}

} // namespace faircert::test
