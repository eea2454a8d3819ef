#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "faircert/protocol/commitment.hpp"

namespace faircert {

enum class CheckKind { Opening, Polytope, Distance, Order, Boundary, Neighbor, Min, Inference };

std::string to_string(CheckKind k);
CheckKind check_kind_from(const std::string& s);

struct PolytopeProof {
    IntVec s;
    std::string code;
    IntRows rows; // sliced, neuron rows then decision rows
    int slice_label = 0;
};

struct DistanceProof {
    int cell = 0;
    int row = 0;
    bool pruned = false;
    Int d_sq; // round-half-up(d^2 * 2^16); unused when pruned
};

struct OrderProof {
    int cell = 0;
    int row = 0;
    Int d_sq;
};

struct BoundaryProof {
    int cell = 0;
    int row = 0;
    bool boundary = false;
    Opening point; // facet representative point
};

struct NeighborProof {
    int cell = 0;
    int row = 0;
    std::string neighbor_code;
    /// Set when the neighbor was expanded earlier; no point or rows then.
    bool visited = false;
    std::optional<Opening> point;
    IntRows rows;
};

struct MinProof {
    IntVec values; // per-s terminal rounded squared distances
    Int eps_sq;
    Int epsilon; // numerator over 2^kPointBits
};

struct InferenceProof {
    std::string code;
    IntVec logits; // numerators over 2^(kPointBits + scale * layers)
    int label = 0;
};

using ProofBody =
    std::variant<PolytopeProof, DistanceProof, OrderProof, BoundaryProof, NeighborProof, MinProof, InferenceProof>;

struct SubProof {
    ProofBody body;
    /// Payload served from the prover's offline cache.
    bool precomputed = false;

    CheckKind kind() const;
};

struct PerturbationRecord {
    int coordinate = 0;
    Int delta; // grid units of 2^-kPointBits
};

struct ProofTranscript {
    int version = 1;
    Commitment commitment;
    IntVec query; // certified point, numerators over 2^kPointBits
    int label = 0;
    Int epsilon; // numerator over 2^kPointBits
    long box_bound = 100;
    QuantizedSpec spec;
    std::optional<PerturbationRecord> perturbation;
    std::vector<int> leakage; // pops per s
    std::vector<Opening> model_openings;
    std::vector<SubProof> subproofs;

    double epsilon_value() const;
};

/// Canonical JSON: sorted keys, integers beyond machine range as decimal strings.
nlohmann::json transcript_to_json(const ProofTranscript& t);
ProofTranscript transcript_from_json(const nlohmann::json& doc);
std::string canonical_json(const ProofTranscript& t);
Digest transcript_digest(const ProofTranscript& t);

/// Length-prefixed little-endian encoding of the canonical JSON tree.
std::string transcript_to_binary(const ProofTranscript& t);
ProofTranscript transcript_from_binary(const std::string& bytes);

void save_transcript(const ProofTranscript& t, const std::string& path);
ProofTranscript load_transcript(const std::string& path);

} // namespace faircert
