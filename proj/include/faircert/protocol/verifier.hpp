#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "faircert/protocol/checks.hpp"

namespace faircert {

/// Largest tie perturbation, in grid units, the verifier accepts.
inline constexpr int kMaxPerturbationSteps = 16;

struct Verdict {
    bool accepted = false;
    /// Kind of the failing item; Opening for model openings.
    std::optional<CheckKind> kind;
    /// Index into the subproof list, or into model openings for Opening.
    std::ptrdiff_t index = -1;
    std::string reason;

    /// "accept" or "reject <Kind>#<index>: <reason>".
    std::string message() const;
};

/// Replays a transcript against a commitment and the public claim
/// (query, label, epsilon). Query and epsilon are numerators over
/// 2^kPointBits.
Verdict verify_certificate(const Commitment& c, const IntVec& query, int label, const Int& epsilon,
                           const ProofTranscript& t, CheckBackend& backend);

/// Same, quantizing real-valued query and epsilon onto the point grid.
Verdict verify_certificate(const Commitment& c, const Vector& query, int label, double epsilon,
                           const ProofTranscript& t, CheckBackend& backend);

/// Model rebuilt from verified openings.
QuantizedModel model_from_openings(const std::vector<Opening>& openings, int scale_bits);

} // namespace faircert
