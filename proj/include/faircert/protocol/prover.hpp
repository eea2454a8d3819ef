#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>

#include "faircert/certifier.hpp"
#include "faircert/protocol/transcript.hpp"

namespace faircert {

/// Inscribed-radius threshold below which the prover prunes facets and cells.
inline constexpr int kProverMinRadiusBits = 23;
/// Inward offset of facet representative points before snapping.
inline constexpr int kFacetShiftBits = 26;

struct ProveOptions {
    long box_bound = 100;
    int threads = 1;
};

struct ProveOutput {
    ProofTranscript transcript;
    /// The table grew during this call and the commitment root changed.
    bool commitment_updated = false;
    std::size_t table_appends = 0;
    std::size_t cache_hits = 0;
    /// Certificate computed on the quantized model.
    CertificateBundle certificate;
};

/// Holds the committed model, the representative-point table and a cache
/// of slice derivations shared across queries.
class Prover {
public:
    Prover(QuantizedModel model, QuantizedSpec spec, CommitSecret secret, ProveOptions options = {});

    /// Fails unless the rebuilt commitment equals `published`.
    void expect_commitment(const Commitment& published) const;

    ProveOutput prove(const Vector& x);
    /// Runs the traversal for `x` and adds any missing table entries.
    std::size_t warm_up(const Vector& x);

    Commitment commitment() const;
    CommitSecret secret() const;
    const QuantizedModel& model() const { return model_; }
    const QuantizedSpec& spec() const { return spec_; }
    std::size_t cache_hits() const { return hits_.load(); }

private:
    struct SliceRows {
        IntRows rows;
        bool from_cache = false;
    };
    struct Session;

    /// Sliced rows of a cell; `from_cache` when derived by an earlier call.
    SliceRows rows_for(const IntVec& s, const ActivationCode& code, int label, std::size_t epoch);
    std::optional<IntVec> facet_point(Session& ses, const IntVec& s, const ActivationCode& code, const IntRows& rows,
                                      int row, const Vector& center);
    std::optional<IntVec> cell_point(Session& ses, const IntVec& s, const ActivationCode& code, const IntRows& rows,
                                     const Vector& center);
    std::optional<IntVec> lookup(const std::string& label) const;
    CertifyOptions certify_options(Session& ses) const;
    std::size_t commit_appends(Session& ses);

    QuantizedModel model_;
    QuantizedSpec spec_;
    ModelWeights float_model_;
    SensitiveSpec float_spec_;
    ProveOptions options_;
    Digest randomness_{};

    mutable std::shared_mutex table_mutex_;
    RepTable table_;
    std::shared_ptr<const CommittedModel> committed_;

    std::mutex cache_mutex_;
    std::map<std::string, std::pair<IntRows, std::size_t>> derivations_;
    std::atomic<std::size_t> epochs_{0};
    std::atomic<std::size_t> hits_{0};
};

} // namespace faircert
