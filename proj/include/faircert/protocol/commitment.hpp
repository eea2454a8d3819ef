#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faircert/protocol/exact.hpp"
#include "faircert/protocol/merkle.hpp"

namespace faircert {

inline constexpr const char* kSchemeId = "faircert-sha256-merkle-v1";

struct Commitment {
    std::string scheme_id = kSchemeId;
    Digest root{};
    Digest randomness_commitment{};
    FixedPointEncoding encoding;
    std::size_t leaf_count = 0;

    nlohmann::json to_json() const;
    static Commitment from_json(const nlohmann::json& doc);
    void save(const std::string& path) const;
    static Commitment load(const std::string& path);
    bool operator==(const Commitment&) const = default;
};

/// Committed representative points, keyed by leaf label. Coordinates are
/// numerators over 2^kPointBits in the sliced space.
using RepTable = std::map<std::string, IntVec>;

std::string slice_key(int label, const IntVec& s);
/// "p/<label>/<s>/<code>": Chebyshev center of a sliced cell.
std::string cell_label(int label, const IntVec& s, const ActivationCode& code);
/// "f/<label>/<s>/<code>/<row>": point on one facet of that cell.
std::string facet_label(int label, const IntVec& s, const ActivationCode& code, int row);

/// Revealed leaf with its authentication path.
struct Opening {
    std::string label;
    std::string content;
    Digest salt{};
    std::size_t index = 0;
    std::vector<Digest> path;

    nlohmann::json to_json() const;
    static Opening from_json(const nlohmann::json& doc);
    bool operator==(const Opening&) const = default;
};

Digest leaf_hash(const Digest& salt, const std::string& label, const std::string& content);
/// Checks an opening against a root.
bool verify_opening(const Commitment& c, const Opening& o);

std::string weight_label(int layer, int row, int col);
std::string bias_label(int layer, int row);
std::string arch_content(const QuantizedModel& m);
std::string point_content(const IntVec& p);
IntVec parse_point_content(const std::string& content);

/// 32 bytes derived from a user seed.
Digest randomness_from_seed(std::uint64_t seed);

/// Prover-side view of a commitment: the model, the table and the tree.
class CommittedModel {
public:
    CommittedModel(QuantizedModel model, RepTable table, const Digest& randomness, FixedPointEncoding enc = {});

    const Commitment& commitment() const { return commitment_; }
    const QuantizedModel& model() const { return model_; }
    const RepTable& table() const { return table_; }
    const Digest& randomness() const { return randomness_; }

    bool has(const std::string& label) const { return index_.count(label) != 0; }
    Opening open(const std::string& label) const;
    /// Openings of the architecture leaf and every weight and bias.
    std::vector<Opening> open_model() const;

private:
    Digest salt_for(const std::string& label) const;

    QuantizedModel model_;
    RepTable table_;
    Digest randomness_{};
    Commitment commitment_;
    std::vector<std::pair<std::string, std::string>> leaves_;
    std::map<std::string, std::size_t> index_;
    std::optional<MerkleTree> tree_;
};

/// Quantizes `w` and commits to it together with `table`.
CommittedModel commit_model(const ModelWeights& w, const RepTable& table, const Digest& randomness,
                            FixedPointEncoding enc = {});

/// Private half of a commitment kept by the prover.
struct CommitSecret {
    Digest randomness{};
    RepTable table;

    nlohmann::json to_json() const;
    static CommitSecret from_json(const nlohmann::json& doc);
    void save(const std::string& path) const;
    static CommitSecret load(const std::string& path);
};

} // namespace faircert
