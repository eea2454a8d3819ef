#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace faircert {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view bytes);
std::string to_hex(const Digest& d);
Digest digest_from_hex(const std::string& hex);

/// Hash of an internal node: H(0x01 || left || right).
Digest node_hash(const Digest& left, const Digest& right);

/// Binary hash tree; leaves are padded with zero digests to a power of two.
class MerkleTree {
public:
    explicit MerkleTree(std::vector<Digest> leaves);

    const Digest& root() const { return levels_.back().front(); }
    std::size_t leaf_count() const { return count_; }
    /// Sibling digests from the leaf level upward.
    std::vector<Digest> path(std::size_t index) const;

private:
    std::size_t count_ = 0;
    std::vector<std::vector<Digest>> levels_;
};

Digest root_from_path(Digest leaf, std::size_t index, const std::vector<Digest>& path);

} // namespace faircert
