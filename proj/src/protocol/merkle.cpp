#include "faircert/protocol/merkle.hpp"

#include <openssl/sha.h>

#include "faircert/error.hpp"

namespace faircert {

Digest sha256(std::string_view bytes) {
    Digest d{};
    SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), d.data());
    return d;
}

std::string to_hex(const Digest& d) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : d) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 15]);
    }
    return out;
}

Digest digest_from_hex(const std::string& hex) {
    if (hex.size() != 64) throw SchemaError("digest must be 64 hex characters");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw SchemaError("bad hex digit in digest");
    };
    Digest d{};
    for (std::size_t i = 0; i < 32; ++i)
        d[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) * 16 + nibble(hex[2 * i + 1]));
    return d;
}

Digest node_hash(const Digest& left, const Digest& right) {
    std::string buf(1, '\x01');
    buf.append(reinterpret_cast<const char*>(left.data()), left.size());
    buf.append(reinterpret_cast<const char*>(right.data()), right.size());
    return sha256(buf);
}

MerkleTree::MerkleTree(std::vector<Digest> leaves) : count_(leaves.size()) {
    if (leaves.empty()) throw Error("hash tree needs at least one leaf");
    std::size_t width = 1;
    while (width < leaves.size()) width <<= 1;
    leaves.resize(width, Digest{});
    levels_.push_back(std::move(leaves));
    while (levels_.back().size() > 1) {
        const auto& below = levels_.back();
        std::vector<Digest> above(below.size() / 2);
        for (std::size_t i = 0; i < above.size(); ++i) above[i] = node_hash(below[2 * i], below[2 * i + 1]);
        levels_.push_back(std::move(above));
    }
}

std::vector<Digest> MerkleTree::path(std::size_t index) const {
    if (index >= count_) throw Error("leaf index out of range");
    std::vector<Digest> out;
    for (std::size_t l = 0; l + 1 < levels_.size(); ++l) {
        out.push_back(levels_[l][index ^ 1u]);
        index >>= 1;
    }
    return out;
}

Digest root_from_path(Digest leaf, std::size_t index, const std::vector<Digest>& path) {
    for (const auto& sibling : path) {
        leaf = (index & 1u) ? node_hash(sibling, leaf) : node_hash(leaf, sibling);
        index >>= 1;
    }
    return leaf;
}

} // namespace faircert
