#include "faircert/protocol/commitment.hpp"

#include <fstream>
#include <sstream>

#include "faircert/error.hpp"

namespace faircert {

using nlohmann::json;

namespace {

std::string join_ints(const IntVec& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += to_decimal(v[i]);
    }
    return out;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

std::string bytes_of(const Digest& d) { return std::string(reinterpret_cast<const char*>(d.data()), d.size()); }

} // namespace

json Commitment::to_json() const {
    return json{{"scheme_id", scheme_id},
                {"root", to_hex(root)},
                {"randomness_commitment", to_hex(randomness_commitment)},
                {"leaf_count", leaf_count},
                {"encoding", {{"scale_bits", encoding.scale_bits}, {"modulus", to_decimal(encoding.modulus)}}}};
}

Commitment Commitment::from_json(const json& doc) {
    try {
        Commitment c;
        c.scheme_id = doc.at("scheme_id").get<std::string>();
        if (c.scheme_id != kSchemeId) throw SchemaError("unknown commitment scheme '" + c.scheme_id + "'");
        c.root = digest_from_hex(doc.at("root").get<std::string>());
        c.randomness_commitment = digest_from_hex(doc.at("randomness_commitment").get<std::string>());
        c.leaf_count = doc.at("leaf_count").get<std::size_t>();
        c.encoding.scale_bits = doc.at("encoding").at("scale_bits").get<int>();
        c.encoding.modulus = from_decimal(doc.at("encoding").at("modulus").get<std::string>());
        return c;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("commitment: ") + e.what());
    }
}

void Commitment::save(const std::string& path) const { write_text(path, to_json().dump(1) + "\n"); }

Commitment Commitment::load(const std::string& path) { return from_json(read_json_file(path)); }

std::string slice_key(int label, const IntVec& s) { return std::to_string(label) + "/" + join_ints(s); }

std::string cell_label(int label, const IntVec& s, const ActivationCode& code) {
    return "p/" + slice_key(label, s) + "/" + code.to_string();
}

std::string facet_label(int label, const IntVec& s, const ActivationCode& code, int row) {
    return "f/" + slice_key(label, s) + "/" + code.to_string() + "/" + std::to_string(row);
}

std::string weight_label(int layer, int row, int col) {
    return "w/" + std::to_string(layer) + "/" + std::to_string(row) + "/" + std::to_string(col);
}

std::string bias_label(int layer, int row) { return "b/" + std::to_string(layer) + "/" + std::to_string(row); }

std::string arch_content(const QuantizedModel& m) {
    std::ostringstream os;
    os << "inputs=" << m.n_inputs() << ";layers=";
    for (int l = 0; l < m.n_layers(); ++l) {
        if (l) os << ',';
        os << m.weights()[static_cast<std::size_t>(l)].size();
    }
    os << ";scale=" << m.scale_bits();
    return os.str();
}

std::string point_content(const IntVec& p) { return join_ints(p); }

IntVec parse_point_content(const std::string& content) {
    IntVec out;
    std::stringstream ss(content);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(from_decimal(item));
    return out;
}

Digest leaf_hash(const Digest& salt, const std::string& label, const std::string& content) {
    std::string buf(1, '\x00');
    buf += bytes_of(salt);
    buf += label;
    buf.push_back('\x00');
    buf += content;
    return sha256(buf);
}

bool verify_opening(const Commitment& c, const Opening& o) {
    if (c.leaf_count == 0 || o.index >= c.leaf_count) return false;
    std::size_t width = 1;
    std::size_t depth = 0;
    while (width < c.leaf_count) {
        width <<= 1;
        ++depth;
    }
    if (o.path.size() != depth) return false;
    return root_from_path(leaf_hash(o.salt, o.label, o.content), o.index, o.path) == c.root;
}

json Opening::to_json() const {
    json p = json::array();
    for (const auto& d : path) p.push_back(to_hex(d));
    return json{{"label", label}, {"content", content}, {"salt", to_hex(salt)}, {"index", index}, {"path", p}};
}

Opening Opening::from_json(const json& doc) {
    Opening o;
    o.label = doc.at("label").get<std::string>();
    o.content = doc.at("content").get<std::string>();
    o.salt = digest_from_hex(doc.at("salt").get<std::string>());
    o.index = doc.at("index").get<std::size_t>();
    for (const auto& d : doc.at("path")) o.path.push_back(digest_from_hex(d.get<std::string>()));
    return o;
}

Digest randomness_from_seed(std::uint64_t seed) { return sha256("faircert-seed/" + std::to_string(seed)); }

CommittedModel::CommittedModel(QuantizedModel model, RepTable table, const Digest& randomness, FixedPointEncoding enc)
    : model_(std::move(model)), table_(std::move(table)), randomness_(randomness) {
    if (enc.scale_bits != model_.scale_bits()) throw EncodingError("model scale does not match the encoding");
    leaves_.emplace_back("arch", arch_content(model_));
    for (int l = 0; l < model_.n_layers(); ++l) {
        const auto& w = model_.weights()[static_cast<std::size_t>(l)];
        for (std::size_t r = 0; r < w.size(); ++r)
            for (std::size_t c = 0; c < w[r].size(); ++c)
                leaves_.emplace_back(weight_label(l, static_cast<int>(r), static_cast<int>(c)), to_decimal(w[r][c]));
        const auto& b = model_.biases()[static_cast<std::size_t>(l)];
        for (std::size_t r = 0; r < b.size(); ++r)
            leaves_.emplace_back(bias_label(l, static_cast<int>(r)), to_decimal(b[r]));
    }
    for (const auto& [label, point] : table_) leaves_.emplace_back(label, point_content(point));

    std::vector<Digest> hashes;
    for (std::size_t i = 0; i < leaves_.size(); ++i) {
        index_[leaves_[i].first] = i;
        hashes.push_back(leaf_hash(salt_for(leaves_[i].first), leaves_[i].first, leaves_[i].second));
    }
    tree_.emplace(std::move(hashes));
    commitment_.root = tree_->root();
    commitment_.randomness_commitment = sha256("rand" + bytes_of(randomness_));
    commitment_.encoding = enc;
    commitment_.leaf_count = leaves_.size();
}

Digest CommittedModel::salt_for(const std::string& label) const {
    return sha256("faircert-salt" + bytes_of(randomness_) + label);
}

Opening CommittedModel::open(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) throw Error("no committed leaf '" + label + "'");
    Opening o;
    o.label = label;
    o.content = leaves_[it->second].second;
    o.salt = salt_for(label);
    o.index = it->second;
    o.path = tree_->path(it->second);
    return o;
}

std::vector<Opening> CommittedModel::open_model() const {
    std::vector<Opening> out;
    for (const auto& [label, content] : leaves_) {
        if (label.rfind("p/", 0) == 0 || label.rfind("f/", 0) == 0) continue;
        out.push_back(open(label));
    }
    return out;
}

CommittedModel commit_model(const ModelWeights& w, const RepTable& table, const Digest& randomness,
                            FixedPointEncoding enc) {
    return CommittedModel(QuantizedModel(w, enc), table, randomness, enc);
}

json CommitSecret::to_json() const {
    json t = json::object();
    for (const auto& [label, p] : table) {
        json coords = json::array();
        for (const auto& v : p) coords.push_back(to_decimal(v));
        t[label] = coords;
    }
    return json{{"randomness", to_hex(randomness)}, {"table", t}};
}

CommitSecret CommitSecret::from_json(const json& doc) {
    try {
        CommitSecret s;
        s.randomness = digest_from_hex(doc.at("randomness").get<std::string>());
        for (const auto& [label, coords] : doc.at("table").items()) {
            IntVec p;
            for (const auto& v : coords) p.push_back(from_decimal(v.get<std::string>()));
            s.table[label] = std::move(p);
        }
        return s;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("commitment secret: ") + e.what());
    }
}

void CommitSecret::save(const std::string& path) const { write_text(path, to_json().dump(1) + "\n"); }

CommitSecret CommitSecret::load(const std::string& path) { return from_json(read_json_file(path)); }

} // namespace faircert
