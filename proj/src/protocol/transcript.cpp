#include "faircert/protocol/transcript.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "faircert/error.hpp"

namespace faircert {

using nlohmann::json;

namespace {

const char* kKindNames[] = {"Opening", "Polytope", "Distance", "Order", "Boundary", "Neighbor", "Min", "Inference"};

json ints(const IntVec& v) {
    json out = json::array();
    for (const auto& x : v) out.push_back(to_decimal(x));
    return out;
}

IntVec read_ints(const json& j) {
    IntVec out;
    for (const auto& x : j) out.push_back(from_decimal(x.get<std::string>()));
    return out;
}

json rows_json(const IntRows& rows) {
    json out = json::array();
    for (const auto& r : rows) out.push_back(json{{"a", ints(r.a)}, {"b", to_decimal(r.b)}});
    return out;
}

IntRows read_rows(const json& j) {
    IntRows out;
    for (const auto& r : j) out.push_back(IntRow{read_ints(r.at("a")), from_decimal(r.at("b").get<std::string>())});
    return out;
}

Int read_int(const json& j) { return from_decimal(j.get<std::string>()); }

struct BodyToJson {
    json operator()(const PolytopeProof& p) const {
        return {{"s", ints(p.s)}, {"code", p.code}, {"rows", rows_json(p.rows)}, {"slice_label", p.slice_label}};
    }
    json operator()(const DistanceProof& p) const {
        return {{"cell", p.cell}, {"row", p.row}, {"pruned", p.pruned}, {"d_sq", to_decimal(p.d_sq)}};
    }
    json operator()(const OrderProof& p) const { return {{"cell", p.cell}, {"row", p.row}, {"d_sq", to_decimal(p.d_sq)}}; }
    json operator()(const BoundaryProof& p) const {
        return {{"cell", p.cell}, {"row", p.row}, {"boundary", p.boundary}, {"point", p.point.to_json()}};
    }
    json operator()(const NeighborProof& p) const {
        json j{{"cell", p.cell},
               {"row", p.row},
               {"neighbor_code", p.neighbor_code},
               {"visited", p.visited},
               {"rows", rows_json(p.rows)}};
        if (p.point) j["point"] = p.point->to_json();
        return j;
    }
    json operator()(const MinProof& p) const {
        return {{"values", ints(p.values)}, {"eps_sq", to_decimal(p.eps_sq)}, {"epsilon", to_decimal(p.epsilon)}};
    }
    json operator()(const InferenceProof& p) const {
        return {{"code", p.code}, {"logits", ints(p.logits)}, {"label", p.label}};
    }
};

ProofBody body_from(CheckKind kind, const json& j) {
    switch (kind) {
    case CheckKind::Polytope:
        return PolytopeProof{read_ints(j.at("s")), j.at("code").get<std::string>(), read_rows(j.at("rows")),
                             j.at("slice_label").get<int>()};
    case CheckKind::Distance:
        return DistanceProof{j.at("cell").get<int>(), j.at("row").get<int>(), j.at("pruned").get<bool>(),
                             read_int(j.at("d_sq"))};
    case CheckKind::Order:
        return OrderProof{j.at("cell").get<int>(), j.at("row").get<int>(), read_int(j.at("d_sq"))};
    case CheckKind::Boundary:
        return BoundaryProof{j.at("cell").get<int>(), j.at("row").get<int>(), j.at("boundary").get<bool>(),
                             Opening::from_json(j.at("point"))};
    case CheckKind::Neighbor: {
        NeighborProof p;
        p.cell = j.at("cell").get<int>();
        p.row = j.at("row").get<int>();
        p.neighbor_code = j.at("neighbor_code").get<std::string>();
        p.visited = j.at("visited").get<bool>();
        p.rows = read_rows(j.at("rows"));
        if (j.contains("point")) p.point = Opening::from_json(j.at("point"));
        return p;
    }
    case CheckKind::Min:
        return MinProof{read_ints(j.at("values")), read_int(j.at("eps_sq")), read_int(j.at("epsilon"))};
    case CheckKind::Inference:
        return InferenceProof{j.at("code").get<std::string>(), read_ints(j.at("logits")), j.at("label").get<int>()};
    case CheckKind::Opening: break;
    }
    throw SchemaError("subproof kind cannot appear in the list");
}

// Binary tags.
enum : std::uint8_t { kNull, kFalse, kTrue, kInt, kUint, kFloat, kString, kArray, kObject };

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void encode(const json& j, std::string& out) {
    switch (j.type()) {
    case json::value_t::null: out.push_back(static_cast<char>(kNull)); break;
    case json::value_t::boolean: out.push_back(static_cast<char>(j.get<bool>() ? kTrue : kFalse)); break;
    case json::value_t::number_integer:
        out.push_back(static_cast<char>(kInt));
        put_u64(out, static_cast<std::uint64_t>(j.get<std::int64_t>()));
        break;
    case json::value_t::number_unsigned:
        out.push_back(static_cast<char>(kUint));
        put_u64(out, j.get<std::uint64_t>());
        break;
    case json::value_t::number_float: {
        out.push_back(static_cast<char>(kFloat));
        double d = j.get<double>();
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof bits);
        put_u64(out, bits);
        break;
    }
    case json::value_t::string: {
        const auto& s = j.get_ref<const std::string&>();
        out.push_back(static_cast<char>(kString));
        put_u32(out, static_cast<std::uint32_t>(s.size()));
        out += s;
        break;
    }
    case json::value_t::array:
        out.push_back(static_cast<char>(kArray));
        put_u32(out, static_cast<std::uint32_t>(j.size()));
        for (const auto& e : j) encode(e, out);
        break;
    case json::value_t::object:
        out.push_back(static_cast<char>(kObject));
        put_u32(out, static_cast<std::uint32_t>(j.size()));
        for (const auto& [k, v] : j.items()) {
            put_u32(out, static_cast<std::uint32_t>(k.size()));
            out += k;
            encode(v, out);
        }
        break;
    default: throw Error("cannot encode json value");
    }
}

class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}
    bool done() const { return pos_ == s_.size(); }
    std::uint8_t byte() {
        need(1);
        return static_cast<std::uint8_t>(s_[pos_++]);
    }
    std::uint64_t u(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(s_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::string str() {
        auto n = static_cast<std::size_t>(u(4));
        need(n);
        std::string out = s_.substr(pos_, n);
        pos_ += n;
        return out;
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > s_.size()) throw SchemaError("truncated binary transcript");
    }
    const std::string& s_;
    std::size_t pos_ = 0;
};

json decode(Reader& r) {
    switch (r.byte()) {
    case kNull: return nullptr;
    case kFalse: return false;
    case kTrue: return true;
    case kInt: return static_cast<std::int64_t>(r.u(8));
    case kUint: return r.u(8);
    case kFloat: {
        std::uint64_t bits = r.u(8);
        double d;
        std::memcpy(&d, &bits, sizeof d);
        return d;
    }
    case kString: return r.str();
    case kArray: {
        auto n = r.u(4);
        json out = json::array();
        for (std::uint64_t i = 0; i < n; ++i) out.push_back(decode(r));
        return out;
    }
    case kObject: {
        auto n = r.u(4);
        json out = json::object();
        for (std::uint64_t i = 0; i < n; ++i) {
            std::string k = r.str();
            out[k] = decode(r);
        }
        return out;
    }
    default: throw SchemaError("bad tag in binary transcript");
    }
}

} // namespace

std::string to_string(CheckKind k) { return kKindNames[static_cast<int>(k)]; }

CheckKind check_kind_from(const std::string& s) {
    for (int i = 0; i < 8; ++i)
        if (s == kKindNames[i]) return static_cast<CheckKind>(i);
    throw SchemaError("unknown subproof kind '" + s + "'");
}

CheckKind SubProof::kind() const { return static_cast<CheckKind>(body.index() + 1); }

double ProofTranscript::epsilon_value() const { return dyadic_to_double(epsilon, kPointBits); }

json transcript_to_json(const ProofTranscript& t) {
    json subs = json::array();
    for (const auto& sp : t.subproofs) {
        json j = std::visit(BodyToJson{}, sp.body);
        j["kind"] = to_string(sp.kind());
        j["precomputed"] = sp.precomputed;
        subs.push_back(std::move(j));
    }
    json openings = json::array();
    for (const auto& o : t.model_openings) openings.push_back(o.to_json());
    json features = json::array();
    for (std::size_t i = 0; i < t.spec.indices.size(); ++i)
        features.push_back(json{{"index", t.spec.indices[i]}, {"domain", ints(t.spec.domains[i])}});
    json doc{{"version", t.version},
             {"commitment", t.commitment.to_json()},
             {"query", ints(t.query)},
             {"label", t.label},
             {"epsilon", to_decimal(t.epsilon)},
             {"box_bound", t.box_bound},
             {"sensitive", features},
             {"leakage", t.leakage},
             {"model_openings", openings},
             {"subproofs", subs}};
    if (t.perturbation)
        doc["perturbation"] = json{{"coordinate", t.perturbation->coordinate}, {"delta", to_decimal(t.perturbation->delta)}};
    return doc;
}

ProofTranscript transcript_from_json(const json& doc) {
    try {
        ProofTranscript t;
        t.version = doc.at("version").get<int>();
        if (t.version != 1) throw SchemaError("unsupported transcript version");
        t.commitment = Commitment::from_json(doc.at("commitment"));
        t.query = read_ints(doc.at("query"));
        t.label = doc.at("label").get<int>();
        t.epsilon = read_int(doc.at("epsilon"));
        t.box_bound = doc.at("box_bound").get<long>();
        for (const auto& f : doc.at("sensitive")) {
            t.spec.indices.push_back(f.at("index").get<int>());
            t.spec.domains.push_back(read_ints(f.at("domain")));
        }
        t.leakage = doc.at("leakage").get<std::vector<int>>();
        for (const auto& o : doc.at("model_openings")) t.model_openings.push_back(Opening::from_json(o));
        for (const auto& s : doc.at("subproofs")) {
            CheckKind kind = check_kind_from(s.at("kind").get<std::string>());
            t.subproofs.push_back(SubProof{body_from(kind, s), s.at("precomputed").get<bool>()});
        }
        if (doc.contains("perturbation")) {
            const auto& p = doc.at("perturbation");
            t.perturbation = PerturbationRecord{p.at("coordinate").get<int>(), read_int(p.at("delta"))};
        }
        return t;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("transcript: ") + e.what());
    }
}

std::string canonical_json(const ProofTranscript& t) { return transcript_to_json(t).dump(); }

Digest transcript_digest(const ProofTranscript& t) { return sha256(canonical_json(t)); }

std::string transcript_to_binary(const ProofTranscript& t) {
    std::string out = "FCT1";
    encode(transcript_to_json(t), out);
    return out;
}

ProofTranscript transcript_from_binary(const std::string& bytes) {
    if (bytes.rfind("FCT1", 0) != 0) throw SchemaError("not a binary transcript");
    std::string body = bytes.substr(4);
    Reader r(body);
    json doc = decode(r);
    if (!r.done()) throw SchemaError("trailing bytes in binary transcript");
    return transcript_from_json(doc);
}

void save_transcript(const ProofTranscript& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    bool binary = path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
    out << (binary ? transcript_to_binary(t) : canonical_json(t) + "\n");
}

ProofTranscript load_transcript(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.rfind("FCT1", 0) == 0) return transcript_from_binary(bytes);
    try {
        return transcript_from_json(json::parse(bytes));
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

} // namespace faircert
