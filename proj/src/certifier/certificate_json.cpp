#include "faircert/certifier.hpp"
#include "faircert/error.hpp"

namespace faircert {

namespace {

using nlohmann::json;

json vec(const Vector& v) { return json(std::vector<double>(v.begin(), v.end())); }

Vector read_vec(const json& j) {
    auto xs = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

BranchOutcome outcome_from(const std::string& s) {
    if (s == "boundary") return BranchOutcome::boundary;
    if (s == "box_limited") return BranchOutcome::box_limited;
    if (s == "label_flip") return BranchOutcome::label_flip;
    throw SchemaError("unknown branch outcome '" + s + "'");
}

json pop_json(const TraversalPop& p) {
    json j{{"facet_id", p.facet_id},     {"cell", p.cell_index},       {"row", p.tight_row},
           {"normal", vec(p.hyperplane.a)}, {"offset", p.hyperplane.b}, {"distance", p.distance},
           {"boundary", p.is_boundary},   {"rep_point", vec(p.rep_point)}, {"expanded", p.expanded_cell}};
    if (p.neighbor_code) j["neighbor"] = p.neighbor_code->to_string();
    return j;
}

TraversalPop pop_from(const json& j) {
    TraversalPop p;
    p.facet_id = j.at("facet_id").get<std::string>();
    p.cell_index = j.at("cell").get<int>();
    p.tight_row = j.at("row").get<int>();
    p.hyperplane = Hyperplane{read_vec(j.at("normal")), j.at("offset").get<double>()};
    p.distance = j.at("distance").get<double>();
    p.is_boundary = j.at("boundary").get<bool>();
    p.rep_point = read_vec(j.at("rep_point"));
    p.expanded_cell = j.at("expanded").get<int>();
    if (j.contains("neighbor")) p.neighbor_code = ActivationCode::from_string(j.at("neighbor").get<std::string>());
    return p;
}

} // namespace

nlohmann::json certificate_to_json(const CertificateBundle& cert) {
    json branches = json::array();
    for (const auto& t : cert.per_s) {
        json pops = json::array();
        for (const auto& p : t.pops) pops.push_back(pop_json(p));
        json cells = json::array();
        for (const auto& c : t.visited) cells.push_back(c.code.to_string());
        branches.push_back(json{{"s", t.s_value},
                                {"start_code", t.start_code.to_string()},
                                {"slice_label", t.slice_label},
                                {"epsilon", t.epsilon_s},
                                {"box_distance", t.box_distance},
                                {"outcome", to_string(t.outcome)},
                                {"monotone", t.monotone},
                                {"cells", cells},
                                {"pops", pops}});
    }
    json doc{{"v", 1},
             {"query", vec(cert.query)},
             {"label", cert.label},
             {"epsilon_lb", cert.epsilon_lb},
             {"epsilon_list", cert.epsilon_list},
             {"branches", branches}};
    if (cert.perturbation)
        doc["perturbation"] = json{{"coordinate", cert.perturbation->coordinate},
                                   {"delta", cert.perturbation->delta},
                                   {"original", vec(cert.perturbation->original)}};
    return doc;
}

CertificateBundle certificate_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("v").get<int>() != 1) throw SchemaError("unsupported certificate version");
        CertificateBundle cert;
        cert.query = read_vec(doc.at("query"));
        cert.label = doc.at("label").get<int>();
        cert.epsilon_lb = doc.at("epsilon_lb").get<double>();
        cert.epsilon_list = doc.at("epsilon_list").get<std::vector<double>>();
        if (doc.contains("perturbation")) {
            const auto& p = doc.at("perturbation");
            cert.perturbation = Perturbation{p.at("coordinate").get<int>(), p.at("delta").get<double>(),
                                             read_vec(p.at("original"))};
        }
        for (const auto& b : doc.at("branches")) {
            TraversalTrace t;
            t.s_value = b.at("s").get<std::vector<double>>();
            t.start_code = ActivationCode::from_string(b.at("start_code").get<std::string>());
            t.label = cert.label;
            t.slice_label = b.at("slice_label").get<int>();
            t.epsilon_s = b.at("epsilon").get<double>();
            t.box_distance = b.at("box_distance").get<double>();
            t.outcome = outcome_from(b.at("outcome").get<std::string>());
            t.monotone = b.at("monotone").get<bool>();
            for (const auto& c : b.at("cells")) {
                VisitedCell vc;
                vc.code = ActivationCode::from_string(c.get<std::string>());
                t.visited.push_back(std::move(vc));
            }
            for (const auto& p : b.at("pops")) t.pops.push_back(pop_from(p));
            cert.per_s.push_back(std::move(t));
        }
        return cert;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("certificate: ") + e.what());
    }
}

} // namespace faircert
