// faircert: commit, certify, prove, verify, inspect, bench.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>
#include <atomic>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "faircert/certifier.hpp"
#include "faircert/error.hpp"
#include "faircert/log.hpp"
#include "faircert/protocol/constraints.hpp"
#include "faircert/protocol/prover.hpp"
#include "faircert/protocol/verifier.hpp"

namespace fs = std::filesystem;
using namespace faircert;
using nlohmann::json;

namespace {

constexpr int kExitReject = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

Vector to_vector(const std::vector<double>& xs) {
    return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

/// All queries in a file: a bare array, an array of arrays, or {"queries": [...]}.
std::vector<Vector> load_queries(const std::string& path) {
    json doc = read_json(path);
    try {
        if (doc.is_object()) doc = doc.at("queries");
        if (!doc.is_array() || doc.empty()) throw SchemaError(path + ": no queries");
        std::vector<Vector> out;
        if (doc.front().is_number()) {
            out.push_back(to_vector(doc.get<std::vector<double>>()));
        } else {
            for (const auto& q : doc) out.push_back(to_vector(q.get<std::vector<double>>()));
        }
        return out;
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

/// Inline "a,b,c" or a path, optionally indexed.
Vector parse_query(const std::string& arg, std::size_t index) {
    if (!fs::exists(arg)) {
        std::vector<double> xs;
        std::stringstream ss(arg);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                xs.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw UsageError("query '" + arg + "' is neither a file nor a comma-separated vector");
            }
        }
        return to_vector(xs);
    }
    auto qs = load_queries(arg);
    if (index >= qs.size()) throw UsageError("query index out of range");
    return qs[index];
}

std::string join(const std::vector<int>& xs, const char* sep = ",") {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + std::to_string(xs[i]);
    return out;
}

std::string fmt_real(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string secret_path_for(const std::string& commitment, const std::string& given) {
    return given.empty() ? commitment + ".secret.json" : given;
}

Prover make_prover(const std::string& model_path, const std::string& spec_path, const CommitSecret& secret,
                   long box_bound, int threads) {
    auto w = ModelWeights::load(model_path);
    auto spec = SensitiveSpec::load(spec_path, w.n_inputs());
    return Prover(QuantizedModel(w, FixedPointEncoding{}), QuantizedSpec::from(spec), secret,
                  ProveOptions{box_bound, threads});
}

struct Common {
    long box_bound = 100;
    int threads = 1;
};

int cmd_commit(const std::string& model, std::uint64_t seed, const std::string& out, const std::string& secret_arg,
               const std::string& spec, const std::string& queries, const Common& c) {
    CommitSecret secret{randomness_from_seed(seed), {}};
    Commitment com;
    std::size_t table = 0;
    if (!spec.empty() && !queries.empty()) {
        Prover prover = make_prover(model, spec, secret, c.box_bound, c.threads);
        for (const auto& q : load_queries(queries)) prover.warm_up(q);
        secret = prover.secret();
        com = prover.commitment();
    } else if (!spec.empty() || !queries.empty()) {
        throw UsageError("warm-up needs both --spec and --queries");
    } else {
        com = commit_model(ModelWeights::load(model), {}, secret.randomness).commitment();
    }
    table = secret.table.size();
    com.save(out);
    secret.save(secret_path_for(out, secret_arg));
    std::cout << "root=" << to_hex(com.root) << " leaves=" << com.leaf_count << " table=" << table << "\n";
    return 0;
}

int cmd_certify(const std::string& model, const std::string& spec_path, const std::string& query, std::size_t index,
                const std::string& out, const Common& c) {
    auto w = ModelWeights::load(model);
    auto spec = SensitiveSpec::load(spec_path, w.n_inputs());
    CertifyOptions opt;
    opt.box_bound = static_cast<double>(c.box_bound);
    opt.threads = c.threads;
    auto cert = certify_fairness(w, spec, parse_query(query, index), opt);
    if (!out.empty()) write_file(out, certificate_to_json(cert).dump(1) + "\n");
    std::vector<int> pops;
    std::string outcomes;
    for (const auto& t : cert.per_s) {
        pops.push_back(static_cast<int>(t.pop_count()));
        outcomes += (outcomes.empty() ? "" : ",") + to_string(t.outcome);
    }
    std::cout << "label=" << cert.label << " epsilon_lb=" << fmt_real(cert.epsilon_lb) << " pops=" << join(pops)
              << " outcomes=" << outcomes << " perturbed=" << (cert.perturbation ? 1 : 0) << "\n";
    return 0;
}

int cmd_prove(const std::string& model, const std::string& spec, const std::string& query, std::size_t index,
              const std::string& commitment, const std::string& secret_arg, const std::string& out, const Common& c) {
    const std::string secret_path = secret_path_for(commitment, secret_arg);
    Prover prover = make_prover(model, spec, CommitSecret::load(secret_path), c.box_bound, c.threads);
    prover.expect_commitment(Commitment::load(commitment));
    auto result = prover.prove(parse_query(query, index));
    if (result.commitment_updated) {
        // The transcript opens new table entries; publish the grown commitment.
        prover.commitment().save(commitment);
        prover.secret().save(secret_path);
    }
    save_transcript(result.transcript, out);
    const auto& t = result.transcript;
    std::cout << "label=" << t.label << " epsilon=" << fmt_real(t.epsilon_value()) << " pops=" << join(t.leakage)
              << " subproofs=" << t.subproofs.size() << " bytes=" << fs::file_size(out)
              << " commitment_updated=" << (result.commitment_updated ? 1 : 0)
              << " precomputed=" << result.cache_hits << "\n";
    return 0;
}

std::unique_ptr<CheckBackend> make_backend(const std::string& name) {
    if (name == "replay") return std::make_unique<ReplayBackend>();
    if (name == "constraints") return std::make_unique<ConstraintBackend>();
    throw UsageError("unknown backend '" + name + "'");
}

int cmd_verify(const std::string& commitment, const std::string& query, std::size_t index, int label, double epsilon,
               const std::string& transcript, const std::string& backend_name) {
    auto backend = make_backend(backend_name);
    auto verdict = verify_certificate(Commitment::load(commitment), parse_query(query, index), label, epsilon,
                                      load_transcript(transcript), *backend);
    std::cout << verdict.message() << "\n";
    return verdict.accepted ? 0 : kExitReject;
}

int cmd_inspect(const std::string& path) {
    json doc;
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0) {
        doc = transcript_to_json(load_transcript(path));
    } else {
        doc = read_json(path);
    }
    if (doc.contains("scheme_id")) {
        auto com = Commitment::from_json(doc);
        std::cout << "kind=commitment scheme=" << com.scheme_id << " root=" << to_hex(com.root)
                  << " leaves=" << com.leaf_count << "\n";
    } else if (doc.contains("subproofs")) {
        auto t = transcript_from_json(doc);
        std::map<CheckKind, int> counts;
        std::size_t precomputed = 0;
        for (const auto& sp : t.subproofs) {
            ++counts[sp.kind()];
            precomputed += sp.precomputed ? 1 : 0;
        }
        std::cout << "kind=transcript label=" << t.label << " epsilon=" << fmt_real(t.epsilon_value())
                  << " pops=" << join(t.leakage) << " digest=" << to_hex(transcript_digest(t));
        for (const auto& [k, n] : counts) std::cout << " " << to_string(k) << "=" << n;
        std::cout << " precomputed=" << precomputed << " openings=" << t.model_openings.size() << "\n";
    } else if (doc.contains("branches")) {
        auto cert = certificate_from_json(doc);
        std::vector<int> pops;
        for (const auto& b : cert.per_s) pops.push_back(static_cast<int>(b.pop_count()));
        std::cout << "kind=certificate label=" << cert.label << " epsilon_lb=" << fmt_real(cert.epsilon_lb)
                  << " pops=" << join(pops) << "\n";
    } else {
        throw SchemaError(path + ": not a commitment, certificate or transcript");
    }
    return 0;
}

struct BenchRow {
    std::string model;
    std::size_t query = 0;
    ProveOutput proof;
    double prove_ms = 0.0;
    double verify_ms = 0.0;
    bool accepted = false;
    std::size_t bytes = 0;
    std::map<CheckKind, std::size_t> constraints;
};

const std::vector<CheckKind> kBenchKinds{CheckKind::Polytope, CheckKind::Distance, CheckKind::Order,
                                         CheckKind::Boundary, CheckKind::Neighbor, CheckKind::Min,
                                         CheckKind::Inference};

int cmd_bench(const std::vector<std::string>& models, std::size_t limit, std::uint64_t seed, const std::string& out,
              const Common& c) {
    std::ofstream csv(out);
    if (!csv) throw Error("cannot write " + out);
    csv << "model,query,label,epsilon,accepted,prove_ms,verify_ms,pops,subproofs,transcript_bytes";
    for (auto k : kBenchKinds) csv << ",c_" << to_string(k);
    csv << "\n";
    bool all_ok = true;
    for (const auto& model : models) {
        std::string stem = model.substr(0, model.size() - (model.size() > 5 && model.ends_with(".json") ? 5 : 0));
        auto queries = load_queries(stem + ".queries.json");
        if (limit > 0 && queries.size() > limit) queries.resize(limit);
        Prover prover = make_prover(model, stem + ".sensitive.json", CommitSecret{randomness_from_seed(seed), {}},
                                    c.box_bound, 1);
        std::vector<BenchRow> rows(queries.size());
        for (std::size_t i = 0; i < queries.size(); ++i) {
            auto t0 = std::chrono::steady_clock::now();
            rows[i].proof = prover.prove(queries[i]);
            rows[i].prove_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        }
        // Verification is pure; spread it over threads.
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next++; i < rows.size(); i = next++) {
                auto& r = rows[i];
                const auto& t = r.proof.transcript;
                ConstraintBackend backend;
                auto t0 = std::chrono::steady_clock::now();
                r.accepted = verify_certificate(t.commitment, t.query, t.label, t.epsilon, t, backend).accepted;
                r.verify_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                r.constraints = backend.constraint_totals();
                r.bytes = transcript_to_binary(t).size();
            }
        };
        std::vector<std::thread> pool;
        for (int k = 0; k < std::max(1, c.threads); ++k) pool.emplace_back(work);
        for (auto& th : pool) th.join();

        std::map<CheckKind, std::size_t> totals;
        const std::string name = fs::path(stem).filename().string();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            const auto& t = r.proof.transcript;
            all_ok = all_ok && r.accepted;
            csv << name << ',' << i << ',' << t.label << ',' << fmt_real(t.epsilon_value()) << ',' << (r.accepted ? 1 : 0)
                << ',' << r.prove_ms << ',' << r.verify_ms << ',' << join(t.leakage, ";") << ',' << t.subproofs.size() << ','
                << r.bytes;
            for (auto k : kBenchKinds) {
                std::size_t n = r.constraints.count(k) ? r.constraints.at(k) : 0;
                totals[k] += n;
                csv << ',' << n;
            }
            csv << "\n";
        }
        CheckKind top = CheckKind::Distance;
        for (auto k : {CheckKind::Polytope, CheckKind::Distance, CheckKind::Order, CheckKind::Boundary, CheckKind::Neighbor})
            if (totals[k] > totals[top]) top = k;
        std::cout << "model=" << name << " queries=" << rows.size();
        for (auto k : kBenchKinds) std::cout << " " << to_string(k) << "=" << totals[k];
        std::cout << " costliest=" << to_string(top) << "\n";
    }
    return all_ok ? 0 : kExitReject;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local individual-fairness certificates with commit-prove-verify"};
    app.require_subcommand(1);
    Common common;

    std::string model, spec, query, out, commitment, secret, transcript, queries, backend = "replay";
    std::size_t index = 0;
    std::uint64_t seed = 0;
    int label = 0;
    double epsilon = 0.0;
    std::vector<std::string> models;
    std::size_t limit = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--box-bound", common.box_bound, "Half-width of the bounding box")->check(CLI::PositiveNumber);
        sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
    };

    auto* commit = app.add_subcommand("commit", "Quantize and commit to a model");
    commit->add_option("--model", model, "Model JSON")->required();
    commit->add_option("--seed", seed, "Randomness seed")->required();
    commit->add_option("--out", out, "Commitment JSON to write")->required();
    commit->add_option("--secret", secret, "Secret file (default <out>.secret.json)");
    commit->add_option("--spec", spec, "Sensitive spec for table warm-up");
    commit->add_option("--queries", queries, "Queries for table warm-up");
    add_common(commit);

    auto* certify = app.add_subcommand("certify", "Compute a certificate without a proof");
    certify->add_option("--model", model)->required();
    certify->add_option("--spec", spec)->required();
    certify->add_option("--query", query, "Query file or inline a,b,c")->required();
    certify->add_option("--index", index, "Query index within a file");
    certify->add_option("--out", out, "Certificate JSON to write");
    add_common(certify);

    auto* prove = app.add_subcommand("prove", "Certify and emit a proof transcript");
    prove->add_option("--model", model)->required();
    prove->add_option("--spec", spec)->required();
    prove->add_option("--query", query)->required();
    prove->add_option("--index", index);
    prove->add_option("--commitment", commitment)->required();
    prove->add_option("--secret", secret, "Secret file (default <commitment>.secret.json)");
    prove->add_option("--out", out, "Transcript (.json or .bin)")->required();
    add_common(prove);

    auto* verify = app.add_subcommand("verify", "Check a transcript against a commitment and a claim");
    verify->add_option("--commitment", commitment)->required();
    verify->add_option("--query", query)->required();
    verify->add_option("--index", index);
    verify->add_option("--label", label)->required();
    verify->add_option("--epsilon", epsilon)->required();
    verify->add_option("--transcript", transcript)->required();
    verify->add_option("--backend", backend, "replay or constraints");

    auto* inspect = app.add_subcommand("inspect", "Summarize a commitment, certificate or transcript");
    inspect->add_option("path", out)->required();

    auto* bench = app.add_subcommand("bench", "Prove and verify query sets; write a CSV");
    bench->add_option("--models", models, "Model JSON files; <stem>.sensitive.json and <stem>.queries.json beside them")
        ->required();
    bench->add_option("--limit", limit, "Queries per model (0 = all)");
    bench->add_option("--seed", seed);
    bench->add_option("--out", out, "CSV path")->required();
    add_common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        logger();
        if (*commit) return cmd_commit(model, seed, out, secret, spec, queries, common);
        if (*certify) return cmd_certify(model, spec, query, index, out, common);
        if (*prove) return cmd_prove(model, spec, query, index, commitment, secret, out, common);
        if (*verify) return cmd_verify(commitment, query, index, label, epsilon, transcript, backend);
        if (*inspect) return cmd_inspect(out);
        if (*bench) return cmd_bench(models, limit, seed, out, common);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
