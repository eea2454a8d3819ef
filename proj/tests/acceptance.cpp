// Acceptance suite: one PASS/FAIL line per primary criterion.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "faircert/certifier.hpp"
#include "faircert/log.hpp"
#include "protocol_harness.hpp"

using namespace faircert;
using namespace faircert::test;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kAll{"toy_2_2_2", "german_4_2", "german_2_4", "german_8_2"};

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail, double seconds) {
    if (!ok) ++failures;
    std::printf("%s  %-28s %s  [%.1fs]\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

struct Proof {
    std::string model;
    ProofTranscript t;
    CertificateBundle cert;
};

std::vector<Proof> prove_all(const ProtocolFixture& f, std::size_t n, std::uint64_t seed) {
    Prover prover = make_prover(f, seed);
    std::vector<Proof> out;
    for (std::size_t i = 0; i < n && i < f.queries.size(); ++i) {
        auto r = prover.prove(f.queries[i]);
        out.push_back({f.name, std::move(r.transcript), std::move(r.certificate)});
    }
    return out;
}

/// Point the verifier certifies, as doubles.
Vector certified_point(const ProofTranscript& t) {
    IntVec p = t.query;
    if (t.perturbation) p[static_cast<std::size_t>(t.perturbation->coordinate)] += t.perturbation->delta;
    Vector v(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) v(static_cast<Eigen::Index>(i)) = std::ldexp(p[i].get_d(), -kPointBits);
    return v;
}

void soundness_by_sampling() {
    Timer timer;
    std::mt19937_64 rng(2024);
    std::size_t queries = 0, positive = 0, samples = 0, flips = 0, unverified = 0;
    for (std::string name : {"german_4_2", "german_2_4"}) {
        auto f = load_protocol_fixture(name);
        auto proofs = prove_all(f, 25, 1);
        QuantizedModel qm(f.w, FixedPointEncoding{});
        ModelWeights committed = qm.dequantize();
        SensitiveSpec spec = QuantizedSpec::from(f.spec).dequantize(f.w.n_inputs());
        for (const auto& p : proofs) {
            ReplayBackend replay;
            if (!verify_own_claim(p.t, replay).accepted) {
                ++unverified;
                continue;
            }
            ++queries;
            double r = p.t.epsilon_value() * (1 - 1e-6);
            if (r <= 0) continue;
            ++positive;
            Vector x_ns = spec.project_out(certified_point(p.t));
            for (const auto& s : spec.enumerate())
                for (int k = 0; k < 10000; ++k) {
                    ++samples;
                    Vector z = spec.assemble(ball_sample(rng, x_ns, r), s);
                    if (committed.predict(z) != p.t.label) ++flips;
                }
        }
    }
    std::ostringstream d;
    d << queries << " queries (" << positive << " with eps>0), " << samples << " samples, " << flips
      << " label changes, " << unverified << " unverified";
    report(flips == 0 && unverified == 0 && positive >= 40 && timer.seconds() < 120, "lower-bound soundness", d.str(), timer.seconds());
}

/// Every traversed facet's projection foot lies inside its owner cell.
bool feet_inside(const ModelWeights& w, const SensitiveSpec& spec, const CertificateBundle& cert) {
    Vector x_ns = spec.project_out(cert.query);
    for (const auto& tr : cert.per_s) {
        for (const auto& pop : tr.pops) {
            const auto& owner = tr.visited[static_cast<std::size_t>(pop.cell_index)];
            Polytope cell = sliced_cell(w, spec, tr.s_value, owner.code, cert.label);
            if (!cell.contains(projection_foot(x_ns, pop.hyperplane), 1e-9)) return false;
        }
    }
    return true;
}

void oracle_domination() {
    Timer timer;
    std::mt19937_64 rng(77);
    std::size_t checked = 0, dominated = 0, tight_cases = 0, tight_equal = 0;
    std::string nets;
    for (const auto& name : kAll) {
        auto f = load_protocol_fixture(name);
        int hidden = 0;
        for (const auto& l : f.w.layers()) hidden += static_cast<int>(l.weights.rows());
        hidden -= f.w.n_classes();
        if (hidden > kExhaustiveHiddenLimit) continue;
        nets += (nets.empty() ? "" : ",") + name;
        std::normal_distribution<double> noise(0.0, 0.5);
        for (int i = 0; i < 50; ++i) {
            Vector x = pick(f.queries, rng);
            for (auto& v : x) v += noise(rng);
            auto cert = certify_fairness(f.w, f.spec, x);
            double oracle = exact_epsilon_oracle(f.w, f.spec, cert.query);
            ++checked;
            if (cert.epsilon_lb <= oracle + 1e-9) ++dominated;
            if (feet_inside(f.w, f.spec, cert)) {
                ++tight_cases;
                if (std::abs(cert.epsilon_lb - oracle) <= 1e-9) ++tight_equal;
            }
        }
    }
    std::ostringstream d;
    d << nets << ": " << dominated << "/" << checked << " dominated; equal in " << tight_equal << "/" << tight_cases
      << " cases with every foot inside its facet";
    report(dominated == checked && tight_equal == tight_cases && checked >= 50, "oracle domination", d.str(),
           timer.seconds());
}

struct Agreement {
    std::size_t transcripts = 0;
    std::size_t disagreements = 0;
};

Agreement agreement;
std::map<std::string, std::map<CheckKind, std::size_t>> cost_by_model;

void completeness(std::vector<Proof>& pool) {
    Timer timer;
    const std::map<std::string, std::size_t> per_model{
        {"toy_2_2_2", 30}, {"german_4_2", 30}, {"german_2_4", 30}, {"german_8_2", 15}};
    std::size_t total = 0, accepted = 0;
    std::string first_failure;
    for (const auto& name : kAll) {
        auto proofs = prove_all(load_protocol_fixture(name), per_model.at(name), 1);
        for (auto& p : proofs) {
            ReplayBackend replay;
            ConstraintBackend constraints;
            auto a = verify_own_claim(p.t, replay);
            auto b = verify_own_claim(p.t, constraints);
            ++total;
            ++agreement.transcripts;
            if (a.accepted != b.accepted) ++agreement.disagreements;
            if (a.accepted && b.accepted) {
                ++accepted;
            } else if (first_failure.empty()) {
                first_failure = " first failure " + name + ": " + (a.accepted ? b.message() : a.message());
            }
            for (const auto& [k, n] : constraints.constraint_totals()) cost_by_model[name][k] += n;
            pool.push_back(std::move(p));
        }
    }
    std::ostringstream d;
    d << accepted << "/" << total << " accepted by both backends" << first_failure;
    report(accepted == total && total >= 100, "protocol completeness", d.str(), timer.seconds());
}

void mutation_soundness(const std::vector<Proof>& pool) {
    Timer timer;
    std::mt19937_64 rng(31337);
    // Small fixtures keep the constraint backend affordable.
    std::vector<const Proof*> honest;
    for (const auto& p : pool)
        if (p.model != "german_8_2") honest.push_back(&p);
    std::ostringstream d;
    bool ok = true;
    std::size_t all_trials = 0;
    for (auto m : all_mutations()) {
        std::size_t trials = 0, rejected = 0, attributed = 0, attempts = 0;
        while (trials < 100 && attempts < 5000) {
            ++attempts;
            const Proof* p = pick(honest, rng);
            auto t = mutate(p->t, m, rng);
            if (!t) continue;
            ++trials;
            ReplayBackend replay;
            ConstraintBackend constraints;
            auto a = verify_own_claim(*t, replay);
            auto b = verify_own_claim(*t, constraints);
            ++agreement.transcripts;
            if (a.accepted != b.accepted) ++agreement.disagreements;
            if (!a.accepted && !b.accepted) ++rejected;
            if (!a.accepted && a.kind == mutation_kind(m)) ++attributed;
            if (!a.accepted && a.kind != mutation_kind(m))
                logger().info("mutation {} rejected earlier: {}", mutation_name(m), a.message());
        }
        all_trials += trials;
        ok = ok && trials >= 100 && rejected == trials && attributed * 100 >= trials * 95;
        d << mutation_name(m) << " " << rejected << "/" << trials << " (" << attributed << " named)  ";
    }
    report(ok, "mutation soundness", d.str() + "total " + std::to_string(all_trials), timer.seconds());
}

void commitment_binding(const std::vector<Proof>& pool) {
    Timer timer;
    std::mt19937_64 rng(99);
    std::size_t detected = 0, roots_moved = 0, trials = 0;
    std::map<std::string, ProtocolFixture> fixtures;
    for (int k = 0; k < 100; ++k) {
        const Proof& p = pick(pool, rng);
        auto t = p.t;
        std::vector<std::size_t> weights;
        for (std::size_t i = 0; i < t.model_openings.size(); ++i)
            if (t.model_openings[i].label.rfind("w/", 0) == 0 || t.model_openings[i].label.rfind("b/", 0) == 0)
                weights.push_back(i);
        auto i = pick(weights, rng);
        auto& o = t.model_openings[i];
        Int delta = std::uniform_int_distribution<int>(0, 1)(rng) ? 1 : -1;
        o.content = to_decimal(from_decimal(o.content) + delta);
        ++trials;
        ReplayBackend replay;
        auto v = verify_own_claim(t, replay);
        if (!verify_opening(t.commitment, o) && !v.accepted && v.kind == CheckKind::Opening &&
            v.index == static_cast<std::ptrdiff_t>(i))
            ++detected;

        // The same single-entry change, committed afresh, moves the root.
        if (!fixtures.count(p.model)) fixtures.emplace(p.model, load_protocol_fixture(p.model));
        QuantizedModel q(fixtures.at(p.model).w, FixedPointEncoding{});
        auto base = CommittedModel(q, {}, randomness_from_seed(5), FixedPointEncoding{}).commitment().root;
        int layer = 0, row = 0, col = -1;
        if (o.label[0] == 'w') std::sscanf(o.label.c_str(), "w/%d/%d/%d", &layer, &row, &col);
        else std::sscanf(o.label.c_str(), "b/%d/%d", &layer, &row);
        auto L = static_cast<std::size_t>(layer), R = static_cast<std::size_t>(row);
        if (col >= 0) q.weights()[L][R][static_cast<std::size_t>(col)] += delta;
        else q.biases()[L][R] += delta;
        if (CommittedModel(q, {}, randomness_from_seed(5), FixedPointEncoding{}).commitment().root != base)
            ++roots_moved;
    }
    std::ostringstream d;
    d << detected << "/" << trials << " opening-path failures, " << roots_moved << "/" << trials << " roots moved";
    report(detected == trials && roots_moved == trials && trials >= 100, "commitment binding", d.str(),
           timer.seconds());
}

void backend_agreement() {
    Timer timer;
    auto a = golden_constraint_totals();
    auto b = golden_constraint_totals();
    bool pinned = true;
    std::ostringstream counts;
    for (const auto& [k, golden] : kGoldenTotals) {
        std::size_t n = a.count(k) ? a.at(k) : 0;
        counts << to_string(k) << "=" << n << " ";
        pinned = pinned && n == golden;
    }
    IntRow row{{Int(3), Int(4)}, Int(10)};
    auto [cs, w] = compile_check(DistanceInput{row, {Int(0), Int(0)}, Int(4) * pow2(16)});
    bool distance_ok = cs.constraints.size() == kGoldenDistance2d && evaluate_constraints(cs, w).satisfied;
    std::ostringstream d;
    d << agreement.disagreements << " disagreements over " << agreement.transcripts << " transcripts; counts "
      << (a == b ? "stable" : "unstable") << (pinned ? ", match golden" : ", differ from golden") << " ("
      << counts.str() << "); 2-D Distance=" << cs.constraints.size();
    report(agreement.disagreements == 0 && agreement.transcripts > 0 && a == b && pinned && distance_ok,
           "backend agreement", d.str(), timer.seconds());
}

void cost_shape() {
    Timer timer;
    const std::vector<CheckKind> traversal{CheckKind::Polytope, CheckKind::Distance, CheckKind::Order,
                                           CheckKind::Boundary, CheckKind::Neighbor};
    bool ok = true;
    std::ostringstream d;
    for (const auto& [name, totals] : cost_by_model) {
        CheckKind top = CheckKind::Boundary;
        for (auto k : traversal)
            if (totals.count(k) && totals.at(k) > (totals.count(top) ? totals.at(top) : 0)) top = k;
        ok = ok && top == CheckKind::Boundary;
        d << name << ":" << to_string(top);
        if (top != CheckKind::Boundary)
            d << "(" << totals.at(top) << " vs Boundary " << (totals.count(CheckKind::Boundary) ? totals.at(CheckKind::Boundary) : 0)
              << ")";
        d << " ";
    }
    report(ok, "boundary costliest", d.str(), timer.seconds());
}

void determinism() {
    Timer timer;
    auto dir = fs::temp_directory_path() / "faircert_acceptance";
    fs::create_directories(dir);
    auto run = [&](const std::string& tag) {
        std::string bytes;
        for (std::string name : {"german_4_2", "german_2_4"}) {
            auto f = load_protocol_fixture(name);
            for (const auto& p : prove_all(f, 5, 42)) {
                auto tb = (dir / (tag + ".bin")).string();
                auto tj = (dir / (tag + ".json")).string();
                save_transcript(p.t, tb);
                save_transcript(p.t, tj);
                std::ofstream(dir / (tag + ".cert.json")) << certificate_to_json(p.cert).dump(1);
                for (const auto& file : {tb, tj, (dir / (tag + ".cert.json")).string()}) {
                    std::ifstream in(file, std::ios::binary);
                    bytes += std::string(std::istreambuf_iterator<char>(in), {});
                }
            }
        }
        return bytes;
    };
    auto a = run("a");
    auto b = run("b");
    fs::remove_all(dir);
    report(a == b && !a.empty(), "determinism",
           std::to_string(a.size()) + " bytes per run, " + (a == b ? "identical" : "different"), timer.seconds());
}

} // namespace

int main() {
    logger().set_level(spdlog::level::err);
    std::vector<Proof> pool;
    soundness_by_sampling();
    oracle_domination();
    completeness(pool);
    mutation_soundness(pool);
    commitment_binding(pool);
    backend_agreement();
    cost_shape();
    determinism();
    std::printf("%d failing\n", failures);
    return failures == 0 ? 0 : 1;
}
