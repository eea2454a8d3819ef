#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "test_helpers.hpp"

namespace fs = std::filesystem;
using faircert::test::fixture;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run cli(const std::string& args) {
    std::string cmd = std::string(FAIRCERT_CLI) + " " + args + " 2>&1";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (auto n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

/// key=value pairs of a one-line summary.
std::map<std::string, std::string> fields(const std::string& line) {
    std::map<std::string, std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq != std::string::npos) out[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return out;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("faircert_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

const std::string kModel = fixture("german_2_4.json");
const std::string kSpec = fixture("german_2_4.sensitive.json");
const std::string kQueries = fixture("german_2_4.queries.json");

} // namespace

TEST_F(Cli, CommitRootIsStableAndSeedDependent) {
    auto a = cli("commit --model " + kModel + " --seed 5 --out " + path("a.json"));
    auto b = cli("commit --model " + kModel + " --seed 5 --out " + path("b.json"));
    auto c = cli("commit --model " + kModel + " --seed 6 --out " + path("c.json"));
    ASSERT_EQ(a.code, 0) << a.out;
    EXPECT_EQ(fields(a.out)["root"], fields(b.out)["root"]);
    EXPECT_NE(fields(a.out)["root"], fields(c.out)["root"]);
}

TEST_F(Cli, CorruptedJsonFails) {
    {
        std::ofstream(path("bad.json")) << "{\"layers\": [";
    }
    auto r = cli("commit --model " + path("bad.json") + " --seed 1 --out " + path("c.json"));
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.out.find("error"), std::string::npos) << r.out;
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(cli("").code, 2);
    EXPECT_EQ(cli("verify --commitment x").code, 2);
    EXPECT_EQ(cli("certify --model " + kModel + " --spec " + kSpec + " --query 1,2,x").code, 2);
}

TEST_F(Cli, CertifyRejectsWrongDimension) {
    auto r = cli("certify --model " + kModel + " --spec " + kSpec + " --query 0.1,0.2");
    EXPECT_NE(r.code, 0);
}

TEST_F(Cli, ProveVerifyRoundTrip) {
    ASSERT_EQ(cli("commit --model " + kModel + " --seed 3 --out " + path("com.json") + " --spec " + kSpec +
                  " --queries " + kQueries)
                  .code,
              0);
    auto p = cli("prove --model " + kModel + " --spec " + kSpec + " --query " + kQueries + " --index 2 --commitment " +
                 path("com.json") + " --out " + path("t.bin"));
    ASSERT_EQ(p.code, 0) << p.out;
    auto f = fields(p.out);
    EXPECT_EQ(std::stoull(f["bytes"]), fs::file_size(path("t.bin")));

    auto c = cli("certify --model " + kModel + " --spec " + kSpec + " --query " + kQueries + " --index 2");
    ASSERT_EQ(c.code, 0) << c.out;
    EXPECT_EQ(fields(c.out)["pops"], f["pops"]);
    EXPECT_EQ(fields(c.out)["label"], f["label"]);

    auto i = cli("inspect " + path("t.bin"));
    ASSERT_EQ(i.code, 0) << i.out;
    EXPECT_EQ(fields(i.out)["pops"], f["pops"]);

    const std::string claim = " --query " + kQueries + " --index 2 --label " + f["label"] + " --epsilon " +
                              f["epsilon"] + " --transcript " + path("t.bin");
    for (std::string backend : {"replay", "constraints"}) {
        auto v = cli("verify --commitment " + path("com.json") + claim + " --backend " + backend);
        EXPECT_EQ(v.code, 0) << v.out;
        EXPECT_EQ(v.out, "accept\n");
    }

    ASSERT_EQ(cli("commit --model " + kModel + " --seed 4 --out " + path("other.json")).code, 0);
    auto w = cli("verify --commitment " + path("other.json") + claim);
    EXPECT_EQ(w.code, 1);
    EXPECT_NE(w.out.find("reject Opening"), std::string::npos) << w.out;
}

TEST_F(Cli, MutatedTranscriptNamesSubproof) {
    ASSERT_EQ(cli("commit --model " + kModel + " --seed 3 --out " + path("com.json")).code, 0);
    auto p = cli("prove --model " + kModel + " --spec " + kSpec + " --query " + kQueries + " --index 0 --commitment " +
                 path("com.json") + " --out " + path("t.json"));
    ASSERT_EQ(p.code, 0) << p.out;
    auto f = fields(p.out);
    auto doc = nlohmann::json::parse(std::ifstream(path("t.json")));
    bool done = false;
    for (auto& sp : doc.at("subproofs")) {
        if (sp.at("kind") == "Distance" && !sp.at("pruned").get<bool>()) {
            auto d = sp.at("d_sq");
            sp["d_sq"] = d.is_string() ? nlohmann::json(d.get<std::string>() + "1") : nlohmann::json(d.get<long>() + 1);
            done = true;
            break;
        }
    }
    ASSERT_TRUE(done) << doc.dump().substr(0, 400);
    std::ofstream(path("m.json")) << doc.dump();
    auto v = cli("verify --commitment " + path("com.json") + " --query " + kQueries + " --index 0 --label " +
                 f["label"] + " --epsilon " + f["epsilon"] + " --transcript " + path("m.json"));
    EXPECT_EQ(v.code, 1);
    EXPECT_NE(v.out.find("reject Distance#"), std::string::npos) << v.out;
}

TEST_F(Cli, BenchWritesOneRowPerQuery) {
    auto a = cli("bench --models " + fixture("toy_2_2_2.json") + " " + kModel + " --limit 3 --out " + path("a.csv"));
    auto b = cli("bench --models " + fixture("toy_2_2_2.json") + " " + kModel + " --limit 3 --out " + path("b.csv"));
    ASSERT_EQ(a.code, 0) << a.out;
    ASSERT_EQ(b.code, 0) << b.out;
    auto pops = [](const std::string& file) {
        std::ifstream in(file);
        std::string line;
        std::vector<std::string> out;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            out.push_back(cells.at(7));
        }
        return out;
    };
    auto pa = pops(path("a.csv"));
    EXPECT_EQ(pa.size(), 6u);
    EXPECT_EQ(pa, pops(path("b.csv")));
    EXPECT_NE(a.out.find("costliest="), std::string::npos);
}
