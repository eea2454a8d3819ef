#include <random>

#include <gtest/gtest.h>

#include "faircert/error.hpp"
#include "faircert/geometry.hpp"
#include "faircert/lp.hpp"
#include "test_helpers.hpp"

using namespace faircert;
using faircert::test::fixture;

namespace {

ModelWeights identity_net() {
    Layer hidden{Matrix::Identity(2, 2), Vector::Zero(2)};
    Layer out{Matrix::Identity(2, 2), Vector::Zero(2)};
    return ModelWeights({hidden, out});
}

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

// Plain forward pass written independently of the library's layer loop.
std::vector<int> forward_code(const ModelWeights& w, const Vector& x) {
    std::vector<int> code;
    Vector a = x;
    for (int l = 0; l + 1 < w.n_layers(); ++l) {
        const auto& layer = w.layers()[static_cast<std::size_t>(l)];
        Vector z(layer.weights.rows());
        for (Eigen::Index r = 0; r < z.size(); ++r) {
            double acc = layer.bias(r);
            for (Eigen::Index c = 0; c < a.size(); ++c) acc += layer.weights(r, c) * a(c);
            z(r) = acc;
            code.push_back(acc > 0 ? 1 : 0);
        }
        a = z.cwiseMax(0.0);
    }
    return code;
}

} // namespace

TEST(ActivationCode, IdentityNet) {
    auto w = identity_net();
    EXPECT_EQ(activation_code(w, vec({1.0, -1.0})).to_string(), "10");
    EXPECT_EQ(activation_code(w, vec({-2.0, -3.0})).to_string(), "00");
    EXPECT_EQ(activation_code(w, vec({0.0, 1.0})).to_string(), "01");
}

TEST(ActivationCode, ToyFixtureMatchesIndependentForwardPass) {
    auto w = ModelWeights::load(fixture("toy_2_2_2.json"));
    auto code = activation_code(w, vec({0.3, -0.7}));
    auto expected = forward_code(w, vec({0.3, -0.7}));
    ASSERT_EQ(code.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(code[i], expected[i] == 1);
}

TEST(ActivationCode, RejectsWrongDimension) {
    auto w = identity_net();
    EXPECT_THROW(activation_code(w, vec({1.0, 2.0, 3.0})), DimensionError);
}

TEST(ActivationCode, HammingAndFlip) {
    ActivationCode a = ActivationCode::from_string("1010");
    EXPECT_EQ(hamming(a, a.flipped(2)), 1u);
    EXPECT_EQ(a.flipped(0).to_string(), "0010");
}

TEST(Polytope, InteriorSamplesReproduceCode) {
    auto w = ModelWeights::load(fixture("toy_2_2_2.json"));
    auto code = activation_code(w, vec({0.3, -0.7}));
    auto poly = polytope_from_code(w, code);
    auto ball = representative_point(poly, 3.0);
    ASSERT_TRUE(ball);
    ASSERT_GT(ball->radius, 0.0);
    std::mt19937_64 rng(1);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        Vector x = faircert::test::ball_sample(rng, ball->center, ball->radius * 0.999);
        EXPECT_EQ(activation_code(w, x), code);
        ++checked;
    }
    EXPECT_EQ(checked, 1000);
}

TEST(Polytope, MembershipMatchesCodeProperty) {
    for (const char* name : {"toy_2_2_2.json", "german_4_2.json", "german_8_2.json"}) {
        auto w = ModelWeights::load(fixture(name));
        std::mt19937_64 rng(5);
        for (int i = 0; i < 200; ++i) {
            Vector x = faircert::test::uniform_vec(rng, w.n_inputs(), -2, 2);
            Vector y = faircert::test::uniform_vec(rng, w.n_inputs(), -2, 2);
            auto poly = polytope_from_code(w, activation_code(w, x));
            EXPECT_TRUE(poly.contains(x));
            bool same = activation_code(w, y) == activation_code(w, x);
            Vector slack = poly.b - poly.a * y;
            bool strictly_in = (slack.array() > 1e-9).all();
            bool clearly_out = (slack.array() < -1e-9).any();
            if (strictly_in) {
                EXPECT_TRUE(same);
            }
            if (clearly_out) {
                EXPECT_FALSE(same);
            }
        }
    }
}

TEST(Polytope, LinearMapAgreesWithForwardPass) {
    for (const char* name : {"toy_2_2_2.json", "german_2_4.json", "german_8_2.json"}) {
        auto w = ModelWeights::load(fixture(name));
        std::mt19937_64 rng(9);
        for (int i = 0; i < 200; ++i) {
            Vector x = faircert::test::uniform_vec(rng, w.n_inputs(), -2, 2);
            auto [a, c] = linear_map_from_code(w, activation_code(w, x));
            EXPECT_LE(((a * x + c) - w.logits(x)).cwiseAbs().maxCoeff(), 1e-9);
        }
    }
}

TEST(Slice, ReducesKnownExample) {
    Polytope p;
    p.a = Matrix(2, 2);
    p.a << 1, 2, -1, 3;
    p.b = vec({4, 5});
    p.dim = 2;
    p.neuron_rows = 2;
    SensitiveSpec spec({SensitiveFeature{1, {0.0, 1.0}}}, 2);
    auto r = reduce_poly_dim(p, spec, {1.0});
    ASSERT_EQ(r.a.cols(), 1);
    EXPECT_DOUBLE_EQ(r.a(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(r.a(1, 0), -1.0);
    EXPECT_DOUBLE_EQ(r.b(0), 2.0);
    EXPECT_DOUBLE_EQ(r.b(1), 2.0);
}

TEST(Slice, MembershipEquivalenceProperty) {
    auto w = ModelWeights::load(fixture("german_4_2.json"));
    auto spec = SensitiveSpec::load(fixture("german_4_2.sensitive.json"), w.n_inputs());
    std::mt19937_64 rng(3);
    Vector anchor = faircert::test::uniform_vec(rng, w.n_inputs(), -1, 1);
    auto poly = decision_cell(w, activation_code(w, anchor), w.predict(anchor));
    for (const auto& s : spec.enumerate()) {
        auto sliced = reduce_poly_dim(poly, spec, s);
        for (int i = 0; i < 1000; ++i) {
            Vector x_ns = faircert::test::uniform_vec(rng, w.n_inputs() - spec.k(), -1.5, 1.5);
            Vector full = spec.assemble(x_ns, s);
            EXPECT_EQ(poly.contains(full, 0.0), sliced.contains(x_ns, 0.0));
        }
    }
}

TEST(Sensitive, EnumerationOrderAndRoundTrip) {
    SensitiveSpec spec({SensitiveFeature{0, {0, 1}}, SensitiveFeature{2, {5, 6, 7}}}, 4);
    auto all = spec.enumerate();
    ASSERT_EQ(all.size(), 6u);
    EXPECT_EQ(all[0], (std::vector<double>{0, 5}));
    EXPECT_EQ(all[1], (std::vector<double>{0, 6}));
    EXPECT_EQ(all[3], (std::vector<double>{1, 5}));
    Vector x = vec({9, 8, 7, 6});
    Vector ns = spec.project_out(x);
    EXPECT_EQ(ns, vec({8, 6}));
    EXPECT_EQ(spec.assemble(ns, {1, 7}), vec({1, 8, 7, 6}));
    auto again = SensitiveSpec::from_json(spec.to_json(), 4);
    EXPECT_EQ(again.sensitive_indices(), spec.sensitive_indices());
}

TEST(Sensitive, RejectsBadSpecs) {
    EXPECT_THROW(SensitiveSpec({SensitiveFeature{5, {0}}}, 3), Error);
    EXPECT_THROW(SensitiveSpec({SensitiveFeature{0, {}}}, 3), Error);
    EXPECT_THROW(SensitiveSpec({SensitiveFeature{0, {1}}, SensitiveFeature{0, {2}}}, 3), Error);
}

TEST(Distance, ProjectionExamples) {
    Hyperplane h{vec({3, 4}), 10};
    EXPECT_DOUBLE_EQ(projection_distance(vec({0, 0}), h), 2.0);
    Vector foot = projection_foot(vec({0, 0}), h);
    EXPECT_NEAR(foot(0), 1.2, 1e-12);
    EXPECT_NEAR(foot(1), 1.6, 1e-12);
    EXPECT_DOUBLE_EQ(projection_distance(vec({2, 1}), h), 0.0);
}

TEST(Distance, ProjectionNeverExceedsFacetDistance) {
    // Facet is the segment x1 = 1, x2 in [2, 3]; the exact distance from the
    // origin is sqrt(5) while the hyperplane is 1 away.
    Hyperplane h{vec({1, 0}), 1};
    double exact = std::sqrt(5.0);
    EXPECT_LE(projection_distance(vec({0, 0}), h), exact);
    EXPECT_DOUBLE_EQ(projection_distance(vec({0, 0}), h), 1.0);
}

TEST(Chebyshev, UnitSquare) {
    Polytope p;
    p.a = Matrix(4, 2);
    p.a << 1, 0, -1, 0, 0, 1, 0, -1;
    p.b = vec({1, 0, 1, 0});
    p.dim = 2;
    p.neuron_rows = 4;
    auto ball = representative_point(p, 10.0);
    ASSERT_TRUE(ball);
    EXPECT_NEAR(ball->center(0), 0.5, 1e-9);
    EXPECT_NEAR(ball->center(1), 0.5, 1e-9);
    EXPECT_NEAR(ball->radius, 0.5, 1e-9);

    // Facet x2 = 1 (top edge): center of the edge.
    auto top = representative_point(p, 10.0, 2);
    ASSERT_TRUE(top);
    EXPECT_NEAR(top->center(0), 0.5, 1e-9);
    EXPECT_NEAR(top->center(1), 1.0, 1e-12);
    EXPECT_NEAR(top->radius, 0.5, 1e-9);
}

TEST(Chebyshev, HalfSpaceInsideBox) {
    Polytope p;
    p.a = Matrix(1, 2);
    p.a << -1, 0;
    p.b = vec({0});
    p.dim = 2;
    p.neuron_rows = 1;
    auto ball = representative_point(p, 1.0);
    ASSERT_TRUE(ball);
    EXPECT_NEAR(ball->radius, 0.5, 1e-9);
    EXPECT_NEAR(ball->center(0), 0.5, 1e-9);
}

TEST(Chebyshev, InfeasibleRegion) {
    Polytope p;
    p.a = Matrix(2, 1);
    p.a << 1, -1;
    p.b = vec({0, -1});
    p.dim = 1;
    p.neuron_rows = 2;
    EXPECT_FALSE(representative_point(p, 10.0));
}

TEST(Lp, SmallProblems) {
    LinearProgram lp;
    lp.a_ub = Matrix(2, 2);
    lp.a_ub << 1, 1, 1, 3;
    lp.b_ub = vec({4, 6});
    lp.objective = vec({3, 2});
    auto r = solve_lp(lp);
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.value, 12.0, 1e-9);

    LinearProgram unb;
    unb.a_ub = Matrix(1, 2);
    unb.a_ub << 1, -1;
    unb.b_ub = vec({1});
    unb.objective = vec({1, 1});
    EXPECT_EQ(solve_lp(unb).status, LpStatus::unbounded);

    LinearProgram eq;
    eq.a_eq = Matrix(1, 2);
    eq.a_eq << 1, 1;
    eq.b_eq = vec({2});
    eq.a_ub = Matrix(1, 2);
    eq.a_ub << -1, 0;
    eq.b_ub = vec({-3});
    eq.objective = vec({1, 0});
    EXPECT_EQ(solve_lp(eq).status, LpStatus::infeasible);
}

TEST(Model, JsonRoundTripIsExact) {
    for (const char* name : {"toy_2_2_2.json", "german_4_2.json", "german_2_4.json", "german_8_2.json"}) {
        auto w = ModelWeights::load(fixture(name));
        auto again = ModelWeights::from_json(nlohmann::json::parse(w.to_json().dump()));
        EXPECT_TRUE(w == again) << name;
    }
}

TEST(Model, SchemaErrorsNameTheField) {
    auto doc = nlohmann::json::parse(R"({"n_inputs": 2, "n_classes": 2, "layers": [{"weights": [[1, 2]], "bias": [1, 2]}]})");
    try {
        ModelWeights::from_json(doc);
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("layers[0]"), std::string::npos) << e.what();
    }
}

TEST(Model, ArgmaxLowestIndexWinsTies) {
    EXPECT_EQ(argmax_lowest(vec({3, 3})), 0);
    EXPECT_EQ(argmax_lowest(vec({1, 5, 5})), 1);
}
