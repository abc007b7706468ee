#include <doctest.h>

#include <cmath>
#include <random>

#include "strudel/builtin_schemas.hpp"
#include "strudel/joint.hpp"
#include "strudel/metrics.hpp"

using namespace strudel;

namespace {

// 2 slots x 2 dims vs 2 objects x 2 properties, mass 0.125 exactly on the
// cells whose slot matches the object.
JointDistribution worked_block_matrix() {
    const SchemaPtr schema = toy_two_level_schema();
    Matrix p(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i / 2 == j / 2) p(i, j) = 0.125;
    return JointDistribution(schema, p);
}

JointDistribution random_joint_toy(std::uint64_t seed) {
    return random_joint(toy_two_level_schema(), 1.0, seed);
}

}  // namespace

TEST_CASE("normalize_joint") {
    const SchemaPtr schema = toy_two_level_schema();
    Matrix eye(4, 4);
    for (std::size_t i = 0; i < 4; ++i) eye(i, i) = 1.0;
    const JointDistribution p = normalize_joint(eye, schema);
    for (std::size_t i = 0; i < 4; ++i) CHECK(p.matrix()(i, i) == doctest::Approx(0.25));
    CHECK(std::abs(p.matrix().sum() - 1.0) <= 1e-12);

    Matrix zero(4, 4);
    CHECK_THROWS_AS(normalize_joint(zero, schema), NumericError);
    Matrix neg(4, 4);
    neg(0, 0) = -1.0;
    CHECK_THROWS_AS(normalize_joint(neg, schema), NumericError);
}

TEST_CASE("column weights of the joint are the column sums of R over its total") {
    const SchemaPtr schema = toy_two_level_schema();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    Matrix r(4, 4);
    for (auto& v : r.data()) v = u(rng);
    const JointDistribution p = normalize_joint(r, schema);
    const auto w = p.factor_marginal();
    for (std::size_t j = 0; j < 4; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < 4; ++i) col += r(i, j);
        CHECK(w[j] == doctest::Approx(col / r.sum()).epsilon(1e-12));
    }
}

TEST_CASE("marginalize sums the projected blocks") {
    const JointDistribution p = random_joint_toy(99);
    SUBCASE("object projection sums 2x2 blocks") {
        const ProjectedJoint m = marginalize(p, {{0}});
        REQUIRE(m.p.rows() == 2);
        REQUIRE(m.p.cols() == 2);
        const Matrix& r = p.matrix();
        CHECK(m.p(0, 0) ==
              doctest::Approx(r(0, 0) + r(0, 1) + r(1, 0) + r(1, 1)).epsilon(1e-14));
        CHECK(m.p(1, 0) ==
              doctest::Approx(r(2, 0) + r(2, 1) + r(3, 0) + r(3, 1)).epsilon(1e-14));
        CHECK(m.row_labels[0] == Tuple{"slot_1"});
        CHECK(m.col_labels[1] == Tuple{"object_2"});
    }
    SUBCASE("identity projection leaves the matrix unchanged") {
        const ProjectedJoint m = marginalize(p, p.schema()->identity_projection());
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) CHECK(m.p(i, j) == p.matrix()(i, j));
    }
    SUBCASE("mass is preserved under every projection") {
        for (const Projection proj : {Projection{{0}}, Projection{{1}}, Projection{{0, 1}}})
            CHECK(std::abs(marginalize(p, proj).p.sum() - 1.0) <= 1e-12);
    }
    SUBCASE("worked matrix under the property projection is uniform") {
        const ProjectedJoint m = marginalize(worked_block_matrix(), {{1}});
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) CHECK(m.p(i, j) == doctest::Approx(0.25));
    }
}

TEST_CASE("worked block matrix golden scores") {
    const JointDistribution p = worked_block_matrix();
    const Projection object{{0}}, property{{1}};
    const Projection identity = p.schema()->identity_projection();
    CHECK(std::abs(completeness(p, object) - 1.0) <= 1e-12);
    CHECK(std::abs(disentanglement(p, object) - 1.0) <= 1e-12);
    CHECK(std::abs(completeness(p, property) - 0.0) <= 1e-12);
    CHECK(std::abs(disentanglement(p, property) - 0.0) <= 1e-12);
    CHECK(std::abs(completeness(p, identity) - 0.5) <= 1e-12);
    CHECK(std::abs(disentanglement(p, identity) - 0.5) <= 1e-12);
}

TEST_CASE("permutation matrix scores 1, uniform matrix scores 0") {
    const SchemaPtr schema = toy_two_level_schema();
    Matrix eye(4, 4);
    for (std::size_t i = 0; i < 4; ++i) eye(i, i) = 0.25;
    const JointDistribution perm(schema, eye);
    const Projection identity = schema->identity_projection();
    CHECK(completeness(perm, identity) == doctest::Approx(1.0));
    CHECK(disentanglement(perm, identity) == doctest::Approx(1.0));

    Matrix flat(4, 4, 1.0 / 16.0);
    const JointDistribution uniform(schema, flat);
    CHECK(std::abs(completeness(uniform, identity)) <= 1e-12);
    CHECK(std::abs(disentanglement(uniform, identity)) <= 1e-12);
}

TEST_CASE("single-group projections score 1 by convention") {
    // one latent group at level 0
    auto schema = std::make_shared<const HierarchySchema>(HierarchySchema::full_product(
        {{"object", {"object_1", "object_2"}, {"slot_1"}},
         {"property", {"color", "size"}, {"dim_1", "dim_2"}}}));
    const JointDistribution p = random_joint(schema, 1.0, 3);
    CHECK(completeness(p, {{0}}) == 1.0);   // U = 1
    CHECK(disentanglement(p, {{0}}) < 1.0); // V = 2, not degenerate
}

TEST_CASE("DCI weighted averages equal the identity-projection scores") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const JointDistribution p = random_joint_toy(seed);
        const DciScores s = dci_scores(p);
        const Projection identity = p.schema()->identity_projection();
        CHECK(std::abs(s.weighted_completeness - completeness(p, identity)) <= 1e-12);
        CHECK(std::abs(s.weighted_disentanglement - disentanglement(p, identity)) <= 1e-12);
    }
}

TEST_CASE("zero-mass factor column is NA with weight zero") {
    const SchemaPtr schema = toy_two_level_schema();
    Matrix r(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) r(i, j) = 1.0;  // column 3 all zero
    const JointDistribution p = normalize_joint(r, schema);
    const DciScores s = dci_scores(p);
    CHECK_FALSE(s.completeness_per_factor[3].has_value());
    CHECK(s.factor_weights[3] == 0.0);
    CHECK(s.completeness_per_factor[0].has_value());
    // weighted average still matches C(identity)
    CHECK(std::abs(s.weighted_completeness - completeness(p, p.schema()->identity_projection())) <=
          1e-12);
}

TEST_CASE("C and D are invariant under row/column relabeling") {
    std::mt19937_64 rng(777);
    for (int trial = 0; trial < 30; ++trial) {
        const JointDistribution p = random_joint_toy(1000 + static_cast<std::uint64_t>(trial));
        // swap the two objects (and independently the two slots): a
        // consistent relabeling of level-0 labels on both sides
        Matrix swapped(4, 4);
        const std::size_t row_map[4] = {2, 3, 0, 1};
        const std::size_t col_map[4] = {2, 3, 0, 1};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                swapped(row_map[i], col_map[j]) = p.matrix()(i, j);
        const JointDistribution q(p.schema(), swapped);
        for (const Projection proj : {Projection{{0}}, Projection{{1}}, Projection{{0, 1}}}) {
            CHECK(completeness(p, proj) == doctest::Approx(completeness(q, proj)).epsilon(1e-12));
            CHECK(disentanglement(p, proj) ==
                  doctest::Approx(disentanglement(q, proj)).epsilon(1e-12));
        }
    }
}

TEST_CASE("scores stay in [0,1] on random joints") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const JointDistribution p = random_joint_toy(seed * 7 + 1);
        for (const Projection proj : {Projection{{0}}, Projection{{1}}, Projection{{0, 1}}}) {
            const double c = completeness(p, proj);
            const double d = disentanglement(p, proj);
            CHECK(c >= -1e-12);
            CHECK(c <= 1.0 + 1e-12);
            CHECK(d >= -1e-12);
            CHECK(d <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("conditional entropy of matrix joints") {
    // uniform over 2 of 2 outcomes given each column
    Matrix m(2, 2, 0.25);
    CHECK(conditional_entropy_rows_given_cols(m, 2.0) == doctest::Approx(1.0));
    // deterministic rows given columns
    Matrix d(2, 2);
    d(0, 0) = 0.5;
    d(1, 1) = 0.5;
    CHECK(conditional_entropy_rows_given_cols(d, 2.0) == doctest::Approx(0.0));
}

// ---- informativeness -----------------------------------------------------------

TEST_CASE("informativeness of exact predictions is 0 and of the mean predictor is 1") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix targets(50, 3);
    for (auto& v : targets.data()) v = u(rng);
    const Informativeness exact = informativeness(targets, targets);
    for (const auto& v : exact.per_factor) CHECK(*v == 0.0);
    const Matrix zeros(50, 3);
    const Informativeness mean = informativeness(zeros, targets);
    for (const auto& v : mean.per_factor) CHECK(std::abs(*v - 1.0) <= 1e-12);
    CHECK(std::abs(*mean.global - 1.0) <= 1e-12);
}

TEST_CASE("zero-norm target columns are NA and excluded from the global average") {
    Matrix targets(10, 2);
    Matrix preds(10, 2);
    for (std::size_t i = 0; i < 10; ++i) {
        targets(i, 0) = 1.0;  // nonzero norm
        preds(i, 0) = 0.5;    // error 0.5 per element -> I = 0.5
        targets(i, 1) = 0.0;  // zero norm -> NA
    }
    const Informativeness inf = informativeness(preds, targets);
    CHECK(inf.per_factor[0].has_value());
    CHECK_FALSE(inf.per_factor[1].has_value());
    CHECK(*inf.global == doctest::Approx(0.5));
}

// ---- background stripping --------------------------------------------------------

namespace {

// worked matrix extended with a third "background" object/slot whose mass
// sits entirely on the background factor columns
JointDistribution with_background_slot() {
    auto schema = std::make_shared<const HierarchySchema>(HierarchySchema::full_product(
        {{"object", {"object_1", "object_2", "bg"}, {"slot_1", "slot_2", "slot_3"}},
         {"property", {"color", "size"}, {"dim_1", "dim_2"}}}));
    Matrix p(6, 6);
    // objects 1/2 match slots 1/2 as in the worked matrix
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i / 2 == j / 2) p(i, j) = 0.125;
    // slot_3 rows (4,5) carry pure background mass on bg columns (4,5)
    p(4, 4) = 0.25;
    p(4, 5) = 0.25;
    p(5, 4) = 0.25;
    p(5, 5) = 0.25;
    return normalize_joint(p, schema);
}

}  // namespace

TEST_CASE("strip_background removes the background slot and factors") {
    const JointDistribution p = with_background_slot();
    const double c_before = completeness(p, {{0}});
    const double d_before = disentanglement(p, {{0}});
    const StripResult sr = strip_background(p, {"bg"});
    CHECK(sr.removed_slot == 2);
    CHECK(sr.removed_slot_label == "slot_3");
    CHECK_FALSE(sr.tie);
    CHECK(sr.joint.schema()->factor_count() == 4);
    CHECK(sr.joint.schema()->latent_count() == 4);
    // object-level scores unchanged by stripping pure background mass
    CHECK(completeness(sr.joint, {{0}}) == doctest::Approx(c_before).epsilon(1e-12));
    CHECK(disentanglement(sr.joint, {{0}}) == doctest::Approx(d_before).epsilon(1e-12));
    CHECK(std::abs(completeness(sr.joint, {{0}}) - 1.0) <= 1e-12);
}

TEST_CASE("strip_background without tags is a no-op") {
    const JointDistribution p = with_background_slot();
    const StripResult sr = strip_background(p, {});
    CHECK(sr.removed_slot == -1);
    CHECK(sr.joint.schema()->factor_count() == p.schema()->factor_count());
}

TEST_CASE("strip_background tie goes to the lowest slot and is recorded") {
    auto schema = std::make_shared<const HierarchySchema>(HierarchySchema::full_product(
        {{"object", {"o1", "bgf"}, {"s1", "s2"}}, {"property", {"p"}, {"d"}}}));
    Matrix p(2, 2, 0.25);  // both slots carry equal background mass
    const JointDistribution joint(schema, p);
    const StripResult sr = strip_background(joint, {"bgf"});
    CHECK(sr.removed_slot == 0);
    CHECK(sr.tie);
}

// ---- aggregation --------------------------------------------------------------

TEST_CASE("aggregate_values mean and standard error") {
    const MeanStderr a = aggregate_values({0.4, 0.6});
    CHECK(a.mean == doctest::Approx(0.5));
    CHECK(*a.stderr_ == doctest::Approx(0.1));
    const MeanStderr b = aggregate_values({0.7, 0.7, 0.7});
    CHECK(b.mean == doctest::Approx(0.7));
    CHECK(*b.stderr_ == doctest::Approx(0.0));
    const MeanStderr c = aggregate_values({0.3, std::nullopt, 0.5});
    CHECK(c.n == 2);
    CHECK(c.mean == doctest::Approx(0.4));
    const MeanStderr d = aggregate_values({std::nullopt});
    CHECK(d.n == 0);
}

TEST_CASE("aggregate_groups is NA-aware per metric") {
    GroupMetrics g1, g2;
    g1.group_id = 0;
    g2.group_id = 1;
    g1.projections["object"] = {0.9, 0.8};
    g2.projections["object"] = {0.7, 0.6};
    g1.inf_factor_names = {"f1", "f2"};
    g2.inf_factor_names = {"f1", "f2"};
    g1.inf.per_factor = {0.1, std::nullopt};
    g1.inf.global = 0.1;
    g2.inf.per_factor = {0.3, 0.5};
    g2.inf.global = 0.4;
    const AggregateMetrics agg = aggregate_groups({g1, g2});
    CHECK(agg.projections.at("object").first.mean == doctest::Approx(0.8));
    CHECK(agg.projections.at("object").second.mean == doctest::Approx(0.7));
    CHECK(agg.informativeness_per_factor.at("f2").n == 1);
    CHECK(agg.informativeness_per_factor.at("f2").mean == doctest::Approx(0.5));
    CHECK(agg.informativeness_global.mean == doctest::Approx(0.25));
}
