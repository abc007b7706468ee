#include <doctest.h>

#include <algorithm>
#include <random>

#include "strudel/builtin_schemas.hpp"
#include "strudel/schema.hpp"

using namespace strudel;

TEST_CASE("toy schema enumerates the 2x2 tuple spaces") {
    const SchemaPtr schema = toy_two_level_schema();
    const auto [factors, latents] = build_index_spaces(*schema);
    REQUIRE(factors.size() == 4);
    REQUIRE(latents.size() == 4);
    CHECK(factors[0] == Tuple{"object_1", "color"});
    CHECK(factors[1] == Tuple{"object_1", "size"});
    CHECK(factors[2] == Tuple{"object_2", "color"});
    CHECK(factors[3] == Tuple{"object_2", "size"});
    CHECK(latents[0] == Tuple{"slot_1", "dim_1"});
    CHECK(latents[3] == Tuple{"slot_2", "dim_2"});
}

TEST_CASE("degenerate single-label schema has F = L = 1") {
    HierarchySchema schema({{"only", {"f"}, {"z"}}}, {{"f"}}, {{"z"}});
    CHECK(schema.factor_count() == 1);
    CHECK(schema.latent_count() == 1);
}

TEST_CASE("three-level schema sizes are the domain products") {
    const SchemaPtr schema = three_level_schema();
    CHECK(schema->factor_count() == 8);
    CHECK(schema->latent_count() == 8);
}

TEST_CASE("canonical ordering follows domain order, not string order") {
    // declared domain order intentionally non-alphabetical
    HierarchySchema schema({{"level", {"zebra", "apple"}, {"s1", "s2"}}},
                           {{"apple"}, {"zebra"}}, {{"s1"}, {"s2"}});
    CHECK(schema.factor_tuples()[0] == Tuple{"zebra"});
    CHECK(schema.factor_tuples()[1] == Tuple{"apple"});
}

TEST_CASE("schema validation rejects bad inputs") {
    CHECK_THROWS_AS(HierarchySchema({{"a", {}, {"z"}}}, {{"x"}}, {{"z"}}), SpecError);
    CHECK_THROWS_AS(HierarchySchema({{"a", {"x", "x"}, {"z"}}}, {{"x"}}, {{"z"}}), SpecError);
    // duplicate tuples
    CHECK_THROWS_AS(HierarchySchema({{"a", {"x", "y"}, {"z"}}}, {{"x"}, {"x"}}, {{"z"}}),
                    SpecError);
    // arity mismatch
    CHECK_THROWS_AS(HierarchySchema({{"a", {"x"}, {"z"}}}, {{"x", "x"}}, {{"z"}}), SpecError);
    // label outside domain
    CHECK_THROWS_AS(HierarchySchema({{"a", {"x"}, {"z"}}}, {{"y"}}, {{"z"}}), SpecError);
}

TEST_CASE("project_tuple selects levels preserving order") {
    CHECK(project_tuple({{0}}, {"object_1", "color"}) == Tuple{"object_1"});
    CHECK(project_tuple({{1}}, {"object_2", "size"}) == Tuple{"size"});
    CHECK(project_tuple({{0, 1}}, {"slot_2", "dim_1"}) == (Tuple{"slot_2", "dim_1"}));
    CHECK_THROWS_AS(project_tuple({{5}}, {"a", "b"}), SpecError);
}

TEST_CASE("projected_groups partitions the tuple space") {
    const SchemaPtr schema = toy_two_level_schema();
    SUBCASE("object projection on latents gives the two slots") {
        const auto groups = projected_groups(*schema, {{0}}, Side::latents);
        REQUIRE(groups.size() == 2);
        CHECK(groups[0].label == Tuple{"slot_1"});
        CHECK(groups[1].label == Tuple{"slot_2"});
        CHECK(groups[0].members == std::vector<int>{0, 1});
        CHECK(groups[1].members == std::vector<int>{2, 3});
    }
    SUBCASE("identity projection puts each tuple in its own group") {
        const auto groups = projected_groups(*schema, schema->identity_projection(), Side::latents);
        CHECK(groups.size() == schema->latent_count());
        for (std::size_t g = 0; g < groups.size(); ++g)
            CHECK(groups[g].members == std::vector<int>{static_cast<int>(g)});
    }
    SUBCASE("property projection on factors groups color and size") {
        const auto groups = projected_groups(*schema, {{1}}, Side::factors);
        REQUIRE(groups.size() == 2);
        CHECK(groups[0].label == Tuple{"color"});
        CHECK(groups[1].label == Tuple{"size"});
    }
}

TEST_CASE("projected_groups is a partition on random projections") {
    const SchemaPtr schema = three_level_schema();
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        Projection p;
        for (int lv = 0; lv < 3; ++lv)
            if (rng() % 2) p.levels.push_back(lv);
        if (p.levels.empty()) p.levels.push_back(static_cast<int>(rng() % 3));
        for (Side side : {Side::factors, Side::latents}) {
            const auto groups = projected_groups(*schema, p, side);
            const std::size_t n =
                side == Side::factors ? schema->factor_count() : schema->latent_count();
            std::vector<int> seen(n, 0);
            for (const auto& g : groups) {
                for (int m : g.members) {
                    ++seen[static_cast<std::size_t>(m)];
                    // projection is constant on each group
                    const auto& tuples = side == Side::factors ? schema->factor_tuples()
                                                               : schema->latent_tuples();
                    CHECK(project_tuple(p, tuples[static_cast<std::size_t>(m)]) == g.label);
                }
            }
            for (int count : seen) CHECK(count == 1);
        }
    }
}

TEST_CASE("check_decomposition") {
    const SchemaPtr two = toy_two_level_schema();
    const SchemaPtr three = three_level_schema();
    CHECK(check_decomposition(*two, {{0, 1}}, {{{0}}, {{1}}}));
    CHECK_FALSE(check_decomposition(*two, {{0, 1}}, {{{0}}, {{0}}}));
    CHECK(check_decomposition(*three, {{0, 1, 2}}, {{{0, 2}}, {{1}}}));
    // single part equal to the projection
    CHECK(check_decomposition(*two, {{0, 1}}, {{{0, 1}}}));
    // invariant to part order
    CHECK(check_decomposition(*three, {{0, 1, 2}}, {{{1}}, {{0, 2}}}));
    // missing level
    CHECK_FALSE(check_decomposition(*three, {{0, 1, 2}}, {{{0}}, {{1}}}));
}

TEST_CASE("schema JSON round-trip preserves tuple spaces") {
    const SchemaPtr schema = three_level_schema();
    const HierarchySchema back = schema_from_json(schema_to_json(*schema));
    CHECK(back.factor_tuples() == schema->factor_tuples());
    CHECK(back.latent_tuples() == schema->latent_tuples());
    CHECK(back.attributes().size() == schema->attributes().size());
}

TEST_CASE("tuple labels round-trip") {
    const Tuple t{"object_1", "color"};
    CHECK(tuple_label(t) == "object_1|color");
    CHECK(tuple_from_label("object_1|color") == t);
}
