#include <doctest.h>

#include <string>
#include <vector>

#include "strudel/builtin_schemas.hpp"
#include "strudel/hinton.hpp"

using namespace strudel;

namespace {

// widths of all cell rects, with row/col ids, parsed from the SVG text
struct Cell {
    int row, col;
    double width;
};

std::vector<Cell> parse_cells(const std::string& svg) {
    std::vector<Cell> cells;
    std::size_t pos = 0;
    while ((pos = svg.find("class=\"cell\"", pos)) != std::string::npos) {
        auto grab = [&](const char* attr) {
            const std::size_t a = svg.find(attr, pos) + std::string(attr).size();
            const std::size_t b = svg.find('"', a);
            return svg.substr(a, b - a);
        };
        cells.push_back({std::stoi(grab("data-row=\"")), std::stoi(grab("data-col=\"")),
                         std::stod(grab("width=\""))});
        ++pos;
    }
    return cells;
}

}  // namespace

TEST_CASE("identity joint renders a diagonal of equal squares") {
    const SchemaPtr schema = toy_two_level_schema();
    Matrix p(4, 4);
    for (std::size_t i = 0; i < 4; ++i) p(i, i) = 0.25;
    const std::string svg = hinton_svg(p, schema->latent_tuples(), schema->factor_tuples(), "t");
    const auto cells = parse_cells(svg);
    REQUIRE(cells.size() == 4);
    for (const auto& c : cells) {
        CHECK(c.row == c.col);
        CHECK(c.width == cells.front().width);
    }
    CHECK(svg.find("normalized over the whole matrix") != std::string::npos);
    CHECK(svg.find("slot_1") != std::string::npos);
    CHECK(svg.find("object_2") != std::string::npos);
}

TEST_CASE("square area is proportional to the value") {
    const SchemaPtr schema = toy_two_level_schema();
    Matrix p(4, 4);
    p(0, 0) = 0.8;
    p(1, 1) = 0.2;
    const std::string svg = hinton_svg(p, schema->latent_tuples(), schema->factor_tuples(), "t");
    const auto cells = parse_cells(svg);
    REQUIRE(cells.size() == 2);
    const double ratio = (cells[1].width * cells[1].width) / (cells[0].width * cells[0].width);
    CHECK(ratio == doctest::Approx(0.25).epsilon(0.01));
}

TEST_CASE("hinton rejects negative values and mismatched labels") {
    const SchemaPtr schema = toy_two_level_schema();
    Matrix neg(4, 4);
    neg(0, 0) = -0.5;
    CHECK_THROWS_AS(hinton_svg(neg, schema->latent_tuples(), schema->factor_tuples(), "t"),
                    SpecError);
    Matrix ok(4, 4, 0.0625);
    CHECK_THROWS_AS(hinton_svg(ok, schema->latent_tuples(), {}, "t"), SpecError);
}
