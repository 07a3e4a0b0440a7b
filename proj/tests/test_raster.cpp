#include "vexel/raster.hpp"
#include "vexel/svg.hpp"

#include "helpers.hpp"

#include <cmath>
#include <doctest.h>

using namespace vexel;
using svg::Document;
using svg::Element;
using svg::ElementKind;
using svg::CmdKind;

namespace {

Document one_element(Element e, int canvas = 128) {
    Document d;
    d.canvas = canvas;
    d.elements.push_back(std::move(e));
    return d;
}

} // namespace

TEST_CASE("rasterize: full-canvas red rect paints every pixel") {
    Element r;
    r.kind = ElementKind::rect;
    r.width = 128;
    r.height = 128;
    r.fill = {1, 0, 0};
    auto grid = raster::rasterize(one_element(r), 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            CHECK(grid.at(x, y, 0) == 1.0);
            CHECK(grid.at(x, y, 1) == 0.0);
            CHECK(grid.at(x, y, 2) == 0.0);
        }
}

TEST_CASE("rasterize: empty document is all white") {
    Document d;
    auto grid = raster::rasterize(d, 16);
    for (double v : grid.pixels) CHECK(v == 1.0);
}

TEST_CASE("rasterize: circle covers pi r^2 within 2 percent") {
    Element c;
    c.kind = ElementKind::circle;
    c.cx = 64;
    c.cy = 64;
    c.r = 32;
    c.fill = {0, 0, 0};
    auto grid = raster::rasterize(one_element(c), 128);
    double covered = 0;
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) covered += 1.0 - grid.at(x, y, 0);
    double expected = M_PI * 32 * 32;
    CHECK(std::fabs(covered - expected) / expected < 0.02);
}

TEST_CASE("flatten: collinear cubic collapses to its chord") {
    Element p;
    p.kind = ElementKind::path;
    p.commands = {{CmdKind::move_to, {0, 0}},
                  {CmdKind::cubic_to, {10, 10, 20, 20, 30, 30}},
                  {CmdKind::line_to, {30, 0}},
                  {CmdKind::close_path, {}}};
    auto polys = raster::flatten(p, 0.1);
    REQUIRE(polys.size() == 1);
    CHECK(polys[0].size() == 3); // move point, curve endpoint, line endpoint
}

TEST_CASE("flatten: circle perimeter within 0.5 percent of closed form") {
    Element c;
    c.kind = ElementKind::circle;
    c.cx = 0;
    c.cy = 0;
    c.r = 10;
    auto polys = raster::flatten(c, 0.05);
    REQUIRE(polys.size() == 1);
    double perim = 0;
    const auto& poly = polys[0];
    for (std::size_t i = 0; i < poly.size(); ++i) perim += norm(poly[(i + 1) % poly.size()] - poly[i]);
    CHECK(std::fabs(perim - 2 * M_PI * 10) / (2 * M_PI * 10) < 0.005);
}

TEST_CASE("flatten: semicircular arc tracks the parametric circle") {
    Element p;
    p.kind = ElementKind::path;
    p.commands = {{CmdKind::move_to, {-10, 0}}, {CmdKind::arc_to, {10, 10, 0, 0, 1, 10, 0}},
                  {CmdKind::close_path, {}}};
    auto polys = raster::flatten(p, 0.01);
    REQUIRE(polys.size() == 1);
    for (const auto& pt : polys[0]) CHECK(std::fabs(norm(pt) - 10.0) < 0.02);
}

TEST_CASE("flatten: zero-radius arc degenerates to a straight line") {
    Element p;
    p.kind = ElementKind::path;
    p.commands = {{CmdKind::move_to, {0, 0}}, {CmdKind::arc_to, {0, 5, 0, 0, 1, 10, 0}},
                  {CmdKind::line_to, {10, 10}}, {CmdKind::close_path, {}}};
    auto polys = raster::flatten(p, 0.1);
    REQUIRE(polys.size() == 1);
    CHECK(polys[0].size() == 4);
}

TEST_CASE("raster_diff: identities and dimension mismatch") {
    Document d;
    auto a = raster::rasterize(d, 8);
    CHECK(raster::raster_diff(a, a) == 0.0);

    Element r;
    r.kind = ElementKind::rect;
    r.width = 128;
    r.height = 128;
    r.fill = {0, 0, 0};
    auto b = raster::rasterize(one_element(r), 8);
    CHECK(raster::raster_diff(a, b) == 1.0);

    auto c = raster::rasterize(d, 16);
    CHECK_THROWS_AS(raster::raster_diff(a, c), Error);
}

TEST_CASE("rasterize: deterministic across calls") {
    Document doc = svg::parse_svg_lenient(testutil::load_fixture("corpus/44_layered_overlap.svg"));
    auto a = raster::rasterize(doc, 128);
    auto b = raster::rasterize(doc, 128);
    CHECK(a.pixels == b.pixels);
}

TEST_CASE("rasterize: painter order matters only when overlap fills differ") {
    auto make_doc = [](svg::Color c1, svg::Color c2, bool swapped) {
        Element a;
        a.kind = ElementKind::rect;
        a.x = 10; a.y = 10; a.width = 60; a.height = 60;
        a.fill = c1;
        Element b = a;
        b.x = 40; b.y = 40;
        b.fill = c2;
        Document d;
        d.canvas = 128;
        if (swapped) {
            d.elements = {b, a};
        } else {
            d.elements = {a, b};
        }
        return d;
    };
    svg::Color red{1, 0, 0}, blue{0, 0, 1};
    CHECK(raster::raster_diff(raster::rasterize(make_doc(red, red, false), 64),
                              raster::rasterize(make_doc(red, red, true), 64)) == 0.0);
    CHECK(raster::raster_diff(raster::rasterize(make_doc(red, blue, false), 64),
                              raster::rasterize(make_doc(red, blue, true), 64)) > 0.0);
}

TEST_CASE("rasterize: halving the tolerance never drifts away from the fine reference") {
    Document doc = svg::parse_svg_lenient(testutil::load_fixture("corpus/18_half_moon.svg"));
    auto ref = raster::rasterize(doc, 128, 0.1 / 4);
    double d1 = raster::raster_diff(raster::rasterize(doc, 128, 0.4), ref);
    double d2 = raster::raster_diff(raster::rasterize(doc, 128, 0.2), ref);
    CHECK(d2 <= d1);
}

TEST_CASE("ppm: header and payload size") {
    Document d;
    auto grid = raster::rasterize(d, 4);
    std::string ppm = raster::to_ppm(grid);
    CHECK(ppm.rfind("P6\n4 4\n255\n", 0) == 0);
    CHECK(ppm.size() == 11 + 4 * 4 * 3);
}
