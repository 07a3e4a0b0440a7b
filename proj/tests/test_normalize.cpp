#include "vexel/normalize.hpp"
#include "vexel/raster.hpp"
#include "vexel/svg.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace vexel;
using svg::CmdKind;
using svg::Document;
using svg::Element;
using svg::ElementKind;

TEST_CASE("clean: group fill pushes into children and the wrapper goes away") {
    std::string text = R"(<svg viewBox="0 0 64 64"><g fill="#00f"><rect x="1" y="1" width="10" height="10"/></g></svg>)";
    Document out = normalize::clean(Document{}, text);
    REQUIRE(out.elements.size() == 1);
    CHECK(out.elements[0].kind == ElementKind::rect);
    CHECK(out.elements[0].fill == svg::Color{0, 0, 1});
}

TEST_CASE("clean: zero-area and invisible elements removed, raster unchanged") {
    std::string text = R"(<svg viewBox="0 0 64 64">
        <rect x="4" y="4" width="40" height="40" fill="#333333"/>
        <rect x="1" y="1" width="0" height="50" fill="red"/>
        <circle cx="30" cy="30" r="12" fill="blue" opacity="0"/>
        <path d="M1 1 L60 60" fill="black"/>
    </svg>)";
    Document before = svg::parse_svg_lenient(text);
    Document after = normalize::clean(Document{}, text);
    CHECK(after.elements.size() == 1);
    CHECK(raster::raster_diff(raster::rasterize(before, 128), raster::rasterize(after, 128)) == 0.0);
}

TEST_CASE("clean: opacity multiplies through nested groups") {
    std::string text = R"(<svg viewBox="0 0 64 64"><g opacity="0.5"><g opacity="0.5">
        <rect x="1" y="1" width="10" height="10" fill="#fff"/></g></g></svg>)";
    Document out = normalize::clean(Document{}, text);
    REQUIRE(out.elements.size() == 1);
    CHECK(out.elements[0].opacity == doctest::Approx(0.25));
}

TEST_CASE("reshape: polygon becomes closed path") {
    Element poly;
    poly.kind = ElementKind::polygon;
    poly.points = {{0, 0}, {10, 0}, {5, 8}};
    poly.fill = {1, 0, 0};
    Document doc;
    doc.canvas = 64;
    doc.elements.push_back(poly);
    Document out = normalize::reshape_primitives(doc);
    REQUIRE(out.elements.size() == 1);
    const Element& p = out.elements[0];
    CHECK(p.kind == ElementKind::path);
    REQUIRE(p.commands.size() == 4);
    CHECK(p.commands[0] == svg::PathCommand{CmdKind::move_to, {0, 0}});
    CHECK(p.commands[1] == svg::PathCommand{CmdKind::line_to, {10, 0}});
    CHECK(p.commands[2] == svg::PathCommand{CmdKind::line_to, {5, 8}});
    CHECK(p.commands[3].kind == CmdKind::close_path);
    CHECK(p.fill == svg::Color{1, 0, 0});
}

TEST_CASE("reshape: H expands to L with inherited coordinate") {
    Element p;
    p.kind = ElementKind::path;
    p.commands = {{CmdKind::move_to, {0, 0}}, {CmdKind::hline_to, {10}}};
    Document doc;
    doc.elements.push_back(p);
    Document out = normalize::reshape_primitives(doc);
    CHECK(out.elements[0].commands[1] == svg::PathCommand{CmdKind::line_to, {10, 0}});
}

TEST_CASE("reshape: smooth cubic expansion is raster-lossless") {
    std::string text = R"(<svg viewBox="0 0 64 64">
        <path d="M0 32 C0 16 20 16 20 32 S40 48 40 32 L40 60 L0 60 Z" fill="#222222"/></svg>)";
    Document before = svg::parse_svg(text);
    Document after = normalize::reshape_primitives(before);
    for (const auto& e : after.elements)
        for (const auto& c : e.commands)
            CHECK(c.kind != CmdKind::smooth_cubic_to);
    CHECK(raster::raster_diff(raster::rasterize(before, 128), raster::rasterize(after, 128)) == 0.0);
}

TEST_CASE("quantize: half away from zero") {
    Element r;
    r.kind = ElementKind::rect;
    r.x = 10.004;
    r.y = 10.005;
    r.width = -0.0; // stays zero
    r.width = 5.115;
    r.height = 2.0;
    Document doc;
    doc.elements.push_back(r);
    Document q = normalize::quantize_precision(doc, 2);
    CHECK(q.elements[0].x == 10.00);
    CHECK(q.elements[0].y == 10.01);
    CHECK(q.elements[0].width == doctest::Approx(5.12).epsilon(1e-12));
    Document q2 = normalize::quantize_precision(q, 2);
    CHECK(q2.elements.at(0) == q.elements.at(0)); // idempotent
}

TEST_CASE("quantize: negative values round away from zero") {
    Element p;
    p.kind = ElementKind::path;
    p.commands = {{CmdKind::move_to, {-1.005, -1.004}}};
    Document doc;
    doc.elements.push_back(p);
    Document q = normalize::quantize_precision(doc, 2);
    CHECK(q.elements[0].commands[0].args[0] == doctest::Approx(-1.01).epsilon(1e-12));
    CHECK(q.elements[0].commands[0].args[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("resize: linear scaling, arcs keep rotation") {
    Document doc;
    doc.canvas = 256;
    Element r;
    r.kind = ElementKind::rect;
    r.x = 64;
    r.y = 64;
    r.width = 128;
    r.height = 128;
    doc.elements.push_back(r);
    Element a;
    a.kind = ElementKind::path;
    a.commands = {{CmdKind::move_to, {0, 0}}, {CmdKind::arc_to, {20, 10, 30, 1, 0, 40, 40}}};
    doc.elements.push_back(a);

    Document out = normalize::resize_canvas(doc, 128);
    CHECK(out.canvas == 128);
    CHECK(out.elements[0].x == 32);
    CHECK(out.elements[0].width == 64);
    const auto& arc = out.elements[1].commands[1];
    CHECK(arc.args[0] == 10);  // rx scaled
    CHECK(arc.args[2] == 30);  // rotation unchanged
    CHECK(arc.args[3] == 1);   // flags unchanged
    CHECK(arc.args[5] == 20);

    Document same = normalize::resize_canvas(out, 128);
    CHECK(same.elements == out.elements); // identity scale is exact
}

TEST_CASE("element_stats: identical docs have zero deltas; removals show up") {
    Document doc = svg::parse_svg(R"(<svg viewBox="0 0 64 64"><rect x="1" y="1" width="5" height="5"/><circle cx="9" cy="9" r="2"/></svg>)");
    auto same = normalize::element_stats(doc, doc);
    CHECK(same.before_counts == same.after_counts);

    std::string noisy = R"(<svg viewBox="0 0 64 64">
        <rect x="1" y="1" width="5" height="5" fill="#111111"/>
        <rect x="20" y="20" width="8" height="8" opacity="0"/>
        <rect x="40" y="40" width="0" height="8"/></svg>)";
    Document before = svg::parse_svg_lenient(noisy);
    Document after = normalize::clean(Document{}, noisy);
    auto rep = normalize::element_stats(before, after);
    int rect_idx = static_cast<int>(ElementKind::rect);
    CHECK(rep.before_counts[rect_idx] - rep.after_counts[rect_idx] == 2);
}

TEST_CASE("pipeline: output grammar is the codec vocabulary") {
    for (const auto& file : testutil::corpus_files()) {
        Document out = normalize::normalize_document(read_file(file));
        CHECK_MESSAGE(normalize::is_normalized_grammar(out), file);
    }
}

TEST_CASE("pipeline: quantize is the only lossy stage and stays within tolerance") {
    // spot-check two corpus files through each stage at raster level
    for (const char* name : {"corpus/21_nested_groups.svg", "corpus/45_big_canvas.svg"}) {
        std::string raw = testutil::load_fixture(name);
        Document parsed = svg::parse_svg_lenient(raw);
        Document cleaned = normalize::clean(Document{}, raw);
        Document reshaped = normalize::reshape_primitives(cleaned);
        Document resized = normalize::resize_canvas(reshaped, 128);
        Document quantized = normalize::quantize_precision(resized, 2);

        CHECK(raster::raster_diff(raster::rasterize(parsed, 128), raster::rasterize(cleaned, 128)) == 0.0);
        CHECK(raster::raster_diff(raster::rasterize(cleaned, 128), raster::rasterize(reshaped, 128)) == 0.0);
        CHECK(raster::raster_diff(raster::rasterize(reshaped, 128), raster::rasterize(resized, 128)) == 0.0);
        CHECK(raster::raster_diff(raster::rasterize(resized, 128), raster::rasterize(quantized, 128)) < 1e-3);
    }
}

TEST_CASE("pipeline: serialized bytes do not grow on a noisy file") {
    std::string raw = testutil::load_fixture("corpus/24_group_class_noise.svg");
    Document out = normalize::normalize_document(raw);
    CHECK(svg::serialize_svg(out, svg::CoordMode::relative).size() < raw.size());
}
