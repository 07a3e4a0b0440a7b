#pragma once

#include "vexel/common.hpp"

#include <string>
#include <vector>

namespace vexel::svg {

struct Color {
    double r = 0.0, g = 0.0, b = 0.0; // each in [0,1]
    bool operator==(const Color&) const = default;
};

enum class ElementKind {
    path,
    circle,
    ellipse,
    rect,
    line,     // pre-normalization only
    polyline, // pre-normalization only
    polygon,  // pre-normalization only
    group,    // pre-normalization only
};

const char* kind_name(ElementKind k);

enum class CmdKind {
    move_to,          // M x y
    line_to,          // L x y
    cubic_to,         // C x1 y1 x2 y2 x y
    quad_to,          // Q x1 y1 x y
    arc_to,           // A rx ry rot large sweep x y
    close_path,       // Z
    hline_to,         // H x        (pre-normalization only)
    vline_to,         // V y        (pre-normalization only)
    smooth_cubic_to,  // S x2 y2 x y (pre-normalization only)
    smooth_quad_to,   // T x y      (pre-normalization only)
};

int cmd_arg_count(CmdKind k);
char cmd_letter(CmdKind k);

/// A path command with absolute coordinates in canvas units.
struct PathCommand {
    CmdKind kind;
    std::vector<double> args;

    bool operator==(const PathCommand&) const = default;
};

struct Element {
    ElementKind kind = ElementKind::path;
    std::vector<PathCommand> commands; // path
    std::vector<Vec2> points;          // line/polyline/polygon
    double cx = 0, cy = 0, r = 0;      // circle/ellipse
    double rx = 0, ry = 0;             // ellipse / rounded rect / arc radii
    double x = 0, y = 0;               // rect
    double width = 0, height = 0;      // rect
    Color fill;                        // default black
    double opacity = 1.0;
    std::vector<Element> children;     // group

    bool operator==(const Element&) const = default;
};

/// Parsed SVG: square canvas side V plus elements in paint order.
struct Document {
    int canvas = 128;
    std::vector<Element> elements;
    std::vector<std::string> warnings; // unsupported-attribute notes, not compared

    bool same_content(const Document& o) const {
        return canvas == o.canvas && elements == o.elements;
    }
};

enum class CoordMode { absolute, relative };

/// Strict parser for the supported grammar (Table-S1 primitives plus the
/// pre-normalization forms line/polyline/polygon/g and H/V/S/T commands).
/// Non-square or offset viewBoxes are centered into a square canvas.
Document parse_svg(const std::string& text);

/// Like parse_svg but resolves <defs>/<use>, drops <title>/<desc>/<metadata>
/// and class/id attributes. Entry point for the cleaning pipeline.
Document parse_svg_lenient(const std::string& text);

std::string serialize_svg(const Document& doc, CoordMode mode = CoordMode::absolute);

/// Canonical command list for any element: only M/L/C/Q/A/Z, absolute
/// coordinates. Shape elements (circle/ellipse/rect) are not converted here;
/// they return an empty list. Shared by reshape_primitives and the rasterizer
/// so both agree bit-for-bit.
std::vector<PathCommand> to_path_commands(const Element& e);

/// Number of leaf elements (groups contribute their descendants).
std::size_t leaf_count(const Document& doc);

} // namespace vexel::svg
