#include "vexel/normalize.hpp"

#include "vexel/raster.hpp"

#include <cmath>

namespace vexel::normalize {

using svg::CmdKind;
using svg::Document;
using svg::Element;
using svg::ElementKind;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAreaEpsilon = 1e-6; // square canvas units at target scale

void flatten_groups(const Element& e, std::vector<Element>& out) {
    if (e.kind == ElementKind::group) {
        for (const auto& ch : e.children) flatten_groups(ch, out);
    } else {
        out.push_back(e);
    }
}

} // namespace

double element_area(const Element& e) {
    switch (e.kind) {
    case ElementKind::circle:
        return kPi * e.r * e.r;
    case ElementKind::ellipse:
        return kPi * e.rx * e.ry;
    case ElementKind::rect:
        return e.width * e.height;
    case ElementKind::group: {
        double a = 0;
        for (const auto& ch : e.children) a += element_area(ch);
        return a;
    }
    default: {
        // paint-relevant area: sum of unsigned contour areas of the coarse
        // flattening (open subpaths close, matching fill semantics)
        double a = 0;
        for (const auto& poly : raster::flatten(e, 0.05)) {
            double signed2 = 0;
            for (std::size_t i = 0; i < poly.size(); ++i) {
                Vec2 p = poly[i], q = poly[(i + 1) % poly.size()];
                signed2 += cross(p, q);
            }
            a += std::fabs(signed2) / 2.0;
        }
        return a;
    }
    }
}

Document clean(const Document& doc, const std::string& raw_xml, int resize_target) {
    Document base = raw_xml.empty() ? doc : svg::parse_svg_lenient(raw_xml);

    Document out;
    out.canvas = base.canvas;
    out.warnings = base.warnings;

    std::vector<Element> flat;
    for (const auto& e : base.elements) flatten_groups(e, flat);

    double scale = static_cast<double>(resize_target) / base.canvas;
    double area_threshold = kAreaEpsilon / (scale * scale);
    for (auto& e : flat) {
        if (e.opacity <= 0.0) continue;
        if (element_area(e) < area_threshold) continue;
        out.elements.push_back(std::move(e));
    }
    return out;
}

Document reshape_primitives(const Document& doc) {
    Document out;
    out.canvas = doc.canvas;
    out.warnings = doc.warnings;
    out.elements.reserve(doc.elements.size());
    for (const auto& e : doc.elements) {
        switch (e.kind) {
        case ElementKind::circle:
        case ElementKind::ellipse:
        case ElementKind::rect:
            out.elements.push_back(e);
            break;
        case ElementKind::path:
        case ElementKind::line:
        case ElementKind::polyline:
        case ElementKind::polygon: {
            Element p;
            p.kind = ElementKind::path;
            p.commands = svg::to_path_commands(e);
            p.fill = e.fill;
            p.opacity = e.opacity;
            out.elements.push_back(std::move(p));
            break;
        }
        case ElementKind::group:
            fail(Errc::unsupported_element, "reshape_primitives: group survived clean");
        }
    }
    return out;
}

namespace {

void quantize_element(Element& e, int places) {
    auto q = [places](double v) { return round_places(v, places); };
    e.cx = q(e.cx);
    e.cy = q(e.cy);
    e.r = q(e.r);
    e.rx = q(e.rx);
    e.ry = q(e.ry);
    e.x = q(e.x);
    e.y = q(e.y);
    e.width = q(e.width);
    e.height = q(e.height);
    for (auto& p : e.points) {
        p.x = q(p.x);
        p.y = q(p.y);
    }
    for (auto& cmd : e.commands) {
        if (cmd.kind == CmdKind::arc_to) {
            cmd.args[0] = q(cmd.args[0]);
            cmd.args[1] = q(cmd.args[1]);
            cmd.args[2] = q(cmd.args[2]);
            // flags stay 0/1
            cmd.args[5] = q(cmd.args[5]);
            cmd.args[6] = q(cmd.args[6]);
        } else {
            for (double& a : cmd.args) a = q(a);
        }
    }
    for (auto& ch : e.children) quantize_element(ch, places);
}

} // namespace

Document quantize_precision(const Document& doc, int places) {
    if (places < 0) fail(Errc::bad_attribute, "quantize_precision: places must be >= 0");
    Document out = doc;
    for (auto& e : out.elements) quantize_element(e, places);
    return out;
}

Document resize_canvas(const Document& doc, int target) {
    if (doc.canvas <= 0 || target <= 0) fail(Errc::bad_attribute, "resize_canvas: canvas must be positive");
    Document out = doc;
    double s = static_cast<double>(target) / doc.canvas;
    for (auto& e : out.elements) raster::scale_element(e, s);
    out.canvas = target;
    return out;
}

namespace {

void count_elements(const Element& e, std::array<int, 8>& counts) {
    counts[static_cast<int>(e.kind)] += 1;
    for (const auto& ch : e.children) count_elements(ch, counts);
}

} // namespace

StatsReport element_stats(const Document& before, const Document& after) {
    StatsReport report;
    for (const auto& e : before.elements) count_elements(e, report.before_counts);
    for (const auto& e : after.elements) count_elements(e, report.after_counts);
    report.before_bytes = svg::serialize_svg(before, svg::CoordMode::relative).size();
    report.after_bytes = svg::serialize_svg(after, svg::CoordMode::relative).size();
    return report;
}

Document normalize_document(const std::string& raw_xml, int precision, int target) {
    Document cleaned = clean(Document{}, raw_xml, target);
    Document reshaped = reshape_primitives(cleaned);
    Document resized = resize_canvas(reshaped, target);
    return quantize_precision(resized, precision);
}

bool is_normalized_grammar(const Document& doc) {
    for (const auto& e : doc.elements) {
        switch (e.kind) {
        case ElementKind::path:
            for (const auto& cmd : e.commands) {
                switch (cmd.kind) {
                case CmdKind::move_to:
                case CmdKind::line_to:
                case CmdKind::cubic_to:
                case CmdKind::quad_to:
                case CmdKind::arc_to:
                case CmdKind::close_path:
                    break;
                default:
                    return false;
                }
            }
            break;
        case ElementKind::circle:
        case ElementKind::ellipse:
        case ElementKind::rect:
            break;
        default:
            return false;
        }
    }
    return true;
}

} // namespace vexel::normalize
