#include "vexel/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace vexel::raster {

using svg::CmdKind;
using svg::Element;
using svg::ElementKind;

namespace {

constexpr double kPi = 3.14159265358979323846;
// cubic control offset approximating a quarter circle
constexpr double kArcMagic = 0.5522847498307936;

double point_line_dist(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab = b - a;
    double len2 = dot(ab, ab);
    if (len2 <= 1e-24) return norm(p - a);
    return std::fabs(cross(ab, p - a)) / std::sqrt(len2);
}

void flatten_cubic(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, double tol, int depth, Contour& out) {
    if (depth > 24 ||
        (point_line_dist(p1, p0, p3) <= tol && point_line_dist(p2, p0, p3) <= tol)) {
        out.push_back(p3);
        return;
    }
    Vec2 p01 = lerp(p0, p1, 0.5), p12 = lerp(p1, p2, 0.5), p23 = lerp(p2, p3, 0.5);
    Vec2 p012 = lerp(p01, p12, 0.5), p123 = lerp(p12, p23, 0.5);
    Vec2 mid = lerp(p012, p123, 0.5);
    flatten_cubic(p0, p01, p012, mid, tol, depth + 1, out);
    flatten_cubic(mid, p123, p23, p3, tol, depth + 1, out);
}

void flatten_quad(Vec2 p0, Vec2 q, Vec2 p2, double tol, Contour& out) {
    // elevate to cubic so one flattener serves both
    Vec2 c1 = lerp(p0, q, 2.0 / 3.0);
    Vec2 c2 = lerp(p2, q, 2.0 / 3.0);
    flatten_cubic(p0, c1, c2, p2, tol, 0, out);
}

// SVG 1.1 F.6.5 endpoint-to-center conversion, then cubic segments of <= 90deg.
void flatten_arc(Vec2 p0, double rx, double ry, double rot_deg, bool large_arc, bool sweep,
                 Vec2 p1, double tol, Contour& out) {
    if (rx == 0.0 || ry == 0.0) { // degenerate arc: straight line
        out.push_back(p1);
        return;
    }
    rx = std::fabs(rx);
    ry = std::fabs(ry);
    double phi = rot_deg * kPi / 180.0;
    double cosp = std::cos(phi), sinp = std::sin(phi);

    double dx2 = (p0.x - p1.x) / 2.0, dy2 = (p0.y - p1.y) / 2.0;
    double x1p = cosp * dx2 + sinp * dy2;
    double y1p = -sinp * dx2 + cosp * dy2;

    // scale radii up if the endpoints cannot be connected (F.6.6)
    double lambda = (x1p * x1p) / (rx * rx) + (y1p * y1p) / (ry * ry);
    if (lambda > 1.0) {
        double s = std::sqrt(lambda);
        rx *= s;
        ry *= s;
    }

    double rx2 = rx * rx, ry2 = ry * ry;
    double num = rx2 * ry2 - rx2 * y1p * y1p - ry2 * x1p * x1p;
    double den = rx2 * y1p * y1p + ry2 * x1p * x1p;
    double coef = std::sqrt(std::max(0.0, num / den));
    if (large_arc == sweep) coef = -coef;
    double cxp = coef * rx * y1p / ry;
    double cyp = -coef * ry * x1p / rx;

    double cx = cosp * cxp - sinp * cyp + (p0.x + p1.x) / 2.0;
    double cy = sinp * cxp + cosp * cyp + (p0.y + p1.y) / 2.0;

    auto angle = [](double ux, double uy, double vx, double vy) {
        double d = std::sqrt((ux * ux + uy * uy) * (vx * vx + vy * vy));
        double c = std::clamp((ux * vx + uy * vy) / d, -1.0, 1.0);
        double a = std::acos(c);
        if (ux * vy - uy * vx < 0) a = -a;
        return a;
    };
    double theta1 = angle(1, 0, (x1p - cxp) / rx, (y1p - cyp) / ry);
    double dtheta = angle((x1p - cxp) / rx, (y1p - cyp) / ry, (-x1p - cxp) / rx, (-y1p - cyp) / ry);
    if (!sweep && dtheta > 0) dtheta -= 2 * kPi;
    if (sweep && dtheta < 0) dtheta += 2 * kPi;

    int segments = std::max(1, static_cast<int>(std::ceil(std::fabs(dtheta) / (kPi / 2.0) - 1e-9)));
    double delta = dtheta / segments;
    double alpha = 4.0 / 3.0 * std::tan(delta / 4.0);

    auto point_at = [&](double t) -> Vec2 {
        double x = rx * std::cos(t), y = ry * std::sin(t);
        return {cosp * x - sinp * y + cx, sinp * x + cosp * y + cy};
    };
    auto deriv_at = [&](double t) -> Vec2 {
        double x = -rx * std::sin(t), y = ry * std::cos(t);
        return {cosp * x - sinp * y, sinp * x + cosp * y};
    };

    Vec2 prev = p0;
    for (int i = 0; i < segments; ++i) {
        double t0 = theta1 + i * delta;
        double t1 = t0 + delta;
        Vec2 end = (i == segments - 1) ? p1 : point_at(t1);
        Vec2 d0 = deriv_at(t0), d1 = deriv_at(t1);
        Vec2 c1{prev.x + alpha * d0.x, prev.y + alpha * d0.y};
        Vec2 c2{end.x - alpha * d1.x, end.y - alpha * d1.y};
        flatten_cubic(prev, c1, c2, end, tol, 0, out);
        prev = end;
    }
}

void close_contour(std::vector<Contour>& polys, Contour& cur) {
    if (cur.size() >= 3) polys.push_back(std::move(cur));
    cur.clear();
}

std::vector<Contour> flatten_shape(const Element& e, double tol) {
    std::vector<Contour> polys;
    Contour c;
    auto cubic_ring = [&](Vec2 start, std::initializer_list<std::array<Vec2, 3>> segs) {
        c.push_back(start);
        for (const auto& s : segs) flatten_cubic(c.back(), s[0], s[1], s[2], tol, 0, c);
        close_contour(polys, c);
    };

    if (e.kind == ElementKind::circle || e.kind == ElementKind::ellipse) {
        double rx = e.kind == ElementKind::circle ? e.r : e.rx;
        double ry = e.kind == ElementKind::circle ? e.r : e.ry;
        if (rx <= 0 || ry <= 0) return polys;
        double kx = kArcMagic * rx, ky = kArcMagic * ry;
        Vec2 east{e.cx + rx, e.cy}, south{e.cx, e.cy + ry}, west{e.cx - rx, e.cy}, north{e.cx, e.cy - ry};
        cubic_ring(east, {
            std::array<Vec2, 3>{Vec2{east.x, east.y + ky}, Vec2{south.x + kx, south.y}, south},
            std::array<Vec2, 3>{Vec2{south.x - kx, south.y}, Vec2{west.x, west.y + ky}, west},
            std::array<Vec2, 3>{Vec2{west.x, west.y - ky}, Vec2{north.x - kx, north.y}, north},
            std::array<Vec2, 3>{Vec2{north.x + kx, north.y}, Vec2{east.x, east.y - ky}, east},
        });
        return polys;
    }

    // rect
    double x0 = e.x, y0 = e.y, x1 = e.x + e.width, y1 = e.y + e.height;
    if (e.width <= 0 || e.height <= 0) return polys;
    double rx = std::min(e.rx, e.width / 2), ry = std::min(e.ry, e.height / 2);
    if (rx <= 0 || ry <= 0) {
        polys.push_back({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
        return polys;
    }
    double kx = kArcMagic * rx, ky = kArcMagic * ry;
    c.push_back({x0 + rx, y0});
    c.push_back({x1 - rx, y0});
    flatten_cubic(c.back(), {x1 - rx + kx, y0}, {x1, y0 + ry - ky}, {x1, y0 + ry}, tol, 0, c);
    c.push_back({x1, y1 - ry});
    flatten_cubic(c.back(), {x1, y1 - ry + ky}, {x1 - rx + kx, y1}, {x1 - rx, y1}, tol, 0, c);
    c.push_back({x0 + rx, y1});
    flatten_cubic(c.back(), {x0 + rx - kx, y1}, {x0, y1 - ry + ky}, {x0, y1 - ry}, tol, 0, c);
    c.push_back({x0, y0 + ry});
    flatten_cubic(c.back(), {x0, y0 + ry - ky}, {x0 + rx - kx, y0}, {x0 + rx, y0}, tol, 0, c);
    close_contour(polys, c);
    return polys;
}

} // namespace

std::vector<Contour> flatten(const Element& e, double tol) {
    if (e.kind == ElementKind::circle || e.kind == ElementKind::ellipse || e.kind == ElementKind::rect)
        return flatten_shape(e, tol);

    std::vector<Contour> polys;
    Contour cur;
    Vec2 pos{0, 0}, start{0, 0};
    for (const auto& cmd : svg::to_path_commands(e)) {
        switch (cmd.kind) {
        case CmdKind::move_to:
            close_contour(polys, cur);
            pos = start = {cmd.args[0], cmd.args[1]};
            cur.push_back(pos);
            break;
        case CmdKind::line_to:
            pos = {cmd.args[0], cmd.args[1]};
            cur.push_back(pos);
            break;
        case CmdKind::cubic_to: {
            Vec2 end{cmd.args[4], cmd.args[5]};
            flatten_cubic(pos, {cmd.args[0], cmd.args[1]}, {cmd.args[2], cmd.args[3]}, end, tol, 0, cur);
            pos = end;
            break;
        }
        case CmdKind::quad_to: {
            Vec2 end{cmd.args[2], cmd.args[3]};
            flatten_quad(pos, {cmd.args[0], cmd.args[1]}, end, tol, cur);
            pos = end;
            break;
        }
        case CmdKind::arc_to: {
            Vec2 end{cmd.args[5], cmd.args[6]};
            flatten_arc(pos, cmd.args[0], cmd.args[1], cmd.args[2], cmd.args[3] != 0.0,
                        cmd.args[4] != 0.0, end, tol, cur);
            pos = end;
            break;
        }
        case CmdKind::close_path:
            pos = start;
            close_contour(polys, cur);
            break;
        default:
            break; // to_path_commands never emits H/V/S/T
        }
    }
    close_contour(polys, cur);
    return polys;
}

namespace {

constexpr int kSS = 4; // supersampling factor per axis

struct Edge {
    double x0, y0, x1, y1; // stored with y0 < y1
    int dir;               // +1 if the original edge pointed toward increasing y
};

void fill_polygons(std::vector<double>& buf, int w, int h, const std::vector<Contour>& polys,
                   const svg::Color& color, double alpha) {
    std::vector<Edge> edges;
    double ymin = 1e300, ymax = -1e300;
    for (const auto& poly : polys) {
        std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i) {
            Vec2 a = poly[i], b = poly[(i + 1) % n];
            if (a.y == b.y) continue;
            int dir = b.y > a.y ? 1 : -1;
            if (dir < 0) std::swap(a, b);
            edges.push_back({a.x, a.y, b.x, b.y, dir});
            ymin = std::min(ymin, a.y);
            ymax = std::max(ymax, b.y);
        }
    }
    if (edges.empty()) return;

    int row0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
    int row1 = std::min(h - 1, static_cast<int>(std::ceil(ymax)));
    std::vector<std::pair<double, int>> crossings;

    const double rgb[3] = {color.r, color.g, color.b};
    for (int j = row0; j <= row1; ++j) {
        double y = j + 0.5;
        crossings.clear();
        for (const auto& e : edges) {
            if (y < e.y0 || y >= e.y1) continue; // half-open, keeps shared vertices exact
            double x = e.x0 + (y - e.y0) * (e.x1 - e.x0) / (e.y1 - e.y0);
            crossings.emplace_back(x, e.dir);
        }
        if (crossings.empty()) continue;
        std::sort(crossings.begin(), crossings.end());
        int winding = 0;
        for (std::size_t k = 0; k + 1 <= crossings.size(); ++k) {
            winding += crossings[k].second;
            if (winding == 0 || k + 1 >= crossings.size()) continue;
            double xa = crossings[k].first, xb = crossings[k + 1].first;
            int i0 = std::max(0, static_cast<int>(std::ceil(xa - 0.5)));
            int i1 = std::min(w - 1, static_cast<int>(std::ceil(xb - 0.5)) - 1);
            for (int i = i0; i <= i1; ++i) {
                double* px = &buf[(static_cast<std::size_t>(j) * w + i) * 3];
                for (int ch = 0; ch < 3; ++ch) px[ch] += alpha * (rgb[ch] - px[ch]);
            }
        }
    }
}

void render_element(std::vector<double>& buf, int w, int h, const Element& e, double scale, double tol) {
    if (e.kind == ElementKind::group) {
        for (const auto& ch : e.children) render_element(buf, w, h, ch, scale, tol);
        return;
    }
    if (e.opacity <= 0.0) return;
    Element scaled = e;
    scale_element(scaled, scale);
    auto polys = flatten(scaled, tol);
    // to supersample coordinates (exact power-of-two scale)
    for (auto& poly : polys)
        for (auto& p : poly) {
            p.x *= kSS;
            p.y *= kSS;
        }
    fill_polygons(buf, w, h, polys, e.fill, e.opacity);
}

} // namespace

RasterGrid rasterize(const svg::Document& doc, int size, double tol) {
    if (size < 1) fail(Errc::dimension_mismatch, "rasterize: size must be >= 1");
    int w = size * kSS, h = size * kSS;
    std::vector<double> buf(static_cast<std::size_t>(w) * h * 3, 1.0);
    double scale = static_cast<double>(size) / doc.canvas;
    for (const auto& e : doc.elements) render_element(buf, w, h, e, scale, tol);

    RasterGrid grid;
    grid.width = size;
    grid.height = size;
    grid.pixels.assign(static_cast<std::size_t>(size) * size * 3, 0.0);
    const double inv = 1.0 / (kSS * kSS);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int sy = 0; sy < kSS; ++sy)
                    for (int sx = 0; sx < kSS; ++sx)
                        acc += buf[(static_cast<std::size_t>(y * kSS + sy) * w + (x * kSS + sx)) * 3 + c];
                grid.at(x, y, c) = acc * inv;
            }
        }
    }
    return grid;
}

double raster_diff(const RasterGrid& a, const RasterGrid& b) {
    if (a.width != b.width || a.height != b.height)
        fail(Errc::dimension_mismatch, "raster_diff: grids differ in size");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) acc += std::fabs(a.pixels[i] - b.pixels[i]);
    return a.pixels.empty() ? 0.0 : acc / static_cast<double>(a.pixels.size());
}

std::string to_ppm(const RasterGrid& grid) {
    std::string out = "P6\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n255\n";
    out.reserve(out.size() + grid.pixels.size());
    for (double v : grid.pixels) {
        int byte = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        out += static_cast<char>(byte);
    }
    return out;
}

void write_ppm(const RasterGrid& grid, const std::string& path) {
    write_file_atomic(path, to_ppm(grid));
}

void scale_element(Element& e, double s) {
    e.cx *= s;
    e.cy *= s;
    e.r *= s;
    e.rx *= s;
    e.ry *= s;
    e.x *= s;
    e.y *= s;
    e.width *= s;
    e.height *= s;
    for (auto& p : e.points) {
        p.x *= s;
        p.y *= s;
    }
    for (auto& cmd : e.commands) {
        if (cmd.kind == CmdKind::arc_to) {
            cmd.args[0] *= s;
            cmd.args[1] *= s;
            // args[2..4]: rotation and flags are scale-invariant
            cmd.args[5] *= s;
            cmd.args[6] *= s;
        } else {
            for (double& a : cmd.args) a *= s;
        }
    }
    for (auto& ch : e.children) scale_element(ch, s);
}

} // namespace vexel::raster
