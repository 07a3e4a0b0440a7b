#include "vexel/svg.hpp"

#include "vexel/xml.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>

namespace vexel::svg {

const char* kind_name(ElementKind k) {
    switch (k) {
    case ElementKind::path: return "path";
    case ElementKind::circle: return "circle";
    case ElementKind::ellipse: return "ellipse";
    case ElementKind::rect: return "rect";
    case ElementKind::line: return "line";
    case ElementKind::polyline: return "polyline";
    case ElementKind::polygon: return "polygon";
    case ElementKind::group: return "g";
    }
    return "?";
}

int cmd_arg_count(CmdKind k) {
    switch (k) {
    case CmdKind::move_to: return 2;
    case CmdKind::line_to: return 2;
    case CmdKind::cubic_to: return 6;
    case CmdKind::quad_to: return 4;
    case CmdKind::arc_to: return 7;
    case CmdKind::close_path: return 0;
    case CmdKind::hline_to: return 1;
    case CmdKind::vline_to: return 1;
    case CmdKind::smooth_cubic_to: return 4;
    case CmdKind::smooth_quad_to: return 2;
    }
    return 0;
}

char cmd_letter(CmdKind k) {
    switch (k) {
    case CmdKind::move_to: return 'M';
    case CmdKind::line_to: return 'L';
    case CmdKind::cubic_to: return 'C';
    case CmdKind::quad_to: return 'Q';
    case CmdKind::arc_to: return 'A';
    case CmdKind::close_path: return 'Z';
    case CmdKind::hline_to: return 'H';
    case CmdKind::vline_to: return 'V';
    case CmdKind::smooth_cubic_to: return 'S';
    case CmdKind::smooth_quad_to: return 'T';
    }
    return '?';
}

namespace {

// ---------------------------------------------------------------- numbers

double parse_number(const std::string& s, const char* elem, const char* attr) {
    const char* c = s.c_str();
    char* end = nullptr;
    double v = std::strtod(c, &end);
    if (end == c) fail(Errc::bad_attribute, std::string(elem) + "/" + attr + ": not a number: '" + s + "'");
    while (*end == ' ') ++end;
    // tolerate a px suffix on lengths
    if (end[0] == 'p' && end[1] == 'x') end += 2;
    if (*end != '\0') fail(Errc::bad_attribute, std::string(elem) + "/" + attr + ": trailing junk in '" + s + "'");
    if (!std::isfinite(v)) fail(Errc::bad_attribute, std::string(elem) + "/" + attr + ": non-finite value");
    return v;
}

std::vector<double> parse_number_list(const std::string& s, const char* elem, const char* attr) {
    std::vector<double> out;
    const char* c = s.c_str();
    for (;;) {
        while (*c == ' ' || *c == ',' || *c == '\t' || *c == '\n' || *c == '\r') ++c;
        if (*c == '\0') break;
        char* end = nullptr;
        double v = std::strtod(c, &end);
        if (end == c) fail(Errc::bad_attribute, std::string(elem) + "/" + attr + ": bad number list");
        if (!std::isfinite(v)) fail(Errc::bad_attribute, std::string(elem) + "/" + attr + ": non-finite value");
        out.push_back(v);
        c = end;
    }
    return out;
}

// ---------------------------------------------------------------- colors

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

const std::pair<const char*, Color> kKeywordColors[] = {
    {"black", {0, 0, 0}},
    {"silver", {192 / 255.0, 192 / 255.0, 192 / 255.0}},
    {"gray", {128 / 255.0, 128 / 255.0, 128 / 255.0}},
    {"white", {1, 1, 1}},
    {"maroon", {128 / 255.0, 0, 0}},
    {"red", {1, 0, 0}},
    {"purple", {128 / 255.0, 0, 128 / 255.0}},
    {"fuchsia", {1, 0, 1}},
    {"green", {0, 128 / 255.0, 0}},
    {"lime", {0, 1, 0}},
    {"olive", {128 / 255.0, 128 / 255.0, 0}},
    {"yellow", {1, 1, 0}},
    {"navy", {0, 0, 128 / 255.0}},
    {"blue", {0, 0, 1}},
    {"teal", {0, 128 / 255.0, 128 / 255.0}},
    {"aqua", {0, 1, 1}},
};

// Returns nullopt for "none" (caller maps it to opacity 0).
std::optional<Color> parse_color(std::string s, const char* elem) {
    // trim + lowercase
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    if (a == std::string::npos) fail(Errc::bad_attribute, std::string(elem) + "/fill: empty value");
    s = s.substr(a, b - a + 1);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });

    if (s == "none") return std::nullopt;
    if (s[0] == '#') {
        if (s.size() == 4) {
            int r = hex_digit(s[1]), g = hex_digit(s[2]), b3 = hex_digit(s[3]);
            if (r < 0 || g < 0 || b3 < 0) fail(Errc::bad_attribute, std::string(elem) + "/fill: bad hex color '" + s + "'");
            return Color{(r * 17) / 255.0, (g * 17) / 255.0, (b3 * 17) / 255.0};
        }
        if (s.size() == 7) {
            int v[6];
            for (int i = 0; i < 6; ++i) {
                v[i] = hex_digit(s[1 + i]);
                if (v[i] < 0) fail(Errc::bad_attribute, std::string(elem) + "/fill: bad hex color '" + s + "'");
            }
            return Color{(v[0] * 16 + v[1]) / 255.0, (v[2] * 16 + v[3]) / 255.0, (v[4] * 16 + v[5]) / 255.0};
        }
        fail(Errc::bad_attribute, std::string(elem) + "/fill: bad hex color '" + s + "'");
    }
    if (s.rfind("rgb(", 0) == 0 && s.back() == ')') {
        auto nums = parse_number_list(s.substr(4, s.size() - 5), elem, "fill");
        if (nums.size() != 3) fail(Errc::bad_attribute, std::string(elem) + "/fill: rgb() needs 3 components");
        for (double& n : nums) {
            if (n < 0 || n > 255) fail(Errc::bad_attribute, std::string(elem) + "/fill: rgb() component out of range");
        }
        return Color{nums[0] / 255.0, nums[1] / 255.0, nums[2] / 255.0};
    }
    for (const auto& [name, col] : kKeywordColors) {
        if (s == name) return col;
    }
    fail(Errc::bad_attribute, std::string(elem) + "/fill: unsupported color '" + s + "'");
}

// ---------------------------------------------------------------- path data

struct PathScanner {
    const char* c;
    const std::string& src;

    void skip_sep() {
        while (*c == ' ' || *c == ',' || *c == '\t' || *c == '\n' || *c == '\r') ++c;
    }
    bool eof() {
        skip_sep();
        return *c == '\0';
    }
    bool number_ahead() {
        skip_sep();
        char ch = *c;
        return (ch >= '0' && ch <= '9') || ch == '-' || ch == '+' || ch == '.';
    }
    double number() {
        skip_sep();
        char* end = nullptr;
        double v = std::strtod(c, &end);
        if (end == c || !std::isfinite(v)) fail(Errc::bad_attribute, "path/d: bad number near '" + std::string(c).substr(0, 12) + "'");
        c = end;
        return v;
    }
};

std::vector<PathCommand> parse_path_data(const std::string& d) {
    std::vector<PathCommand> cmds;
    PathScanner sc{d.c_str(), d};
    Vec2 cur{0, 0};
    Vec2 start{0, 0};
    bool after_close = false;
    bool any = false;

    while (!sc.eof()) {
        char letter = *sc.c++;
        bool rel = std::islower(static_cast<unsigned char>(letter));
        char up = static_cast<char>(std::toupper(static_cast<unsigned char>(letter)));
        if (!any && up != 'M') fail(Errc::bad_attribute, "path/d: must start with a moveto");
        if (after_close && up != 'M' && up != 'Z')
            fail(Errc::bad_attribute, "path/d: subpath after Z must start with M");
        any = true;

        auto take_point = [&](bool relative) -> Vec2 {
            double x = sc.number();
            double y = sc.number();
            if (relative) return {cur.x + x, cur.y + y};
            return {x, y};
        };

        int group = 0; // repetition counter for implicit command repeats
        do {
            PathCommand cmd;
            switch (up) {
            case 'M': {
                Vec2 p = take_point(rel);
                // implicit lineto on repeats
                cmd.kind = (group == 0) ? CmdKind::move_to : CmdKind::line_to;
                cmd.args = {p.x, p.y};
                cur = p;
                if (group == 0) start = p;
                after_close = false;
                break;
            }
            case 'L': {
                Vec2 p = take_point(rel);
                cmd.kind = CmdKind::line_to;
                cmd.args = {p.x, p.y};
                cur = p;
                break;
            }
            case 'H': {
                double x = sc.number();
                if (rel) x += cur.x;
                cmd.kind = CmdKind::hline_to;
                cmd.args = {x};
                cur.x = x;
                break;
            }
            case 'V': {
                double y = sc.number();
                if (rel) y += cur.y;
                cmd.kind = CmdKind::vline_to;
                cmd.args = {y};
                cur.y = y;
                break;
            }
            case 'C': {
                Vec2 c1 = take_point(rel), c2 = take_point(rel), p = take_point(rel);
                cmd.kind = CmdKind::cubic_to;
                cmd.args = {c1.x, c1.y, c2.x, c2.y, p.x, p.y};
                cur = p;
                break;
            }
            case 'S': {
                Vec2 c2 = take_point(rel), p = take_point(rel);
                cmd.kind = CmdKind::smooth_cubic_to;
                cmd.args = {c2.x, c2.y, p.x, p.y};
                cur = p;
                break;
            }
            case 'Q': {
                Vec2 c1 = take_point(rel), p = take_point(rel);
                cmd.kind = CmdKind::quad_to;
                cmd.args = {c1.x, c1.y, p.x, p.y};
                cur = p;
                break;
            }
            case 'T': {
                Vec2 p = take_point(rel);
                cmd.kind = CmdKind::smooth_quad_to;
                cmd.args = {p.x, p.y};
                cur = p;
                break;
            }
            case 'A': {
                double arx = sc.number(), ary = sc.number(), rot = sc.number();
                double la = sc.number(), sw = sc.number();
                if ((la != 0 && la != 1) || (sw != 0 && sw != 1))
                    fail(Errc::bad_attribute, "path/d: arc flags must be 0 or 1");
                if (arx < 0 || ary < 0) fail(Errc::bad_attribute, "path/d: negative arc radius");
                Vec2 p = take_point(rel);
                cmd.kind = CmdKind::arc_to;
                cmd.args = {arx, ary, rot, la, sw, p.x, p.y};
                cur = p;
                break;
            }
            case 'Z': {
                cmd.kind = CmdKind::close_path;
                cur = start;
                after_close = true;
                break;
            }
            default:
                fail(Errc::bad_attribute, std::string("path/d: unknown command '") + letter + "'");
            }
            cmds.push_back(std::move(cmd));
            ++group;
        } while (up != 'Z' && sc.number_ahead());
    }
    if (cmds.empty()) fail(Errc::bad_attribute, "path/d: empty path data");
    return cmds;
}

// ---------------------------------------------------------------- builder

struct Inherited {
    std::optional<Color> fill;
    double opacity = 1.0;
};

struct Builder {
    bool lenient = false;
    std::vector<std::string>* warnings = nullptr;
    std::map<std::string, const xml::Node*> ids;

    void collect_ids(const xml::Node& n) {
        if (const std::string* id = n.attr("id")) ids.emplace(*id, &n);
        for (const auto& ch : n.children) collect_ids(ch);
    }

    // Attributes that would silently change rendering if dropped are errors;
    // anything else unknown is recorded as a warning and ignored.
    void check_attrs(const xml::Node& n, std::initializer_list<const char*> supported) {
        for (const auto& [key, value] : n.attrs) {
            bool known = false;
            for (const char* s : supported) {
                if (key == s) { known = true; break; }
            }
            if (known) continue;
            if (key.rfind("stroke", 0) == 0 || key == "transform" || key == "style" ||
                key == "fill-opacity" || key == "fill-rule" || key == "clip-path" || key == "mask")
                fail(Errc::bad_attribute, n.name + "/" + key + ": unsupported presentation attribute");
            if (warnings) warnings->push_back(n.name + ": ignored attribute '" + key + "'");
        }
    }

    double attr_num(const xml::Node& n, const char* key, double fallback) {
        const std::string* v = n.attr(key);
        if (!v) return fallback;
        return parse_number(*v, n.name.c_str(), key);
    }

    // fill/opacity resolution shared by all drawables and containers
    struct Style {
        std::optional<Color> fill; // element's own fill, if any
        double own_opacity = 1.0;
        bool fill_none = false;
    };

    Style read_style(const xml::Node& n) {
        Style st;
        if (const std::string* f = n.attr("fill")) {
            auto col = parse_color(*f, n.name.c_str());
            if (col) st.fill = *col;
            else st.fill_none = true;
        }
        if (const std::string* o = n.attr("opacity")) {
            double v = parse_number(*o, n.name.c_str(), "opacity");
            if (v < 0 || v > 1) fail(Errc::bad_attribute, n.name + "/opacity: out of [0,1]");
            st.own_opacity = v;
        }
        return st;
    }

    // Effective paint for a leaf: own fill, else inherited, else black;
    // fill="none" forces opacity 0 (the alpha visibility channel).
    void apply_style(Element& e, const Style& st, const Inherited& inh) {
        if (st.fill) e.fill = *st.fill;
        else if (inh.fill) e.fill = *inh.fill;
        else e.fill = Color{0, 0, 0};
        e.opacity = inh.opacity * st.own_opacity;
        if (st.fill_none) e.opacity = 0.0;
    }

    Inherited push_style(const Style& st, const Inherited& inh) {
        Inherited next = inh;
        if (st.fill) next.fill = *st.fill;
        next.opacity = inh.opacity * st.own_opacity;
        if (st.fill_none) next.opacity = 0.0;
        return next;
    }

    std::optional<Element> build(const xml::Node& n, const Inherited& inh, int depth) {
        if (depth > 64) fail(Errc::unresolvable_reference, "element nesting too deep (reference cycle?)");
        const std::string& tag = n.name;

        if (tag == "title" || tag == "desc" || tag == "metadata" || tag == "defs" || tag == "style") {
            if (!lenient) fail(Errc::unsupported_element, tag);
            return std::nullopt; // dropped (defs content reachable through ids)
        }
        if (tag == "use") {
            if (!lenient) fail(Errc::unsupported_element, tag);
            return build_use(n, inh, depth);
        }

        Style st = read_style(n);

        if (tag == "g") {
            check_attrs(n, {"fill", "opacity"});
            Element g;
            g.kind = ElementKind::group;
            Inherited next = push_style(st, inh);
            for (const auto& ch : n.children) {
                if (auto e = build(ch, next, depth + 1)) g.children.push_back(std::move(*e));
            }
            return g;
        }

        Element e;
        if (tag == "path") {
            check_attrs(n, {"d", "fill", "opacity"});
            const std::string* d = n.attr("d");
            if (!d) fail(Errc::bad_attribute, "path/d: missing");
            e.kind = ElementKind::path;
            e.commands = parse_path_data(*d);
        } else if (tag == "circle") {
            check_attrs(n, {"cx", "cy", "r", "fill", "opacity"});
            e.kind = ElementKind::circle;
            e.cx = attr_num(n, "cx", 0);
            e.cy = attr_num(n, "cy", 0);
            e.r = attr_num(n, "r", 0);
            if (e.r < 0) fail(Errc::bad_attribute, "circle/r: negative radius");
        } else if (tag == "ellipse") {
            check_attrs(n, {"cx", "cy", "rx", "ry", "fill", "opacity"});
            e.kind = ElementKind::ellipse;
            e.cx = attr_num(n, "cx", 0);
            e.cy = attr_num(n, "cy", 0);
            e.rx = attr_num(n, "rx", 0);
            e.ry = attr_num(n, "ry", 0);
            if (e.rx < 0 || e.ry < 0) fail(Errc::bad_attribute, "ellipse: negative radius");
        } else if (tag == "rect") {
            check_attrs(n, {"x", "y", "width", "height", "rx", "ry", "fill", "opacity"});
            e.kind = ElementKind::rect;
            e.x = attr_num(n, "x", 0);
            e.y = attr_num(n, "y", 0);
            e.width = attr_num(n, "width", 0);
            e.height = attr_num(n, "height", 0);
            if (e.width < 0 || e.height < 0) fail(Errc::bad_attribute, "rect: negative size");
            bool has_rx = n.attr("rx") != nullptr, has_ry = n.attr("ry") != nullptr;
            e.rx = attr_num(n, "rx", 0);
            e.ry = attr_num(n, "ry", 0);
            if (has_rx && !has_ry) e.ry = e.rx;
            if (has_ry && !has_rx) e.rx = e.ry;
            if (e.rx < 0 || e.ry < 0) fail(Errc::bad_attribute, "rect: negative corner radius");
            e.rx = std::min(e.rx, e.width / 2);
            e.ry = std::min(e.ry, e.height / 2);
        } else if (tag == "line") {
            check_attrs(n, {"x1", "y1", "x2", "y2", "fill", "opacity"});
            e.kind = ElementKind::line;
            e.points = {{attr_num(n, "x1", 0), attr_num(n, "y1", 0)},
                        {attr_num(n, "x2", 0), attr_num(n, "y2", 0)}};
        } else if (tag == "polyline" || tag == "polygon") {
            check_attrs(n, {"points", "fill", "opacity"});
            const std::string* pts = n.attr("points");
            if (!pts) fail(Errc::bad_attribute, tag + "/points: missing");
            auto nums = parse_number_list(*pts, tag.c_str(), "points");
            if (nums.size() < 4 || nums.size() % 2 != 0)
                fail(Errc::bad_attribute, tag + "/points: need an even count of at least 4 numbers");
            e.kind = tag == "polygon" ? ElementKind::polygon : ElementKind::polyline;
            for (std::size_t i = 0; i + 1 < nums.size(); i += 2) e.points.push_back({nums[i], nums[i + 1]});
        } else {
            fail(Errc::unsupported_element, tag);
        }
        apply_style(e, st, inh);
        return e;
    }

    std::optional<Element> build_use(const xml::Node& n, const Inherited& inh, int depth) {
        check_attrs(n, {"href", "xlink:href", "x", "y", "fill", "opacity"});
        const std::string* href = n.attr("href");
        if (!href) href = n.attr("xlink:href");
        if (!href || href->empty() || (*href)[0] != '#')
            fail(Errc::unresolvable_reference, "use: missing or non-local href");
        std::string id = href->substr(1);
        auto it = ids.find(id);
        if (it == ids.end()) fail(Errc::unresolvable_reference, "use: no element with id '" + id + "'");
        Style st = read_style(n);
        Inherited next = push_style(st, inh);
        auto built = build(*it->second, next, depth + 1);
        if (!built) fail(Errc::unresolvable_reference, "use: reference '" + id + "' is not a drawable element");
        double dx = attr_num(n, "x", 0), dy = attr_num(n, "y", 0);
        if (dx != 0 || dy != 0) translate(*built, dx, dy);
        return built;
    }

    static void translate(Element& e, double dx, double dy);
};

void Builder::translate(Element& e, double dx, double dy) {
    e.cx += (e.kind == ElementKind::circle || e.kind == ElementKind::ellipse) ? dx : 0;
    e.cy += (e.kind == ElementKind::circle || e.kind == ElementKind::ellipse) ? dy : 0;
    if (e.kind == ElementKind::rect) {
        e.x += dx;
        e.y += dy;
    }
    for (auto& p : e.points) {
        p.x += dx;
        p.y += dy;
    }
    for (auto& cmd : e.commands) {
        switch (cmd.kind) {
        case CmdKind::hline_to: cmd.args[0] += dx; break;
        case CmdKind::vline_to: cmd.args[0] += dy; break;
        case CmdKind::arc_to:
            cmd.args[5] += dx;
            cmd.args[6] += dy;
            break;
        case CmdKind::close_path: break;
        default:
            for (std::size_t i = 0; i + 1 < cmd.args.size(); i += 2) {
                cmd.args[i] += dx;
                cmd.args[i + 1] += dy;
            }
        }
    }
    for (auto& ch : e.children) translate(ch, dx, dy);
}

void translate_doc(Document& doc, double dx, double dy) {
    if (dx == 0 && dy == 0) return;
    for (auto& e : doc.elements) Builder::translate(e, dx, dy);
}

Document parse_impl(const std::string& text, bool lenient) {
    xml::Node root = xml::parse(text);
    if (root.name != "svg") fail(Errc::malformed_xml, "root element is <" + root.name + ">, expected <svg>");

    Document doc;
    Builder builder;
    builder.lenient = lenient;
    builder.warnings = &doc.warnings;
    if (lenient) builder.collect_ids(root);

    double vb_x = 0, vb_y = 0, vb_w = 0, vb_h = 0;
    if (const std::string* vb = root.attr("viewBox")) {
        auto nums = parse_number_list(*vb, "svg", "viewBox");
        if (nums.size() != 4 || nums[2] <= 0 || nums[3] <= 0)
            fail(Errc::bad_attribute, "svg/viewBox: expected 'minx miny w h' with positive size");
        vb_x = nums[0];
        vb_y = nums[1];
        vb_w = nums[2];
        vb_h = nums[3];
    } else if (root.attr("width") && root.attr("height")) {
        vb_w = parse_number(*root.attr("width"), "svg", "width");
        vb_h = parse_number(*root.attr("height"), "svg", "height");
        if (vb_w <= 0 || vb_h <= 0) fail(Errc::bad_attribute, "svg: non-positive width/height");
    } else {
        fail(Errc::bad_attribute, "svg: needs viewBox or width+height");
    }

    builder.check_attrs(root, {"viewBox", "width", "height", "fill", "opacity", "xmlns"});
    Builder::Style root_style = builder.read_style(root);
    Inherited inh = builder.push_style(root_style, Inherited{});

    for (const auto& ch : root.children) {
        if (auto e = builder.build(ch, inh, 0)) doc.elements.push_back(std::move(*e));
    }

    // Center non-square or offset viewBoxes into a square canvas.
    double side = std::max(vb_w, vb_h);
    doc.canvas = static_cast<int>(std::ceil(side - 1e-9));
    double dx = -vb_x + (doc.canvas - vb_w) / 2.0;
    double dy = -vb_y + (doc.canvas - vb_h) / 2.0;
    translate_doc(doc, dx, dy);
    return doc;
}

} // namespace

Document parse_svg(const std::string& text) { return parse_impl(text, false); }
Document parse_svg_lenient(const std::string& text) { return parse_impl(text, true); }

// ---------------------------------------------------------------- serialize

namespace {

std::string color_hex(const Color& c) {
    auto to8 = [](double v) {
        int i = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        return i;
    };
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", to8(c.r), to8(c.g), to8(c.b));
    return buf;
}

void append_num(std::string& out, double v) {
    if (!out.empty()) {
        char last = out.back();
        bool after_number = (last >= '0' && last <= '9') || last == '.';
        if (after_number && !(v < 0)) out += ' '; // a leading '-' already separates
    }
    out += format_double(v);
}

std::string path_data(const std::vector<PathCommand>& cmds, CoordMode mode) {
    std::string out;
    Vec2 cur{0, 0};
    Vec2 start{0, 0};
    bool rel = mode == CoordMode::relative;

    auto emit_pt = [&](Vec2 p) {
        if (rel) {
            append_num(out, p.x - cur.x);
            append_num(out, p.y - cur.y);
        } else {
            append_num(out, p.x);
            append_num(out, p.y);
        }
    };

    for (const auto& cmd : cmds) {
        char letter = cmd_letter(cmd.kind);
        out += rel ? static_cast<char>(std::tolower(letter)) : letter;
        switch (cmd.kind) {
        case CmdKind::move_to:
        case CmdKind::line_to:
        case CmdKind::smooth_quad_to: {
            Vec2 p{cmd.args[0], cmd.args[1]};
            emit_pt(p);
            cur = p;
            if (cmd.kind == CmdKind::move_to) start = p;
            break;
        }
        case CmdKind::hline_to:
            append_num(out, rel ? cmd.args[0] - cur.x : cmd.args[0]);
            cur.x = cmd.args[0];
            break;
        case CmdKind::vline_to:
            append_num(out, rel ? cmd.args[0] - cur.y : cmd.args[0]);
            cur.y = cmd.args[0];
            break;
        case CmdKind::cubic_to: {
            emit_pt({cmd.args[0], cmd.args[1]});
            emit_pt({cmd.args[2], cmd.args[3]});
            Vec2 p{cmd.args[4], cmd.args[5]};
            emit_pt(p);
            cur = p;
            break;
        }
        case CmdKind::smooth_cubic_to:
        case CmdKind::quad_to: {
            emit_pt({cmd.args[0], cmd.args[1]});
            Vec2 p{cmd.args[2], cmd.args[3]};
            emit_pt(p);
            cur = p;
            break;
        }
        case CmdKind::arc_to: {
            append_num(out, cmd.args[0]);
            append_num(out, cmd.args[1]);
            append_num(out, cmd.args[2]);
            append_num(out, cmd.args[3]);
            append_num(out, cmd.args[4]);
            Vec2 p{cmd.args[5], cmd.args[6]};
            emit_pt(p);
            cur = p;
            break;
        }
        case CmdKind::close_path:
            cur = start;
            break;
        }
    }
    return out;
}

void serialize_element(std::string& out, const Element& e, CoordMode mode) {
    auto attr = [&](const char* k, const std::string& v) { out += std::string(" ") + k + "=\"" + v + "\""; };
    auto attr_n = [&](const char* k, double v) { attr(k, format_double(v)); };

    if (e.kind == ElementKind::group) {
        out += "<g>";
        for (const auto& ch : e.children) serialize_element(out, ch, mode);
        out += "</g>";
        return;
    }

    out += "<";
    out += kind_name(e.kind);
    switch (e.kind) {
    case ElementKind::path:
        attr("d", path_data(e.commands, mode));
        break;
    case ElementKind::circle:
        attr_n("cx", e.cx);
        attr_n("cy", e.cy);
        attr_n("r", e.r);
        break;
    case ElementKind::ellipse:
        attr_n("cx", e.cx);
        attr_n("cy", e.cy);
        attr_n("rx", e.rx);
        attr_n("ry", e.ry);
        break;
    case ElementKind::rect:
        attr_n("x", e.x);
        attr_n("y", e.y);
        attr_n("width", e.width);
        attr_n("height", e.height);
        if (e.rx != 0) attr_n("rx", e.rx);
        if (e.ry != 0 && e.ry != e.rx) attr_n("ry", e.ry);
        break;
    case ElementKind::line:
        attr_n("x1", e.points[0].x);
        attr_n("y1", e.points[0].y);
        attr_n("x2", e.points[1].x);
        attr_n("y2", e.points[1].y);
        break;
    case ElementKind::polyline:
    case ElementKind::polygon: {
        std::string pts;
        for (const auto& p : e.points) {
            if (!pts.empty()) pts += ' ';
            pts += format_double(p.x) + "," + format_double(p.y);
        }
        attr("points", pts);
        break;
    }
    case ElementKind::group:
        break;
    }
    attr("fill", color_hex(e.fill));
    if (e.opacity != 1.0) attr_n("opacity", e.opacity);
    out += "/>";
}

} // namespace

std::string serialize_svg(const Document& doc, CoordMode mode) {
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " +
                      std::to_string(doc.canvas) + " " + std::to_string(doc.canvas) + "\"";
    if (doc.elements.empty()) return out + "/>\n";
    out += ">\n";
    for (const auto& e : doc.elements) {
        serialize_element(out, e, mode);
        out += "\n";
    }
    out += "</svg>\n";
    return out;
}

// ---------------------------------------------------------------- canonical commands

std::vector<PathCommand> to_path_commands(const Element& e) {
    std::vector<PathCommand> out;
    switch (e.kind) {
    case ElementKind::polygon:
    case ElementKind::polyline:
    case ElementKind::line: {
        if (e.points.empty()) return out;
        out.push_back({CmdKind::move_to, {e.points[0].x, e.points[0].y}});
        for (std::size_t i = 1; i < e.points.size(); ++i)
            out.push_back({CmdKind::line_to, {e.points[i].x, e.points[i].y}});
        if (e.kind == ElementKind::polygon) out.push_back({CmdKind::close_path, {}});
        return out;
    }
    case ElementKind::path:
        break;
    default:
        return out; // shapes stay shapes
    }

    Vec2 cur{0, 0};
    Vec2 start{0, 0};
    // reflected-control state for S/T
    bool prev_cubic = false, prev_quad = false;
    Vec2 prev_ctrl{0, 0};

    for (const auto& cmd : e.commands) {
        switch (cmd.kind) {
        case CmdKind::move_to:
            cur = start = {cmd.args[0], cmd.args[1]};
            out.push_back(cmd);
            prev_cubic = prev_quad = false;
            break;
        case CmdKind::line_to:
            cur = {cmd.args[0], cmd.args[1]};
            out.push_back(cmd);
            prev_cubic = prev_quad = false;
            break;
        case CmdKind::hline_to:
            cur = {cmd.args[0], cur.y};
            out.push_back({CmdKind::line_to, {cur.x, cur.y}});
            prev_cubic = prev_quad = false;
            break;
        case CmdKind::vline_to:
            cur = {cur.x, cmd.args[0]};
            out.push_back({CmdKind::line_to, {cur.x, cur.y}});
            prev_cubic = prev_quad = false;
            break;
        case CmdKind::cubic_to:
            prev_ctrl = {cmd.args[2], cmd.args[3]};
            cur = {cmd.args[4], cmd.args[5]};
            out.push_back(cmd);
            prev_cubic = true;
            prev_quad = false;
            break;
        case CmdKind::smooth_cubic_to: {
            Vec2 c1 = prev_cubic ? Vec2{2 * cur.x - prev_ctrl.x, 2 * cur.y - prev_ctrl.y} : cur;
            Vec2 c2{cmd.args[0], cmd.args[1]};
            Vec2 p{cmd.args[2], cmd.args[3]};
            out.push_back({CmdKind::cubic_to, {c1.x, c1.y, c2.x, c2.y, p.x, p.y}});
            prev_ctrl = c2;
            cur = p;
            prev_cubic = true;
            prev_quad = false;
            break;
        }
        case CmdKind::quad_to:
            prev_ctrl = {cmd.args[0], cmd.args[1]};
            cur = {cmd.args[2], cmd.args[3]};
            out.push_back(cmd);
            prev_quad = true;
            prev_cubic = false;
            break;
        case CmdKind::smooth_quad_to: {
            Vec2 c1 = prev_quad ? Vec2{2 * cur.x - prev_ctrl.x, 2 * cur.y - prev_ctrl.y} : cur;
            Vec2 p{cmd.args[0], cmd.args[1]};
            out.push_back({CmdKind::quad_to, {c1.x, c1.y, p.x, p.y}});
            prev_ctrl = c1;
            cur = p;
            prev_quad = true;
            prev_cubic = false;
            break;
        }
        case CmdKind::arc_to:
            cur = {cmd.args[5], cmd.args[6]};
            out.push_back(cmd);
            prev_cubic = prev_quad = false;
            break;
        case CmdKind::close_path:
            cur = start;
            out.push_back(cmd);
            prev_cubic = prev_quad = false;
            break;
        }
    }
    return out;
}

std::size_t leaf_count(const Document& doc) {
    std::size_t n = 0;
    std::vector<const Element*> stack;
    for (const auto& e : doc.elements) stack.push_back(&e);
    while (!stack.empty()) {
        const Element* e = stack.back();
        stack.pop_back();
        if (e->kind == ElementKind::group) {
            for (const auto& ch : e->children) stack.push_back(&ch);
        } else {
            ++n;
        }
    }
    return n;
}

} // namespace vexel::svg
