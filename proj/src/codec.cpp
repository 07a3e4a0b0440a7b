#include "vexel/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace vexel::codec {

using svg::CmdKind;
using svg::Document;
using svg::Element;
using svg::ElementKind;

int Vocabulary::element_index(ElementKind k) const {
    switch (k) {
    case ElementKind::path: return elem_path;
    case ElementKind::circle: return elem_circle;
    case ElementKind::ellipse: return elem_ellipse;
    case ElementKind::rect: return elem_rect;
    default:
        fail(Errc::unsupported_element, std::string("codec: ") + svg::kind_name(k) + " is not encodable");
    }
}

ElementKind Vocabulary::element_kind(int idx) const {
    switch (idx) {
    case elem_path: return ElementKind::path;
    case elem_circle: return ElementKind::circle;
    case elem_ellipse: return ElementKind::ellipse;
    case elem_rect: return ElementKind::rect;
    default:
        fail(Errc::unknown_index, "codec: element index " + std::to_string(idx) + " is not a shape");
    }
}

int Vocabulary::command_index(CmdKind k) const {
    switch (k) {
    case CmdKind::move_to: return cmd_m;
    case CmdKind::line_to: return cmd_l;
    case CmdKind::cubic_to: return cmd_c;
    case CmdKind::quad_to: return cmd_q;
    case CmdKind::arc_to: return cmd_a;
    case CmdKind::close_path: return cmd_z;
    default:
        fail(Errc::unsupported_element, "codec: command not in post-normalization grammar");
    }
}

CmdKind Vocabulary::command_kind(int idx) const {
    switch (idx) {
    case cmd_m: return CmdKind::move_to;
    case cmd_l: return CmdKind::line_to;
    case cmd_c: return CmdKind::cubic_to;
    case cmd_q: return CmdKind::quad_to;
    case cmd_a: return CmdKind::arc_to;
    case cmd_z: return CmdKind::close_path;
    default:
        fail(Errc::unknown_index, "codec: command index " + std::to_string(idx) + " unknown");
    }
}

// ---------------------------------------------------------------- encode

namespace {

void set_slots(SvgMatrix& m, int row, Vec2 s0, Vec2 s1, Vec2 s2, Vec2 s3) {
    m.at(row, 2) = s0.x;
    m.at(row, 3) = s0.y;
    m.at(row, 4) = s1.x;
    m.at(row, 5) = s1.y;
    m.at(row, 6) = s2.x;
    m.at(row, 7) = s2.y;
    m.at(row, 8) = s3.x;
    m.at(row, 9) = s3.y;
}

void set_style(SvgMatrix& m, int row, const Element& e) {
    m.at(row, 10) = e.fill.r;
    m.at(row, 11) = e.fill.g;
    m.at(row, 12) = e.fill.b;
    m.at(row, 13) = e.opacity;
}

} // namespace

SvgMatrix encode_matrix(const Document& doc, const Vocabulary& vocab, int n_rows) {
    SvgMatrix m(n_rows, doc.canvas);
    double v = doc.canvas;
    int row = 0;
    auto next_row = [&]() -> int {
        if (row >= n_rows - 1) // keep space for EOS
            fail(Errc::too_many_commands, "encode_matrix: document needs more than " +
                                              std::to_string(n_rows) + " rows");
        return row++;
    };

    m.at(next_row(), 0) = Vocabulary::sos; // row 0: all zeros, rho=SOS, tau=none

    for (const auto& e : doc.elements) {
        int rho = vocab.element_index(e.kind);
        switch (e.kind) {
        case ElementKind::circle: {
            int r = next_row();
            m.at(r, 0) = rho;
            set_slots(m, r, {e.cx, e.cy}, {e.r, e.r}, {0, 0}, {e.cx, e.cy});
            set_style(m, r, e);
            break;
        }
        case ElementKind::ellipse: {
            int r = next_row();
            m.at(r, 0) = rho;
            set_slots(m, r, {e.cx, e.cy}, {e.rx, e.ry}, {0, 0}, {e.cx, e.cy});
            set_style(m, r, e);
            break;
        }
        case ElementKind::rect: {
            int r = next_row();
            m.at(r, 0) = rho;
            set_slots(m, r, {e.x, e.y}, {e.rx, e.ry}, {e.width, e.height},
                      {e.x + e.width, e.y + e.height});
            set_style(m, r, e);
            break;
        }
        case ElementKind::path: {
            Vec2 cur{0, 0}, start{0, 0};
            bool first = true;
            for (const auto& cmd : e.commands) {
                int r = next_row();
                m.at(r, 0) = rho;
                m.at(r, 1) = vocab.command_index(cmd.kind);
                set_style(m, r, e);
                switch (cmd.kind) {
                case CmdKind::move_to: {
                    Vec2 p{cmd.args[0], cmd.args[1]};
                    if (first) {
                        // element-opening marker: every slot carries the target
                        set_slots(m, r, p, p, p, p);
                    } else {
                        // continuing subpath: chained like an invisible line
                        set_slots(m, r, cur, lerp(cur, p, 1.0 / 3.0), lerp(cur, p, 2.0 / 3.0), p);
                    }
                    cur = start = p;
                    break;
                }
                case CmdKind::line_to: {
                    Vec2 p{cmd.args[0], cmd.args[1]};
                    set_slots(m, r, cur, lerp(cur, p, 1.0 / 3.0), lerp(cur, p, 2.0 / 3.0), p);
                    cur = p;
                    break;
                }
                case CmdKind::cubic_to: {
                    Vec2 c1{cmd.args[0], cmd.args[1]}, c2{cmd.args[2], cmd.args[3]}, p{cmd.args[4], cmd.args[5]};
                    set_slots(m, r, cur, c1, c2, p);
                    cur = p;
                    break;
                }
                case CmdKind::quad_to: {
                    Vec2 q{cmd.args[0], cmd.args[1]}, p{cmd.args[2], cmd.args[3]};
                    set_slots(m, r, cur, q, q, p);
                    cur = p;
                    break;
                }
                case CmdKind::arc_to: {
                    Vec2 p{cmd.args[5], cmd.args[6]};
                    double rot_slot = cmd.args[2] / 360.0 * v;
                    double flag_slot = (2.0 * cmd.args[3] + cmd.args[4]) * v / 3.0;
                    set_slots(m, r, cur, {cmd.args[0], cmd.args[1]}, {rot_slot, flag_slot}, p);
                    cur = p;
                    break;
                }
                case CmdKind::close_path:
                    set_slots(m, r, start, start, start, start);
                    cur = start;
                    break;
                default:
                    fail(Errc::unsupported_element, "encode_matrix: pre-normalization command");
                }
                first = false;
            }
            break;
        }
        default:
            fail(Errc::unsupported_element,
                 std::string("encode_matrix: ") + svg::kind_name(e.kind) + " survives only pre-normalization");
        }
    }

    int eos = row++;
    m.at(eos, 0) = Vocabulary::eos;
    for (; row < n_rows; ++row) m.at(row, 0) = Vocabulary::pad;
    return m;
}

// ---------------------------------------------------------------- decode

namespace {

Vec2 slot(const SvgMatrix& m, int row, int k) { return {m.at(row, 2 + 2 * k), m.at(row, 3 + 2 * k)}; }

double dist2(Vec2 a, Vec2 b) {
    Vec2 d = a - b;
    return dot(d, d);
}

svg::Color row_color(const SvgMatrix& m, int row) {
    return {std::clamp(m.at(row, 10), 0.0, 1.0), std::clamp(m.at(row, 11), 0.0, 1.0),
            std::clamp(m.at(row, 12), 0.0, 1.0)};
}

} // namespace

Document decode_matrix(const SvgMatrix& m, const Vocabulary& vocab, bool strict) {
    Document doc;
    doc.canvas = m.canvas;
    double v = m.canvas;

    auto rho_at = [&](int r) { return static_cast<int>(std::lround(m.at(r, 0))); };
    auto tau_at = [&](int r) { return static_cast<int>(std::lround(m.at(r, 1))); };

    if (m.rows < 2) fail(Errc::bad_framing, "decode_matrix: too few rows");
    if (strict && rho_at(0) != Vocabulary::sos)
        fail(Errc::bad_framing, "decode_matrix: row 0 is not SOS");

    int eos = -1;
    for (int r = 1; r < m.rows; ++r) {
        if (rho_at(r) == Vocabulary::eos) {
            eos = r;
            break;
        }
    }
    if (eos < 0) {
        if (strict) fail(Errc::bad_framing, "decode_matrix: no EOS row");
        eos = m.rows;
    }
    if (strict) {
        for (int r = eos + 1; r < m.rows; ++r) {
            if (rho_at(r) != Vocabulary::pad)
                fail(Errc::bad_framing, "decode_matrix: non-PAD row after EOS");
        }
    }

    Element* open_path = nullptr;
    Vec2 cur{0, 0}, start{0, 0};

    for (int r = 1; r < eos; ++r) {
        int rho = rho_at(r);
        if (rho == Vocabulary::sos || rho == Vocabulary::pad || rho == Vocabulary::eos) {
            if (strict) fail(Errc::bad_framing, "decode_matrix: special token inside body");
            open_path = nullptr;
            continue;
        }
        ElementKind kind;
        if (strict) {
            kind = vocab.element_kind(rho);
        } else {
            if (rho < 0 || rho >= Vocabulary::element_count) {
                open_path = nullptr;
                continue;
            }
            kind = vocab.element_kind(rho);
        }

        if (kind != ElementKind::path) {
            open_path = nullptr;
            Element e;
            e.kind = kind;
            e.fill = row_color(m, r);
            e.opacity = std::clamp(m.at(r, 13), 0.0, 1.0);
            Vec2 s0 = slot(m, r, 0), s1 = slot(m, r, 1), s2 = slot(m, r, 2);
            if (kind == ElementKind::circle) {
                e.cx = s0.x;
                e.cy = s0.y;
                e.r = std::fabs(s1.x);
            } else if (kind == ElementKind::ellipse) {
                e.cx = s0.x;
                e.cy = s0.y;
                e.rx = std::fabs(s1.x);
                e.ry = std::fabs(s1.y);
            } else { // rect
                e.x = s0.x;
                e.y = s0.y;
                e.rx = std::fabs(s1.x);
                e.ry = std::fabs(s1.y);
                e.width = std::fabs(s2.x);
                e.height = std::fabs(s2.y);
            }
            doc.elements.push_back(std::move(e));
            continue;
        }

        // path rows
        int tau = tau_at(r);
        if (tau < Vocabulary::cmd_m || tau > Vocabulary::cmd_z) {
            if (strict) fail(Errc::unknown_index, "decode_matrix: bad command index");
            open_path = nullptr;
            continue;
        }
        CmdKind ck = vocab.command_kind(tau);
        Vec2 s0 = slot(m, r, 0), s1 = slot(m, r, 1), s2 = slot(m, r, 2), s3 = slot(m, r, 3);

        if (ck == CmdKind::move_to) {
            bool opens_element = open_path == nullptr;
            if (!opens_element) {
                // all-slots-equal marks a new element; a chained M continues
                double d_start = dist2(s0, s3) + dist2(s1, s3) + dist2(s2, s3);
                double d_cont = dist2(s0, cur) + dist2(s1, lerp(cur, s3, 1.0 / 3.0)) +
                                dist2(s2, lerp(cur, s3, 2.0 / 3.0));
                opens_element = d_start <= d_cont;
            }
            if (opens_element) {
                Element e;
                e.kind = ElementKind::path;
                e.fill = row_color(m, r);
                e.opacity = std::clamp(m.at(r, 13), 0.0, 1.0);
                doc.elements.push_back(std::move(e));
                open_path = &doc.elements.back();
            }
            open_path->commands.push_back({CmdKind::move_to, {s3.x, s3.y}});
            cur = start = s3;
            continue;
        }

        if (!open_path) {
            if (strict) fail(Errc::bad_framing, "decode_matrix: path command before any moveto");
            Element e;
            e.kind = ElementKind::path;
            e.fill = row_color(m, r);
            e.opacity = std::clamp(m.at(r, 13), 0.0, 1.0);
            e.commands.push_back({CmdKind::move_to, {s0.x, s0.y}});
            doc.elements.push_back(std::move(e));
            open_path = &doc.elements.back();
            cur = start = s0;
        }

        switch (ck) {
        case CmdKind::line_to:
            open_path->commands.push_back({CmdKind::line_to, {s3.x, s3.y}});
            cur = s3;
            break;
        case CmdKind::cubic_to:
            open_path->commands.push_back({CmdKind::cubic_to, {s1.x, s1.y, s2.x, s2.y, s3.x, s3.y}});
            cur = s3;
            break;
        case CmdKind::quad_to:
            open_path->commands.push_back({CmdKind::quad_to, {s1.x, s1.y, s3.x, s3.y}});
            cur = s3;
            break;
        case CmdKind::arc_to: {
            double rot = s2.x / v * 360.0;
            int level = static_cast<int>(std::lround(std::clamp(s2.y / (v / 3.0), 0.0, 3.0)));
            double large = level >= 2 ? 1.0 : 0.0;
            double sweep = (level % 2 == 1) ? 1.0 : 0.0;
            open_path->commands.push_back(
                {CmdKind::arc_to, {std::fabs(s1.x), std::fabs(s1.y), rot, large, sweep, s3.x, s3.y}});
            cur = s3;
            break;
        }
        case CmdKind::close_path:
            open_path->commands.push_back({CmdKind::close_path, {}});
            cur = start;
            break;
        default:
            break;
        }
    }
    return doc;
}

void repair_framing(SvgMatrix& m, const Vocabulary&) {
    auto round_idx = [](double v, int hi) {
        int i = static_cast<int>(std::lround(v));
        return std::clamp(i, 0, hi);
    };
    bool seen_eos = false;
    for (int r = 0; r < m.rows; ++r) {
        int rho = round_idx(m.at(r, 0), Vocabulary::element_count - 1);
        int tau = round_idx(m.at(r, 1), Vocabulary::command_count - 1);
        if (r == 0) rho = Vocabulary::sos;
        if (seen_eos) rho = Vocabulary::pad;
        if (rho == Vocabulary::eos && r > 0) seen_eos = true;
        bool special = rho == Vocabulary::sos || rho == Vocabulary::eos || rho == Vocabulary::pad;
        m.at(r, 0) = rho;
        m.at(r, 1) = special ? Vocabulary::cmd_none : tau;
        if (special) {
            for (int c = 2; c < kRowWidth; ++c) m.at(r, c) = 0.0;
        }
    }
    if (!seen_eos) {
        // force an EOS on the last row
        int r = m.rows - 1;
        m.at(r, 0) = Vocabulary::eos;
        m.at(r, 1) = Vocabulary::cmd_none;
        for (int c = 2; c < kRowWidth; ++c) m.at(r, c) = 0.0;
    }
}

// ---------------------------------------------------------------- normalization

double normalize_coord(double c, double canvas) { return 2.0 * c / canvas - 1.0; }

double denormalize_coord(double c_rec, double canvas) {
    double c = std::clamp(c_rec, -1.0, 1.0);
    return (c + 1.0) / 2.0 * canvas;
}

SvgMatrix normalize_continuous(const SvgMatrix& m, int canvas) {
    SvgMatrix out = m;
    double v = canvas;
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 2; c <= 9; ++c) out.at(r, c) = 2.0 * m.at(r, c) / v - 1.0;
        for (int c = 10; c <= 13; ++c) out.at(r, c) = 2.0 * m.at(r, c) - 1.0;
    }
    return out;
}

SvgMatrix denormalize_continuous(const SvgMatrix& m, int canvas) {
    SvgMatrix out = m;
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 2; c <= 9; ++c) out.at(r, c) = denormalize_coord(m.at(r, c), canvas);
        for (int c = 10; c <= 13; ++c) out.at(r, c) = (std::clamp(m.at(r, c), -1.0, 1.0) + 1.0) / 2.0;
    }
    return out;
}

// ---------------------------------------------------------------- embedding

EmbedTables init_embed_tables(int n_rows, int d_e, int d_tok, std::uint64_t seed) {
    EmbedTables t;
    t.d_tok = d_tok;
    t.d_e = d_e;
    t.n_rows = n_rows;
    nn::Rng rng(seed);
    double s_tok = 1.0 / std::sqrt(static_cast<double>(d_tok));
    t.elem_emb = rng.normal_tensor(Vocabulary::element_count, d_tok, s_tok);
    t.cmd_emb = rng.normal_tensor(Vocabulary::command_count, d_tok, s_tok);
    t.pos_emb = rng.normal_tensor(n_rows, d_e, 0.02);
    t.proj = rng.normal_tensor(2 * d_tok + 12, d_e, 1.0 / std::sqrt(static_cast<double>(2 * d_tok + 12)));
    return t;
}

nn::Tensor embed(const SvgMatrix& normalized, const EmbedTables& t) {
    if (normalized.rows != t.n_rows)
        fail(Errc::shape_mismatch, "embed: matrix rows != table rows");
    int k = t.concat_width();
    nn::Tensor concat(normalized.rows, k);
    for (int r = 0; r < normalized.rows; ++r) {
        int rho = static_cast<int>(std::lround(normalized.at(r, 0)));
        int tau = static_cast<int>(std::lround(normalized.at(r, 1)));
        if (rho < 0 || rho >= Vocabulary::element_count) fail(Errc::unknown_index, "embed: bad element index");
        if (tau < 0 || tau >= Vocabulary::command_count) fail(Errc::unknown_index, "embed: bad command index");
        for (int j = 0; j < t.d_tok; ++j) {
            concat.at(r, j) = t.elem_emb.at(rho, j);
            concat.at(r, t.d_tok + j) = t.cmd_emb.at(tau, j);
        }
        for (int c = 0; c < 12; ++c) concat.at(r, 2 * t.d_tok + c) = normalized.at(r, 2 + c);
    }
    nn::Tensor out(normalized.rows, t.d_e);
    // out = concat @ proj + pos
    for (int r = 0; r < normalized.rows; ++r) {
        for (int p = 0; p < k; ++p) {
            double a = concat.at(r, p);
            if (a == 0.0) continue;
            const double* prow = &t.proj.data[static_cast<std::size_t>(p) * t.d_e];
            double* orow = &out.data[static_cast<std::size_t>(r) * t.d_e];
            for (int j = 0; j < t.d_e; ++j) orow[j] += a * prow[j];
        }
    }
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += t.pos_emb.data[i];
    return out;
}

namespace {

// Solves A x = b for symmetric positive-definite-ish A via Gauss elimination
// with partial pivoting. A is n x n row-major, b/x are n-vectors.
void solve_linear(std::vector<double> a, std::vector<double> b, int n, std::vector<double>& x) {
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
        if (std::fabs(a[piv * n + col]) < 1e-300) fail(Errc::shape_mismatch, "unembed: singular projection");
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        double d = a[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            double f = a[r * n + col] / d;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
        x[r] = acc / a[r * n + r];
    }
}

// Least-squares right-inverse of proj (k x d): P = proj^T (proj proj^T)^-1 is
// what row vectors need, computed here column by column as
// pinv (d x k) with u @ pinv = concat estimate.
nn::Tensor pseudo_inverse(const nn::Tensor& proj) {
    int k = static_cast<int>(proj.rows());
    int d = static_cast<int>(proj.cols());
    // G = proj proj^T (k x k)
    std::vector<double> g(static_cast<std::size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            double acc = 0.0;
            for (int c = 0; c < d; ++c) acc += proj.at(i, c) * proj.at(j, c);
            g[i * k + j] = acc;
        }
    // columns of pinv: pinv[:, i] solves u -> concat_i; build via
    // pinv = proj^T G^{-1}: solve G y = e_i, then pinv[:, i] = proj^T y.
    nn::Tensor pinv(d, k);
    std::vector<double> e(k, 0.0), y;
    for (int i = 0; i < k; ++i) {
        std::fill(e.begin(), e.end(), 0.0);
        e[i] = 1.0;
        solve_linear(g, e, k, y);
        for (int r = 0; r < d; ++r) {
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += proj.at(j, r) * y[j];
            pinv.at(r, i) = acc;
        }
    }
    return pinv;
}

int argmax_dot(const double* vec, const nn::Tensor& table) {
    int best = 0;
    double best_v = -1e300;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < table.cols(); ++c) acc += vec[c] * table.at(r, c);
        if (acc > best_v) { // strict: ties keep the lower index
            best_v = acc;
            best = static_cast<int>(r);
        }
    }
    return best;
}

} // namespace

nn::Tensor projection_pinv(const EmbedTables& t) { return pseudo_inverse(t.proj); }

SvgMatrix unembed(const nn::Tensor& rec, const EmbedTables& t, int canvas) {
    if (rec.rows() != static_cast<std::size_t>(t.n_rows) || rec.cols() != static_cast<std::size_t>(t.d_e))
        fail(Errc::shape_mismatch, "unembed: embedding shape mismatch");
    nn::Tensor pinv = pseudo_inverse(t.proj);
    int k = t.concat_width();

    SvgMatrix norm(t.n_rows, canvas);
    std::vector<double> u(t.d_e), concat(k);
    for (int r = 0; r < t.n_rows; ++r) {
        for (int c = 0; c < t.d_e; ++c) u[c] = rec.at(r, c) - t.pos_emb.at(r, c);
        for (int j = 0; j < k; ++j) {
            double acc = 0.0;
            for (int c = 0; c < t.d_e; ++c) acc += u[c] * pinv.at(c, j);
            concat[j] = acc;
        }
        norm.at(r, 0) = argmax_dot(concat.data(), t.elem_emb);
        norm.at(r, 1) = argmax_dot(concat.data() + t.d_tok, t.cmd_emb);
        for (int c = 0; c < 12; ++c) norm.at(r, 2 + c) = concat[2 * t.d_tok + c];
    }
    return denormalize_continuous(norm, canvas);
}

// ---------------------------------------------------------------- .mat io

void write_mat(const SvgMatrix& m, const std::string& path) {
    std::string out = "VXM1";
    auto put_u32 = [&](std::uint32_t v) {
        char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
        out.append(b, 4);
    };
    put_u32(static_cast<std::uint32_t>(m.rows));
    put_u32(kRowWidth);
    for (double v : m.data) {
        float f = static_cast<float>(v);
        char b[4];
        std::memcpy(b, &f, 4);
        out.append(b, 4);
    }
    write_file_atomic(path, out);
}

SvgMatrix read_mat(const std::string& path, int canvas) {
    std::string raw = read_file(path);
    if (raw.size() < 12 || raw.compare(0, 4, "VXM1") != 0)
        fail(Errc::bad_magic, path + ": not a VXM1 matrix");
    auto get_u32 = [&](std::size_t off) {
        return static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off])) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off + 1])) << 8) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off + 2])) << 16) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off + 3])) << 24);
    };
    std::uint32_t n = get_u32(4);
    std::uint32_t w = get_u32(8);
    if (w != kRowWidth) fail(Errc::shape_mismatch, path + ": row width != 14");
    std::size_t need = 12 + static_cast<std::size_t>(n) * w * 4;
    if (raw.size() != need) fail(Errc::bad_magic, path + ": truncated matrix file");
    SvgMatrix m(static_cast<int>(n), canvas);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * w; ++i) {
        float f;
        std::memcpy(&f, raw.data() + 12 + i * 4, 4);
        m.data[i] = static_cast<double>(f);
    }
    return m;
}

} // namespace vexel::codec
