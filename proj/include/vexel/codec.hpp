#pragma once

#include "vexel/nn.hpp"
#include "vexel/svg.hpp"

#include <cstdint>
#include <string>

namespace vexel::codec {

/// Fixed token tables. Only rect's element index (6) is pinned externally;
/// SOS/EOS/PAD fill the remaining slots.
struct Vocabulary {
    static constexpr int sos = 0;
    static constexpr int eos = 1;
    static constexpr int elem_path = 2;
    static constexpr int elem_circle = 3;
    static constexpr int elem_ellipse = 4;
    static constexpr int pad = 5;
    static constexpr int elem_rect = 6;
    static constexpr int element_count = 7;

    static constexpr int cmd_none = 0;
    static constexpr int cmd_m = 1;
    static constexpr int cmd_l = 2;
    static constexpr int cmd_c = 3;
    static constexpr int cmd_q = 4;
    static constexpr int cmd_a = 5;
    static constexpr int cmd_z = 6;
    static constexpr int command_count = 7;

    int element_index(svg::ElementKind k) const;
    svg::ElementKind element_kind(int idx) const; // throws UnknownIndex for non-shape indices
    int command_index(svg::CmdKind k) const;
    svg::CmdKind command_kind(int idx) const;
};

constexpr int kRowWidth = 14;     // rho, tau, 8 geometry slots, r, g, b, opacity
constexpr int kDefaultRows = 1024;

/// Row layout: [rho, tau, mu0, nu0, mu1, nu1, mu2, nu2, mu3, nu3, r, g, b, a].
struct SvgMatrix {
    int rows = kDefaultRows;
    int canvas = 128;
    std::vector<double> data; // rows x kRowWidth

    SvgMatrix() = default;
    SvgMatrix(int n, int v) : rows(n), canvas(v), data(static_cast<std::size_t>(n) * kRowWidth, 0.0) {}
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * kRowWidth + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * kRowWidth + c]; }
};

/// Document -> [SOS, element rows..., EOS, PAD...]. The document must be
/// normalized (post-pipeline grammar). Throws TooManyCommands if the rows
/// do not fit.
SvgMatrix encode_matrix(const svg::Document& doc, const Vocabulary& vocab = {},
                        int n_rows = kDefaultRows);

/// Inverse of encode_matrix. With strict=true malformed framing throws
/// BadFraming/UnknownIndex; with strict=false the row stream is interpreted
/// best-effort (used on model output).
svg::Document decode_matrix(const SvgMatrix& m, const Vocabulary& vocab = {}, bool strict = true);

/// Rounds discrete columns, enforces SOS/EOS/PAD framing and zeroes special
/// rows, making arbitrary real-valued matrices decodable.
void repair_framing(SvgMatrix& m, const Vocabulary& vocab = {});

double normalize_coord(double c, double canvas);     // [0,V] -> [-1,1]
double denormalize_coord(double c_rec, double canvas); // clamps to [-1,1] first

/// Maps geometry slots by 2c/V-1 and color/opacity by 2c-1; discrete columns
/// are left as indices.
SvgMatrix normalize_continuous(const SvgMatrix& m, int canvas);
SvgMatrix denormalize_continuous(const SvgMatrix& m, int canvas);

/// Learned lookup tables and the linear map from
/// [elem_emb | cmd_emb | 12 continuous] to token space, plus absolute
/// positional embeddings.
struct EmbedTables {
    int d_tok = 32;
    int d_e = 256;
    int n_rows = kDefaultRows;
    nn::Tensor elem_emb; // element_count x d_tok
    nn::Tensor cmd_emb;  // command_count x d_tok
    nn::Tensor pos_emb;  // n_rows x d_e
    nn::Tensor proj;     // (2*d_tok + 12) x d_e

    int concat_width() const { return 2 * d_tok + 12; }
};

EmbedTables init_embed_tables(int n_rows, int d_e, int d_tok, std::uint64_t seed);

/// token_i = [elem_emb[rho_i] | cmd_emb[tau_i] | continuous_12] @ proj + pos_i.
/// Expects a normalized matrix. Returns n_rows x d_e.
nn::Tensor embed(const SvgMatrix& normalized, const EmbedTables& t);

/// Inverse mapping: subtract positional rows, recover the concatenation with
/// the projection pseudo-inverse, read discrete indices by tied-logit argmax
/// (ties break toward the lower index), then denormalize continuous fields.
SvgMatrix unembed(const nn::Tensor& rec, const EmbedTables& t, int canvas);

/// Least-squares right-inverse of the projection, d_e x (2*d_tok+12):
/// (token - pos) @ pinv recovers the concatenated input when the projection
/// has full column rank.
nn::Tensor projection_pinv(const EmbedTables& t);

// .mat container: "VXM1", u32 N, u32 D_m, f32 little-endian data, row-major.
void write_mat(const SvgMatrix& m, const std::string& path);
SvgMatrix read_mat(const std::string& path, int canvas = 128);

} // namespace vexel::codec
