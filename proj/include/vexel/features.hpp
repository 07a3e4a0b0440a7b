#pragma once

#include "vexel/nn.hpp"
#include "vexel/raster.hpp"

#include <string>

namespace vexel::cond {

/// Per-command-token visual features, N x D_p.
struct PixelFeatures {
    nn::Tensor tokens;
};

/// Text condition, T_txt x D_txt. The null embedding (all zeros) is the
/// classifier-free-guidance unconditional input.
struct TextEmbedding {
    nn::Tensor tokens;
    bool null_flag = false;
};

constexpr int kDefaultPixelDim = 64;
constexpr int kDefaultTextDim = 64;
constexpr int kDefaultTextLen = 16;

/// Deterministic stand-in for a pretrained ViT feature extractor: a 16x16
/// patch grid over the render; per patch channel means, channel standard
/// deviations and two gradient-energy values, tiled to d_p; the 256 patch
/// tokens are nearest-neighbor resampled to n_tokens. Values pass through f32
/// so cached and fresh features agree byte-for-byte.
PixelFeatures extract_stub_features(const raster::RasterGrid& grid, int d_p, int n_tokens);

/// Hash-seeded pseudo-random unit vector per whitespace-separated word,
/// padded/truncated to t_txt rows. An empty prompt yields the null embedding.
TextEmbedding embed_text_stub(const std::string& prompt, int d_txt = kDefaultTextDim,
                              int t_txt = kDefaultTextLen);

TextEmbedding null_text_embedding(int d_txt = kDefaultTextDim, int t_txt = kDefaultTextLen);

// .vxf container: "VXF1", u32 rows, u32 cols, f32 little-endian data.
void write_vxf(const nn::Tensor& tokens, const std::string& path);
nn::Tensor read_vxf(const std::string& path);

/// read_vxf plus a shape check against the expected dimensions.
PixelFeatures load_pixel_features(const std::string& path, int d_p, int n_tokens);
TextEmbedding load_text_embedding(const std::string& path, int d_txt, int t_txt);

} // namespace vexel::cond
