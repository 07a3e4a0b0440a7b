#include "vexel/features.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace vexel::cond {

namespace {

constexpr int kPatchGrid = 16;

inline double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

} // namespace

PixelFeatures extract_stub_features(const raster::RasterGrid& grid, int d_p, int n_tokens) {
    if (grid.width != grid.height) fail(Errc::shape_mismatch, "extract_stub_features: grid must be square");
    if (grid.width < kPatchGrid) fail(Errc::shape_mismatch, "extract_stub_features: grid smaller than patch grid");
    int patch = grid.width / kPatchGrid;

    // 8 base features per patch: mean rgb, std rgb, |dx| and |dy| energy
    constexpr int kBase = 8;
    std::vector<double> base(kPatchGrid * kPatchGrid * kBase, 0.0);
    for (int py = 0; py < kPatchGrid; ++py) {
        for (int px = 0; px < kPatchGrid; ++px) {
            double mean[3] = {0, 0, 0};
            double sq[3] = {0, 0, 0};
            double gx = 0, gy = 0;
            int cnt = 0, gx_cnt = 0, gy_cnt = 0;
            for (int y = py * patch; y < (py + 1) * patch && y < grid.height; ++y) {
                for (int x = px * patch; x < (px + 1) * patch && x < grid.width; ++x) {
                    double lum = 0.0;
                    for (int c = 0; c < 3; ++c) {
                        double v = grid.at(x, y, c);
                        mean[c] += v;
                        sq[c] += v * v;
                        lum += v;
                    }
                    lum /= 3.0;
                    if (x + 1 < (px + 1) * patch && x + 1 < grid.width) {
                        double l2 = (grid.at(x + 1, y, 0) + grid.at(x + 1, y, 1) + grid.at(x + 1, y, 2)) / 3.0;
                        gx += std::fabs(l2 - lum);
                        ++gx_cnt;
                    }
                    if (y + 1 < (py + 1) * patch && y + 1 < grid.height) {
                        double l2 = (grid.at(x, y + 1, 0) + grid.at(x, y + 1, 1) + grid.at(x, y + 1, 2)) / 3.0;
                        gy += std::fabs(l2 - lum);
                        ++gy_cnt;
                    }
                    ++cnt;
                }
            }
            double* f = &base[(py * kPatchGrid + px) * kBase];
            for (int c = 0; c < 3; ++c) {
                double m = mean[c] / cnt;
                double var = std::max(0.0, sq[c] / cnt - m * m);
                f[c] = m;
                f[3 + c] = std::sqrt(var);
            }
            f[6] = gx_cnt ? gx / gx_cnt : 0.0;
            f[7] = gy_cnt ? gy / gy_cnt : 0.0;
        }
    }

    PixelFeatures out;
    out.tokens = nn::Tensor(static_cast<std::size_t>(n_tokens), static_cast<std::size_t>(d_p));
    constexpr int kPatches = kPatchGrid * kPatchGrid;
    for (int i = 0; i < n_tokens; ++i) {
        int src = static_cast<int>((static_cast<long>(i) * kPatches) / n_tokens);
        const double* f = &base[src * kBase];
        for (int j = 0; j < d_p; ++j) out.tokens.at(i, j) = f32(f[j % kBase]);
    }
    return out;
}

TextEmbedding embed_text_stub(const std::string& prompt, int d_txt, int t_txt) {
    std::vector<std::string> words;
    std::istringstream iss(prompt);
    std::string w;
    while (iss >> w) words.push_back(w);

    TextEmbedding out;
    out.tokens = nn::Tensor(static_cast<std::size_t>(t_txt), static_cast<std::size_t>(d_txt));
    if (words.empty()) {
        out.null_flag = true;
        return out;
    }
    for (int i = 0; i < t_txt && i < static_cast<int>(words.size()); ++i) {
        nn::Rng rng(fnv1a64(words[i]));
        double norm2 = 0.0;
        std::vector<double> v(d_txt);
        for (int j = 0; j < d_txt; ++j) {
            v[j] = rng.normal();
            norm2 += v[j] * v[j];
        }
        double inv = norm2 > 0 ? 1.0 / std::sqrt(norm2) : 0.0;
        for (int j = 0; j < d_txt; ++j) out.tokens.at(i, j) = f32(v[j] * inv);
    }
    return out;
}

TextEmbedding null_text_embedding(int d_txt, int t_txt) {
    TextEmbedding out;
    out.tokens = nn::Tensor(static_cast<std::size_t>(t_txt), static_cast<std::size_t>(d_txt));
    out.null_flag = true;
    return out;
}

void write_vxf(const nn::Tensor& tokens, const std::string& path) {
    std::string out = "VXF1";
    auto put_u32 = [&](std::uint32_t v) {
        char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
        out.append(b, 4);
    };
    put_u32(static_cast<std::uint32_t>(tokens.rows()));
    put_u32(static_cast<std::uint32_t>(tokens.cols()));
    for (double v : tokens.data) {
        float f = static_cast<float>(v);
        char b[4];
        std::memcpy(b, &f, 4);
        out.append(b, 4);
    }
    write_file_atomic(path, out);
}

nn::Tensor read_vxf(const std::string& path) {
    std::string raw = read_file(path);
    if (raw.size() < 12 || raw.compare(0, 4, "VXF1") != 0)
        fail(Errc::bad_magic, path + ": not a VXF1 feature file");
    auto get_u32 = [&](std::size_t off) {
        return static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off])) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off + 1])) << 8) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off + 2])) << 16) |
               (static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off + 3])) << 24);
    };
    std::size_t rows = get_u32(4), cols = get_u32(8);
    if (raw.size() != 12 + rows * cols * 4) fail(Errc::bad_magic, path + ": truncated feature file");
    nn::Tensor t(rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i) {
        float f;
        std::memcpy(&f, raw.data() + 12 + i * 4, 4);
        t.data[i] = static_cast<double>(f);
        if (!std::isfinite(t.data[i])) fail(Errc::bad_magic, path + ": non-finite feature value");
    }
    return t;
}

PixelFeatures load_pixel_features(const std::string& path, int d_p, int n_tokens) {
    nn::Tensor t = read_vxf(path);
    if (t.rows() != static_cast<std::size_t>(n_tokens) || t.cols() != static_cast<std::size_t>(d_p))
        fail(Errc::shape_mismatch, path + ": feature shape does not match config");
    return PixelFeatures{std::move(t)};
}

TextEmbedding load_text_embedding(const std::string& path, int d_txt, int t_txt) {
    nn::Tensor t = read_vxf(path);
    if (t.rows() != static_cast<std::size_t>(t_txt) || t.cols() != static_cast<std::size_t>(d_txt))
        fail(Errc::shape_mismatch, path + ": text embedding shape does not match config");
    TextEmbedding e;
    bool all_zero = true;
    for (double v : t.data) {
        if (v != 0.0) {
            all_zero = false;
            break;
        }
    }
    e.tokens = std::move(t);
    e.null_flag = all_zero;
    return e;
}

} // namespace vexel::cond
