#include "vexel/features.hpp"

#include "helpers.hpp"

#include <cmath>
#include <doctest.h>

using namespace vexel;

namespace {

raster::RasterGrid solid_grid(int size, double value) {
    raster::RasterGrid g;
    g.width = g.height = size;
    g.pixels.assign(static_cast<std::size_t>(size) * size * 3, value);
    return g;
}

} // namespace

TEST_CASE("stub features: all-white grid has unit means and zero spread") {
    auto f = cond::extract_stub_features(solid_grid(128, 1.0), 64, 256);
    CHECK(f.tokens.rows() == 256);
    CHECK(f.tokens.cols() == 64);
    for (std::size_t i = 0; i < f.tokens.rows(); ++i) {
        CHECK(f.tokens.at(i, 0) == 1.0); // mean r
        CHECK(f.tokens.at(i, 3) == 0.0); // std r
        CHECK(f.tokens.at(i, 6) == 0.0); // gradient energy
    }
}

TEST_CASE("stub features: deterministic and shape-checked") {
    auto g = solid_grid(128, 0.25);
    auto a = cond::extract_stub_features(g, 32, 100);
    auto b = cond::extract_stub_features(g, 32, 100);
    CHECK(a.tokens.data == b.tokens.data);

    raster::RasterGrid bad;
    bad.width = 64;
    bad.height = 32;
    bad.pixels.assign(64 * 32 * 3, 0.0);
    CHECK_THROWS_AS(cond::extract_stub_features(bad, 8, 16), Error);
}

TEST_CASE("stub features: left-black and right-black renders are distinguishable") {
    auto left = solid_grid(128, 1.0);
    auto right = solid_grid(128, 1.0);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x)
            for (int c = 0; c < 3; ++c) {
                if (x < 64) left.at(x, y, c) = 0.0;
                else right.at(x, y, c) = 0.0;
            }
    auto fl = cond::extract_stub_features(left, 16, 64);
    auto fr = cond::extract_stub_features(right, 16, 64);
    double dist = 0;
    for (std::size_t i = 0; i < fl.tokens.data.size(); ++i) {
        double d = fl.tokens.data[i] - fr.tokens.data[i];
        dist += d * d;
    }
    CHECK(dist > 0.0);
}

TEST_CASE("vxf: round trip is bit exact, bad shapes and magic rejected") {
    nn::Rng rng(4);
    nn::Tensor t = rng.normal_tensor(10, 6);
    for (double& v : t.data) v = static_cast<double>(static_cast<float>(v));
    std::string path = testutil::temp_path("feat.vxf");
    cond::write_vxf(t, path);
    nn::Tensor back = cond::read_vxf(path);
    CHECK(back.data == t.data);

    CHECK_THROWS_AS(cond::load_pixel_features(path, 7, 10), Error); // wrong D_p
    write_file_atomic(path, std::string("VXF1") + "junk");
    CHECK_THROWS_AS(cond::read_vxf(path), Error);
}

TEST_CASE("text stub: null embedding, determinism, word separation") {
    auto null = cond::embed_text_stub("", 64, 16);
    CHECK(null.null_flag);
    for (double v : null.tokens.data) CHECK(v == 0.0);

    auto a = cond::embed_text_stub("rocket", 64, 16);
    auto b = cond::embed_text_stub("rocket", 64, 16);
    CHECK_FALSE(a.null_flag);
    CHECK(a.tokens.data == b.tokens.data);

    auto c = cond::embed_text_stub("umbrella", 64, 16);
    double dot = 0, na = 0, nc = 0;
    for (int j = 0; j < 64; ++j) {
        dot += a.tokens.at(0, j) * c.tokens.at(0, j);
        na += a.tokens.at(0, j) * a.tokens.at(0, j);
        nc += c.tokens.at(0, j) * c.tokens.at(0, j);
    }
    CHECK(std::fabs(dot) / std::sqrt(na * nc) < 0.5);
}

TEST_CASE("text stub: words fill rows, padding is zero") {
    auto e = cond::embed_text_stub("a red circle", 32, 8);
    double row0 = 0, row3 = 0;
    for (int j = 0; j < 32; ++j) {
        row0 += std::fabs(e.tokens.at(0, j));
        row3 += std::fabs(e.tokens.at(3, j));
    }
    CHECK(row0 > 0.0);
    CHECK(row3 == 0.0);
}
