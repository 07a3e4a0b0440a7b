#pragma once

#include "vexel/svg.hpp"

#include <string>
#include <vector>

namespace vexel::raster {

/// Row-major RGB grid in [0,1], white background.
struct RasterGrid {
    int width = 0;
    int height = 0;
    std::vector<double> pixels; // width*height*3

    double& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// One closed contour, in the same units as the input element.
using Contour = std::vector<Vec2>;

/// Flattens a single element to closed polygons. Curves are subdivided until
/// the control points sit within `tol` of the chord; arcs are converted to
/// cubic segments of at most 90 degrees first. Zero-radius arcs degenerate to
/// straight lines, following SVG convention. Open subpaths are closed, which
/// matches fill semantics.
std::vector<Contour> flatten(const svg::Element& e, double tol);

/// Paints elements in document order with the nonzero winding rule,
/// 4x4 supersampled, alpha-compositing each element over the current
/// background (initially white). `tol` is the flattening tolerance in output
/// pixels.
RasterGrid rasterize(const svg::Document& doc, int size, double tol = 0.1);

/// Mean absolute per-channel difference, in [0,1].
double raster_diff(const RasterGrid& a, const RasterGrid& b);

/// Binary PPM (P6), 8 bits per channel.
std::string to_ppm(const RasterGrid& grid);
void write_ppm(const RasterGrid& grid, const std::string& path);

/// Uniformly scales an element's geometry (coordinates, radii, sizes);
/// arc rotation angles are scale-invariant.
void scale_element(svg::Element& e, double s);

} // namespace vexel::raster
