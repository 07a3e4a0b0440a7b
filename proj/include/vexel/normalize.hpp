#pragma once

#include "vexel/svg.hpp"

#include <array>
#include <cstddef>

namespace vexel::normalize {

/// Per-kind element counts (indexed by ElementKind) and serialized sizes for
/// a before/after document pair.
struct StatsReport {
    std::array<int, 8> before_counts{};
    std::array<int, 8> after_counts{};
    std::size_t before_bytes = 0;
    std::size_t after_bytes = 0;
};

/// Drops editor noise and invisible content. When `raw_xml` is non-empty the
/// document is re-read leniently from it, which resolves <defs>/<use>,
/// discards titles/descriptions/comments and id/class attributes. Group
/// wrappers are then flattened (styles were already pushed into leaves) and
/// elements that cannot paint -- opacity 0 or area below 1e-6 square units at
/// the target canvas scale -- are removed.
svg::Document clean(const svg::Document& doc, const std::string& raw_xml, int resize_target = 128);

/// Rewrites polygon/line/polyline as paths and expands H/V/S/T so only
/// M/L/C/Q/A/Z remain. Lossless by construction: the rasterizer uses the same
/// expansion.
svg::Document reshape_primitives(const svg::Document& doc);

/// Rounds every coordinate half-away-from-zero to `places` decimals.
svg::Document quantize_precision(const svg::Document& doc, int places = 2);

/// Uniformly rescales the document onto a square canvas of side `target`.
svg::Document resize_canvas(const svg::Document& doc, int target = 128);

StatsReport element_stats(const svg::Document& before, const svg::Document& after);

/// Full pipeline: clean -> reshape -> resize -> quantize.
svg::Document normalize_document(const std::string& raw_xml, int precision = 2, int target = 128);

/// True if the document uses only the post-normalization grammar
/// (path/circle/ellipse/rect and M/L/C/Q/A/Z).
bool is_normalized_grammar(const svg::Document& doc);

/// Fill area of one element in its own units (shapes analytically, paths via
/// coarse flattening).
double element_area(const svg::Element& e);

} // namespace vexel::normalize
