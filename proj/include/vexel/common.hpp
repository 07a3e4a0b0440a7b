#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vexel {

enum class Errc {
    malformed_xml,
    unsupported_element,
    bad_attribute,
    unresolvable_reference,
    too_many_commands,
    bad_framing,
    unknown_index,
    dimension_mismatch,
    shape_mismatch,
    bad_magic,
    empty_document,
    manifest_error,
    non_finite_loss,
    bad_checkpoint,
    incompatible_checkpoints,
    bad_config,
    io_error,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) {
    throw Error(code, msg);
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }
inline Vec2 lerp(Vec2 a, Vec2 b, double t) {
    return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
}

// Rounds half away from zero, the convention used by coordinate quantization.
inline double round_places(double v, int places) {
    double s = std::pow(10.0, places);
    double scaled = v * s;
    double r = std::floor(std::fabs(scaled) + 0.5);
    return std::copysign(r, scaled) / s;
}

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

// FNV-1a, used for content hashes of cached artifacts and determinism checks.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& data);

} // namespace vexel
