#include "vexel/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace vexel {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::malformed_xml: return "MalformedXml";
    case Errc::unsupported_element: return "UnsupportedElement";
    case Errc::bad_attribute: return "BadAttribute";
    case Errc::unresolvable_reference: return "UnresolvableReference";
    case Errc::too_many_commands: return "TooManyCommands";
    case Errc::bad_framing: return "BadFraming";
    case Errc::unknown_index: return "UnknownIndex";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::bad_magic: return "BadMagic";
    case Errc::empty_document: return "EmptyDocument";
    case Errc::manifest_error: return "ManifestError";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::bad_checkpoint: return "BadCheckpoint";
    case Errc::incompatible_checkpoints: return "IncompatibleCheckpoints";
    case Errc::bad_config: return "BadConfig";
    case Errc::io_error: return "IoError";
    }
    return "UnknownError";
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[64];
    if (v == std::floor(v) && std::fabs(v) < 1e15) {
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& data) {
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(Errc::io_error, "cannot write " + tmp.string());
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) fail(Errc::io_error, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

} // namespace vexel
