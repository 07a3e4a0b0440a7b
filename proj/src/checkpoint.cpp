#include "vexel/checkpoint.hpp"

#include "vexel/common.hpp"

#include <cstring>

namespace vexel::ckpt {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.append(b, 4);
}

void put_f32(std::string& out, float v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

struct Reader {
    const std::string& s;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > s.size()) fail(Errc::bad_checkpoint, "truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = static_cast<unsigned char>(s[pos]) |
                          (static_cast<unsigned char>(s[pos + 1]) << 8) |
                          (static_cast<unsigned char>(s[pos + 2]) << 16) |
                          (static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + 3])) << 24);
        pos += 4;
        return v;
    }
    float f32() {
        need(4);
        float v;
        std::memcpy(&v, s.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string v = s.substr(pos, n);
        pos += n;
        return v;
    }
};

} // namespace

void save_checkpoint(const std::string& path, const std::string& config_json,
                     const std::vector<std::pair<std::string, const nn::Tensor*>>& tensors) {
    std::string out = "VXC1";
    put_u32(out, static_cast<std::uint32_t>(config_json.size()));
    out += config_json;
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(t->shape.size()));
        for (std::size_t d : t->shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : t->data) put_f32(out, static_cast<float>(v));
    }
    write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::string raw = read_file(path);
    Reader r{raw};
    if (r.bytes(4) != "VXC1") fail(Errc::bad_magic, path + ": not a VXC1 checkpoint");
    Checkpoint c;
    c.config_json = r.bytes(r.u32());
    std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.bytes(r.u32());
        std::uint32_t ndim = r.u32();
        nn::Tensor t;
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            t.shape.push_back(r.u32());
            numel *= t.shape.back();
        }
        t.data.resize(numel);
        for (std::size_t j = 0; j < numel; ++j) t.data[j] = static_cast<double>(r.f32());
        if (c.tensors.count(name)) fail(Errc::bad_checkpoint, "duplicate tensor " + name);
        c.tensors.emplace(std::move(name), std::move(t));
    }
    return c;
}

std::vector<std::pair<std::string, const nn::Tensor*>> named_tensors(const nn::ParamStore& ps) {
    std::vector<std::pair<std::string, const nn::Tensor*>> out;
    out.reserve(ps.params.size());
    for (const auto& p : ps.params) out.emplace_back(p->name, &p->value);
    return out;
}

nn::Tensor round_f32(const nn::Tensor& t) {
    nn::Tensor out = t;
    for (double& v : out.data) v = static_cast<double>(static_cast<float>(v));
    return out;
}

} // namespace vexel::ckpt
