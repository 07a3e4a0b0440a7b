#include "vexel/config.hpp"

#include "vexel/common.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace vexel::config {

using nlohmann::ordered_json;

void VaeConfig::validate() const {
    if (n_tokens < 4) fail(Errc::bad_config, "vae.n_tokens must be >= 4");
    if (layers < 1) fail(Errc::bad_config, "vae.layers must be >= 1");
    if (heads < 1 || d_z % heads != 0 || d_e % heads != 0)
        fail(Errc::bad_config, "vae: d_z and d_e must be divisible by heads");
    if ((d_z / heads) % 2 != 0 || (d_e / heads) % 2 != 0)
        fail(Errc::bad_config, "vae: head width must be even for rotary embeddings");
    if (stages < 1) fail(Errc::bad_config, "vae.stages must be >= 1");
    if (d_tok < 1 || d_p < 1 || ff_dim < 1) fail(Errc::bad_config, "vae: dims must be positive");
    if (mse_space != "embedding" && mse_space != "matrix")
        fail(Errc::bad_config, "vae.mse_space must be 'embedding' or 'matrix'");
    if (canvas < 1) fail(Errc::bad_config, "vae.canvas must be positive");
}

void DitConfig::validate() const {
    if (blocks < 1) fail(Errc::bad_config, "dit.blocks must be >= 1");
    if (heads < 1 || hidden % heads != 0) fail(Errc::bad_config, "dit.hidden must be divisible by heads");
    if ((hidden / heads) % 2 != 0) fail(Errc::bad_config, "dit: head width must be even for rotary embeddings");
    if (t_steps < 2) fail(Errc::bad_config, "dit.t_steps must be >= 2");
    if (cond_dropout < 0 || cond_dropout > 1) fail(Errc::bad_config, "dit.cond_dropout must be in [0,1]");
    if (d_txt < 1 || t_txt < 1 || ff_mult < 1) fail(Errc::bad_config, "dit: dims must be positive");
}

void apply_dit_preset(DitConfig& cfg, const std::string& name) {
    if (name == "S") {
        cfg.blocks = 12;
        cfg.hidden = 384;
        cfg.heads = 6;
    } else if (name == "B") {
        cfg.blocks = 12;
        cfg.hidden = 768;
        cfg.heads = 12;
    } else if (name == "L") {
        cfg.blocks = 24;
        cfg.hidden = 1024;
        cfg.heads = 16;
    } else if (name == "tiny") {
        cfg.blocks = 2;
        cfg.hidden = 64;
        cfg.heads = 2;
    } else {
        fail(Errc::bad_config, "unknown dit preset '" + name + "' (expected tiny|S|B|L)");
    }
    cfg.preset = name;
}

VaeConfig vae_tiny() {
    VaeConfig cfg;
    cfg.n_tokens = 64;
    cfg.layers = 2;
    cfg.ff_dim = 128;
    cfg.d_e = 64;
    cfg.d_p = 64;
    cfg.d_z = 8;
    cfg.d_tok = 16; // keeps the embedding projection full-rank at d_e = 64
    cfg.heads = 2;
    cfg.stages = 4;
    return cfg;
}

namespace {

[[noreturn]] void bad(const std::string& msg) { fail(Errc::bad_config, msg); }

void check_keys(const ordered_json& obj, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) bad("config: unknown key '" + where + key + "'");
    }
}

template <typename T>
void read_field(const ordered_json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        bad(std::string("config: bad value for '") + key + "'");
    }
}

} // namespace

Config parse_config(const std::string& json_text) {
    ordered_json root;
    try {
        root = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        bad(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) bad("config: root must be an object");
    check_keys(root, {"schema", "vae", "dit"}, "");

    Config cfg;
    read_field(root, "schema", cfg.schema);
    if (cfg.schema != 1) bad("config: unsupported schema version " + std::to_string(cfg.schema));

    if (root.contains("vae")) {
        const auto& v = root.at("vae");
        if (!v.is_object()) bad("config: 'vae' must be an object");
        check_keys(v, {"n_tokens", "layers", "ff_dim", "d_e", "d_p", "d_z", "d_tok", "heads",
                       "stages", "lambda_kl", "mse_space", "canvas", "warmup", "lr_peak",
                       "lr_floor", "weight_decay", "clip_norm"},
                   "vae.");
        read_field(v, "n_tokens", cfg.vae.n_tokens);
        read_field(v, "layers", cfg.vae.layers);
        read_field(v, "ff_dim", cfg.vae.ff_dim);
        read_field(v, "d_e", cfg.vae.d_e);
        read_field(v, "d_p", cfg.vae.d_p);
        read_field(v, "d_z", cfg.vae.d_z);
        read_field(v, "d_tok", cfg.vae.d_tok);
        read_field(v, "heads", cfg.vae.heads);
        read_field(v, "stages", cfg.vae.stages);
        read_field(v, "lambda_kl", cfg.vae.lambda_kl);
        read_field(v, "mse_space", cfg.vae.mse_space);
        read_field(v, "canvas", cfg.vae.canvas);
        read_field(v, "warmup", cfg.vae.warmup);
        read_field(v, "lr_peak", cfg.vae.lr_peak);
        read_field(v, "lr_floor", cfg.vae.lr_floor);
        read_field(v, "weight_decay", cfg.vae.weight_decay);
        read_field(v, "clip_norm", cfg.vae.clip_norm);
    }
    if (root.contains("dit")) {
        const auto& d = root.at("dit");
        if (!d.is_object()) bad("config: 'dit' must be an object");
        check_keys(d, {"preset", "blocks", "hidden", "heads", "t_steps", "d_txt", "t_txt",
                       "ff_mult", "cond_dropout", "warmup", "lr_peak", "lr_floor",
                       "weight_decay", "clip_norm"},
                   "dit.");
        std::string preset;
        read_field(d, "preset", preset);
        if (!preset.empty()) apply_dit_preset(cfg.dit, preset);
        read_field(d, "blocks", cfg.dit.blocks);
        read_field(d, "hidden", cfg.dit.hidden);
        read_field(d, "heads", cfg.dit.heads);
        read_field(d, "t_steps", cfg.dit.t_steps);
        read_field(d, "d_txt", cfg.dit.d_txt);
        read_field(d, "t_txt", cfg.dit.t_txt);
        read_field(d, "ff_mult", cfg.dit.ff_mult);
        read_field(d, "cond_dropout", cfg.dit.cond_dropout);
        read_field(d, "warmup", cfg.dit.warmup);
        read_field(d, "lr_peak", cfg.dit.lr_peak);
        read_field(d, "lr_floor", cfg.dit.lr_floor);
        read_field(d, "weight_decay", cfg.dit.weight_decay);
        read_field(d, "clip_norm", cfg.dit.clip_norm);
    }
    cfg.vae.validate();
    cfg.dit.validate();
    return cfg;
}

Config load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string to_json(const Config& cfg) {
    ordered_json root;
    root["schema"] = cfg.schema;
    ordered_json v;
    v["n_tokens"] = cfg.vae.n_tokens;
    v["layers"] = cfg.vae.layers;
    v["ff_dim"] = cfg.vae.ff_dim;
    v["d_e"] = cfg.vae.d_e;
    v["d_p"] = cfg.vae.d_p;
    v["d_z"] = cfg.vae.d_z;
    v["d_tok"] = cfg.vae.d_tok;
    v["heads"] = cfg.vae.heads;
    v["stages"] = cfg.vae.stages;
    v["lambda_kl"] = cfg.vae.lambda_kl;
    v["mse_space"] = cfg.vae.mse_space;
    v["canvas"] = cfg.vae.canvas;
    v["warmup"] = cfg.vae.warmup;
    v["lr_peak"] = cfg.vae.lr_peak;
    v["lr_floor"] = cfg.vae.lr_floor;
    v["weight_decay"] = cfg.vae.weight_decay;
    v["clip_norm"] = cfg.vae.clip_norm;
    root["vae"] = v;
    ordered_json d;
    if (!cfg.dit.preset.empty()) d["preset"] = cfg.dit.preset;
    d["blocks"] = cfg.dit.blocks;
    d["hidden"] = cfg.dit.hidden;
    d["heads"] = cfg.dit.heads;
    d["t_steps"] = cfg.dit.t_steps;
    d["d_txt"] = cfg.dit.d_txt;
    d["t_txt"] = cfg.dit.t_txt;
    d["ff_mult"] = cfg.dit.ff_mult;
    d["cond_dropout"] = cfg.dit.cond_dropout;
    d["warmup"] = cfg.dit.warmup;
    d["lr_peak"] = cfg.dit.lr_peak;
    d["lr_floor"] = cfg.dit.lr_floor;
    d["weight_decay"] = cfg.dit.weight_decay;
    d["clip_norm"] = cfg.dit.clip_norm;
    root["dit"] = d;
    return root.dump(2);
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::manifest_error, "cannot open manifest " + path);
    std::filesystem::path base = std::filesystem::path(path).parent_path();

    std::vector<ManifestEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ordered_json obj;
        try {
            obj = ordered_json::parse(line);
        } catch (const nlohmann::json::exception&) {
            fail(Errc::manifest_error, path + ":" + std::to_string(lineno) + ": invalid JSON line");
        }
        if (!obj.is_object() || !obj.contains("svg"))
            fail(Errc::manifest_error, path + ":" + std::to_string(lineno) + ": need {\"svg\": ..., \"caption\": ...}");
        ManifestEntry e;
        std::string svg = obj.at("svg").get<std::string>();
        std::filesystem::path p(svg);
        e.svg_path = p.is_absolute() ? p.string() : (base / p).string();
        if (obj.contains("caption")) e.caption = obj.at("caption").get<std::string>();
        entries.push_back(std::move(e));
    }
    if (entries.empty()) fail(Errc::manifest_error, path + ": empty manifest");
    return entries;
}

} // namespace vexel::config
