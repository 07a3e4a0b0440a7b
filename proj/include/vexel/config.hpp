#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vexel::config {

struct VaeConfig {
    int n_tokens = 1024; // N, max command rows
    int layers = 4;      // self-attention depth (encoder and decoder)
    int ff_dim = 512;
    int d_e = 256;
    int d_p = 64;
    int d_z = 16;
    int d_tok = 32;
    int heads = 4;
    int stages = 8; // B, rendering-sequence batch
    double lambda_kl = 1e-4;
    std::string mse_space = "embedding"; // or "matrix"
    int canvas = 128;
    // training
    long warmup = 2000;
    double lr_peak = 3e-4;
    double lr_floor = 1.5e-5;
    double weight_decay = 0.1;
    double clip_norm = 2.0;

    void validate() const;
};

struct DitConfig {
    std::string preset; // tiny|S|B|L, applied on load; empty keeps fields
    int blocks = 12;
    int hidden = 384;
    int heads = 6;
    int t_steps = 1000;
    int d_txt = 64;
    int t_txt = 16;
    int ff_mult = 4;
    double cond_dropout = 0.1;
    // training
    long warmup = 2000;
    double lr_peak = 3e-4;
    double lr_floor = 1.5e-5;
    double weight_decay = 0.1;
    double clip_norm = 2.0;

    void validate() const;
};

struct Config {
    int schema = 1;
    VaeConfig vae;
    DitConfig dit;
};

/// Table-3 presets S/B/L plus the desk-scale tiny config.
void apply_dit_preset(DitConfig& cfg, const std::string& name);

/// Desk-scale VP-VAE used by overfit experiments and gradcheck.
VaeConfig vae_tiny();

/// Strict JSON parsing: unknown keys are errors, every field has a default.
Config parse_config(const std::string& json_text);
Config load_config(const std::string& path);

/// Fully resolved JSON (every field explicit); round-trips through
/// parse_config.
std::string to_json(const Config& cfg);

struct ManifestEntry {
    std::string svg_path; // resolved against the manifest location
    std::string caption;
};

/// JSON-lines manifest: one {"svg": path, "caption": text} object per line.
std::vector<ManifestEntry> load_manifest(const std::string& path);

} // namespace vexel::config
