#pragma once

#include "vexel/codec.hpp"
#include "vexel/config.hpp"
#include "vexel/features.hpp"
#include "vexel/nn.hpp"
#include "vexel/svg.hpp"

#include <memory>
#include <string>
#include <vector>

namespace vexel::vpvae {

struct Latent {
    nn::Var mu;     // N x D_z
    nn::Var logvar; // N x D_z, clamped to [-20, 4]
    nn::Var z;      // N x D_z
};

/// Vector-Pixel Fusion VAE. The encoder projects SVG and pixel token streams
/// to D_z, fuses them with one cross-attention layer (SVG tokens as queries)
/// and L rotary self-attention layers, then maps to a diagonal Gaussian
/// posterior. The decoder mirrors the stack without cross-attention and
/// reconstructs token embeddings at D_e. Embedding tables are trained with
/// the model and shared with the codec.
class VPVAE {
public:
    VPVAE(const config::VaeConfig& cfg, std::uint64_t seed);

    const config::VaeConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return ps_; }
    const nn::ParamStore& params() const { return ps_; }

    /// Differentiable embedding of a normalized matrix: N x D_e tokens.
    nn::Var embed_graph(const codec::SvgMatrix& normalized) const;
    /// Encoder graph; eps == nullptr collapses the reparameterization (z = mu).
    Latent encode_graph(const nn::Var& emb, const nn::Tensor& pix_tokens,
                        const nn::Tensor* eps) const;
    nn::Var decode_graph(const nn::Var& z) const;

    struct LossVars {
        nn::Var total, mse, kl;
    };
    /// Eq.-style objective: masked MSE plus lambda_KL * KL(posterior || N(0,I)).
    /// The reconstruction target is treated as a constant (no gradient flows
    /// through the target side). In "matrix" mse_space the MSE is taken over
    /// continuous matrix columns recovered via the projection pseudo-inverse.
    LossVars loss_graph(const nn::Var& recon, const nn::Var& emb_target, const Latent& lat,
                        const codec::SvgMatrix& normalized, const std::vector<double>& mask) const;

    /// Snapshot of the embedding tables for codec-level embed/unembed.
    codec::EmbedTables tables() const;

    // value-level helpers (no gradients kept)
    nn::Tensor encode_mu(const codec::SvgMatrix& normalized, const nn::Tensor& pix) const;
    nn::Tensor encode_sampled(const codec::SvgMatrix& normalized, const nn::Tensor& pix,
                              std::uint64_t seed, nn::Tensor* mu_out = nullptr,
                              nn::Tensor* logvar_out = nullptr) const;
    nn::Tensor decode_tokens(const nn::Tensor& z) const;

private:
    struct Block {
        nn::Var ln1_g, ln1_b;
        nn::Attention attn;
        nn::Var ln2_g, ln2_b;
        nn::Linear fc1, fc2;
    };

    nn::Var block_forward(const Block& b, const nn::Var& x, int heads) const;
    Block make_block(const std::string& prefix, std::size_t d, std::size_t ff, nn::Rng& rng);

    config::VaeConfig cfg_;
    nn::ParamStore ps_;
    nn::Var elem_emb_, cmd_emb_, pos_emb_, proj_;
    nn::Linear proj_e_, proj_p_;
    nn::Attention xattn_;
    std::vector<Block> enc_blocks_;
    nn::Var enc_lnf_g_, enc_lnf_b_;
    nn::Linear mu_head_, logvar_head_;
    nn::Linear up_;
    std::vector<Block> dec_blocks_;
    nn::Var dec_lnf_g_, dec_lnf_b_;
    nn::Linear out_;
};

/// Monotone prefixes for rendering-sequence batches: stage k of B holds the
/// first ceil(k*n/B) elements in paint order; stage B is the whole document.
std::vector<svg::Document> build_stages(const svg::Document& doc, int b);

/// 1.0 for rows up to and including EOS, 0.0 for PAD rows.
std::vector<double> row_mask(const codec::SvgMatrix& m);

/// Pixel features for a document state: rasterize at the configured canvas
/// and run the stub extractor. Cached as .vxf keyed by content when
/// `cache_dir` is non-empty.
cond::PixelFeatures stage_features(const svg::Document& doc, const config::VaeConfig& cfg,
                                   const std::string& cache_dir);

struct TrainOptions {
    long steps = 1000;
    std::uint64_t seed = 0;
    std::string out_dir;       // receives vae.vxc and vae_trace.csv
    std::string cache_dir;     // feature cache; empty = out_dir/cache
    bool quiet = false;
};

struct TrainResult {
    double final_mse = 0;
    double final_kl = 0;
    double eval_mse = 0;       // masked MSE over full documents, z = mu
    double token_accuracy = 0; // discrete recovery through decode+unembed
    std::string checkpoint_path;
    std::string trace_path;
};

TrainResult train_vae(const std::vector<config::ManifestEntry>& manifest,
                      const config::VaeConfig& cfg, const TrainOptions& opts);

void save_vpvae(const VPVAE& model, const std::string& path);
std::unique_ptr<VPVAE> load_vpvae(const std::string& path);

/// Masked reconstruction MSE (z = mu) of one document.
double eval_mse(const VPVAE& model, const svg::Document& doc, const cond::PixelFeatures& pix);
/// Fraction of non-PAD rows whose (rho, tau) survive encode->decode->unembed.
double token_accuracy(const VPVAE& model, const svg::Document& doc, const cond::PixelFeatures& pix);

} // namespace vexel::vpvae
