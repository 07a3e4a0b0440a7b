#pragma once

#include "vexel/config.hpp"
#include "vexel/features.hpp"
#include "vexel/nn.hpp"
#include "vexel/svg.hpp"

#include <memory>
#include <string>
#include <vector>

namespace vexel::vsdit {

/// Variance-preserving schedule derived from a linear beta ramp:
/// alpha[t] = sqrt(prod(1-beta)), sigma[t] = sqrt(1 - prod(1-beta)), so
/// alpha^2 + sigma^2 == 1 holds by construction.
struct NoiseSchedule {
    int t_steps = 1000;
    std::vector<double> alpha;
    std::vector<double> sigma;

    static NoiseSchedule linear_beta(int t_steps = 1000, double beta_start = 1e-4,
                                     double beta_end = 0.02);
    double t01(int index) const {
        return static_cast<double>(index) / static_cast<double>(t_steps - 1);
    }
};

/// z_t = alpha_t z + sigma_t eps.
nn::Tensor q_sample(const nn::Tensor& z, int t_index, const nn::Tensor& eps,
                    const NoiseSchedule& sched);

/// eps_hat = eps_uncond + w (eps_cond - eps_uncond).
nn::Tensor cfg_noise(const nn::Tensor& eps_cond, const nn::Tensor& eps_uncond, double w);

/// Seeded Bernoulli used for the 10% condition dropout.
bool drop_condition(nn::Rng& rng, double p);

/// Diffusion transformer over latent token sequences. Each block applies
/// adaLN-modulated rotary self-attention (zero-initialized gates), text
/// cross-attention between the self-attention and feed-forward stages, and an
/// adaLN-modulated feed-forward, with time conditioning from an MLP over a
/// sinusoidal embedding.
class VSDiT {
public:
    VSDiT(const config::DitConfig& cfg, int d_z, int n_tokens, std::uint64_t seed);

    const config::DitConfig& config() const { return cfg_; }
    int d_z() const { return d_z_; }
    int n_tokens() const { return n_tokens_; }
    nn::ParamStore& params() { return ps_; }
    const nn::ParamStore& params() const { return ps_; }

    nn::Var predict_graph(const nn::Tensor& z_t, double t01, const nn::Tensor& text_tokens) const;
    /// Value-level forward; bumps eval_count (the sampling audit counter).
    nn::Tensor predict_noise(const nn::Tensor& z_t, double t01, const nn::Tensor& text_tokens) const;

    mutable long eval_count = 0;

private:
    struct Block {
        nn::Var adaln_w, adaln_b; // hidden x 6*hidden, zero-initialized
        nn::Attention sattn;
        nn::Attention xattn;
        nn::Linear fc1, fc2;
    };

    nn::Var time_embedding(double t01) const;
    nn::Var block_forward(const Block& b, const nn::Var& x, const nn::Var& t_act,
                          const nn::Var& text_kv) const;

    config::DitConfig cfg_;
    int d_z_ = 0;
    int n_tokens_ = 0;
    nn::ParamStore ps_;
    nn::Linear in_proj_;
    nn::Linear time_fc1_, time_fc2_;
    nn::Linear text_proj_;
    std::vector<Block> blocks_;
    nn::Var final_adaln_w_, final_adaln_b_;
    nn::Linear out_proj_;
};

/// Eq.-style denoising objective over a batch of latents: per example draw a
/// uniform timestep and unit Gaussian noise, drop the text condition with
/// probability `dropout`, and average the squared error of the predicted
/// noise.
nn::Var dit_loss_graph(const VSDiT& model, const std::vector<nn::Tensor>& latents,
                       const std::vector<nn::Tensor>& texts, const NoiseSchedule& sched,
                       nn::Rng& rng, double dropout);

/// Deterministic DDIM (eta = 0) over a uniform stride of `steps` timesteps.
/// With w == 1 or a null condition the unconditional branch is never
/// evaluated.
nn::Tensor ddim_sample(const VSDiT& model, const NoiseSchedule& sched,
                       const cond::TextEmbedding& text, int steps, double w, std::uint64_t seed);

struct DitTrainOptions {
    long steps = 1000;
    std::uint64_t seed = 0;
    int batch = 8;
    std::string out_dir;   // receives dit.vxc and dit_trace.csv
    std::string cache_dir; // shared feature cache
};

struct DitTrainResult {
    double final_loss = 0;
    double latent_scale = 1;
    std::string checkpoint_path;
    std::string trace_path;
};

DitTrainResult train_dit(const std::vector<config::ManifestEntry>& manifest,
                         const std::string& vae_ckpt, const config::DitConfig& cfg,
                         const DitTrainOptions& opts);

void save_vsdit(const VSDiT& model, const config::Config& full_cfg, double latent_scale,
                const std::string& path);
std::unique_ptr<VSDiT> load_vsdit(const std::string& path, double* latent_scale_out = nullptr,
                                  config::Config* cfg_out = nullptr);

/// Full pipeline: prompt -> DDIM in latent space -> VP-VAE decode -> codec
/// unembed -> matrix decode -> quantized document. Refuses checkpoint pairs
/// with mismatched (N, D_z).
svg::Document text_to_svg(const std::string& prompt, const std::string& vae_ckpt,
                          const std::string& dit_ckpt, double w, int steps, std::uint64_t seed);

} // namespace vexel::vsdit
