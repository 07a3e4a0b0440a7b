#include "vexel/vsdit.hpp"

#include "vexel/checkpoint.hpp"
#include "vexel/normalize.hpp"
#include "vexel/vpvae.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

namespace vexel::vsdit {

using nn::Tensor;
using nn::Var;

NoiseSchedule NoiseSchedule::linear_beta(int t_steps, double beta_start, double beta_end) {
    NoiseSchedule s;
    s.t_steps = t_steps;
    s.alpha.resize(t_steps);
    s.sigma.resize(t_steps);
    double alpha_bar = 1.0;
    for (int t = 0; t < t_steps; ++t) {
        double beta = beta_start + (beta_end - beta_start) * static_cast<double>(t) /
                                       static_cast<double>(t_steps - 1);
        alpha_bar *= (1.0 - beta);
        s.alpha[t] = std::sqrt(alpha_bar);
        s.sigma[t] = std::sqrt(1.0 - alpha_bar);
    }
    return s;
}

Tensor q_sample(const Tensor& z, int t_index, const Tensor& eps, const NoiseSchedule& sched) {
    if (t_index < 0 || t_index >= sched.t_steps) fail(Errc::shape_mismatch, "q_sample: bad timestep");
    if (!z.same_shape(eps)) fail(Errc::shape_mismatch, "q_sample: eps shape");
    Tensor out = z;
    double a = sched.alpha[t_index], s = sched.sigma[t_index];
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * z.data[i] + s * eps.data[i];
    return out;
}

Tensor cfg_noise(const Tensor& eps_cond, const Tensor& eps_uncond, double w) {
    if (!eps_cond.same_shape(eps_uncond)) fail(Errc::shape_mismatch, "cfg_noise: shape mismatch");
    Tensor out = eps_uncond;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] += w * (eps_cond.data[i] - eps_uncond.data[i]);
    return out;
}

bool drop_condition(nn::Rng& rng, double p) { return rng.uniform() < p; }

// ----------------------------------------------------------------- model

VSDiT::VSDiT(const config::DitConfig& cfg, int d_z, int n_tokens, std::uint64_t seed)
    : cfg_(cfg), d_z_(d_z), n_tokens_(n_tokens) {
    cfg_.validate();
    nn::Rng rng(seed);
    std::size_t d = cfg_.hidden;
    std::size_t ff = d * static_cast<std::size_t>(cfg_.ff_mult);

    in_proj_ = nn::make_linear(ps_, "in_proj", d_z_, d, rng);
    time_fc1_ = nn::make_linear(ps_, "time.fc1", d, d, rng);
    time_fc2_ = nn::make_linear(ps_, "time.fc2", d, d, rng);
    text_proj_ = nn::make_linear(ps_, "text_proj", cfg_.d_txt, d, rng);

    for (int i = 0; i < cfg_.blocks; ++i) {
        std::string prefix = "blk" + std::to_string(i);
        Block b;
        b.adaln_w = ps_.add(prefix + ".adaln.w", Tensor(d, 6 * d)); // adaLN-zero
        b.adaln_b = ps_.add(prefix + ".adaln.b", Tensor(1, 6 * d));
        b.sattn = nn::make_attention(ps_, prefix + ".sattn", d, d, d, rng);
        b.xattn = nn::make_attention(ps_, prefix + ".xattn", d, d, d, rng);
        b.fc1 = nn::make_linear(ps_, prefix + ".fc1", d, ff, rng);
        b.fc2 = nn::make_linear(ps_, prefix + ".fc2", ff, d, rng);
        blocks_.push_back(std::move(b));
    }
    final_adaln_w_ = ps_.add("final.adaln.w", Tensor(d, 2 * d));
    final_adaln_b_ = ps_.add("final.adaln.b", Tensor(1, 2 * d));
    out_proj_.w = ps_.add("out.w", Tensor(d, d_z_)); // zero-initialized output
    out_proj_.b = ps_.add("out.b", Tensor(1, d_z_));
}

Var VSDiT::time_embedding(double t01) const {
    std::size_t d = cfg_.hidden;
    std::size_t half = d / 2;
    Tensor sincos(1, d);
    double tt = t01 * 1000.0;
    for (std::size_t i = 0; i < half; ++i) {
        double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
        sincos.data[i] = std::sin(tt * freq);
        sincos.data[half + i] = std::cos(tt * freq);
    }
    Var h = nn::gelu(nn::linear(nn::constant(std::move(sincos)), time_fc1_));
    return nn::linear(h, time_fc2_);
}

Var VSDiT::block_forward(const Block& b, const Var& x, const Var& t_act, const Var& text_kv) const {
    std::size_t d = cfg_.hidden;
    Var mod = nn::add_rowvec(nn::matmul(t_act, b.adaln_w), b.adaln_b); // 1 x 6d
    Var sh1 = nn::slice_cols(mod, 0, d);
    Var sc1 = nn::slice_cols(mod, d, 2 * d);
    Var g1 = nn::slice_cols(mod, 2 * d, 3 * d);
    Var sh2 = nn::slice_cols(mod, 3 * d, 4 * d);
    Var sc2 = nn::slice_cols(mod, 4 * d, 5 * d);
    Var g2 = nn::slice_cols(mod, 5 * d, 6 * d);

    Var a = nn::add_rowvec(nn::mul_rowvec(nn::layer_norm_rows(x), nn::add_scalar(sc1, 1.0)), sh1);
    Var y = nn::add(x, nn::mul_rowvec(nn::multi_head_attention(a, a, b.sattn, cfg_.heads, true), g1));
    y = nn::add(y, nn::multi_head_attention(nn::layer_norm_rows(y), text_kv, b.xattn, cfg_.heads, false));
    Var f = nn::add_rowvec(nn::mul_rowvec(nn::layer_norm_rows(y), nn::add_scalar(sc2, 1.0)), sh2);
    Var ffn = nn::linear(nn::gelu(nn::linear(f, b.fc1)), b.fc2);
    return nn::add(y, nn::mul_rowvec(ffn, g2));
}

Var VSDiT::predict_graph(const Tensor& z_t, double t01, const Tensor& text_tokens) const {
    if (z_t.rows() != static_cast<std::size_t>(n_tokens_) ||
        z_t.cols() != static_cast<std::size_t>(d_z_))
        fail(Errc::shape_mismatch, "predict_graph: latent must be N x d_z");
    if (text_tokens.rows() != static_cast<std::size_t>(cfg_.t_txt) ||
        text_tokens.cols() != static_cast<std::size_t>(cfg_.d_txt))
        fail(Errc::shape_mismatch, "predict_graph: text tokens must be T_txt x d_txt");

    Var t_act = nn::gelu(time_embedding(t01));
    Var text_kv = nn::linear(nn::constant(text_tokens), text_proj_);
    Var x = nn::linear(nn::constant(z_t), in_proj_);
    for (const auto& b : blocks_) x = block_forward(b, x, t_act, text_kv);

    std::size_t d = cfg_.hidden;
    Var mod = nn::add_rowvec(nn::matmul(t_act, final_adaln_w_), final_adaln_b_);
    Var sh = nn::slice_cols(mod, 0, d);
    Var sc = nn::slice_cols(mod, d, 2 * d);
    Var y = nn::add_rowvec(nn::mul_rowvec(nn::layer_norm_rows(x), nn::add_scalar(sc, 1.0)), sh);
    return nn::linear(y, out_proj_);
}

Tensor VSDiT::predict_noise(const Tensor& z_t, double t01, const Tensor& text_tokens) const {
    ++eval_count;
    return predict_graph(z_t, t01, text_tokens)->value;
}

// ----------------------------------------------------------------- loss

Var dit_loss_graph(const VSDiT& model, const std::vector<Tensor>& latents,
                   const std::vector<Tensor>& texts, const NoiseSchedule& sched, nn::Rng& rng,
                   double dropout) {
    if (latents.empty() || latents.size() != texts.size())
        fail(Errc::shape_mismatch, "dit_loss: latents/texts mismatch");
    Tensor null_text(model.config().t_txt, model.config().d_txt);
    Var total;
    for (std::size_t i = 0; i < latents.size(); ++i) {
        int t_idx = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(sched.t_steps));
        Tensor eps = rng.normal_tensor(latents[i].rows(), latents[i].cols());
        Tensor z_t = q_sample(latents[i], t_idx, eps, sched);
        const Tensor& text = drop_condition(rng, dropout) ? null_text : texts[i];
        Var pred = model.predict_graph(z_t, sched.t01(t_idx), text);
        Var loss = nn::mean_all(nn::square(nn::sub(pred, nn::constant(std::move(eps)))));
        total = total ? nn::add(total, loss) : loss;
    }
    return nn::scale(total, 1.0 / static_cast<double>(latents.size()));
}

// ----------------------------------------------------------------- sampling

Tensor ddim_sample(const VSDiT& model, const NoiseSchedule& sched, const cond::TextEmbedding& text,
                   int steps, double w, std::uint64_t seed) {
    if (steps < 1 || steps > sched.t_steps)
        fail(Errc::shape_mismatch, "ddim_sample: steps must be in [1, t_steps]");
    nn::Rng rng(seed);
    Tensor z = rng.normal_tensor(model.n_tokens(), model.d_z());

    Tensor null_text(model.config().t_txt, model.config().d_txt);
    bool guided = w != 1.0 && !text.null_flag;

    // uniform stride from t_steps-1 down to 0
    std::vector<int> idxs(steps);
    for (int j = 0; j < steps; ++j) {
        idxs[j] = steps == 1 ? sched.t_steps - 1
                             : static_cast<int>((static_cast<long>(sched.t_steps - 1) * j) / (steps - 1));
    }

    for (int j = steps - 1; j >= 0; --j) {
        int t = idxs[j];
        double t01 = sched.t01(t);
        Tensor eps_hat = model.predict_noise(z, t01, text.tokens);
        if (guided) eps_hat = cfg_noise(eps_hat, model.predict_noise(z, t01, null_text), w);

        double at = sched.alpha[t], st = sched.sigma[t];
        Tensor x0 = z;
        for (std::size_t i = 0; i < x0.data.size(); ++i)
            x0.data[i] = (z.data[i] - st * eps_hat.data[i]) / at;
        if (j == 0) {
            z = std::move(x0);
        } else {
            int tp = idxs[j - 1];
            double ap = sched.alpha[tp], sp = sched.sigma[tp];
            for (std::size_t i = 0; i < z.data.size(); ++i)
                z.data[i] = ap * x0.data[i] + sp * eps_hat.data[i];
        }
    }
    return z;
}

// ----------------------------------------------------------------- training

DitTrainResult train_dit(const std::vector<config::ManifestEntry>& manifest,
                         const std::string& vae_ckpt, const config::DitConfig& cfg,
                         const DitTrainOptions& opts) {
    auto vae = vpvae::load_vpvae(vae_ckpt);
    const config::VaeConfig& vcfg = vae->config();
    std::filesystem::create_directories(opts.out_dir);
    std::string cache_dir = opts.cache_dir;
    if (cache_dir.empty()) {
        if (const char* env = std::getenv("VEXEL_CACHE")) cache_dir = env;
        else cache_dir = (std::filesystem::path(opts.out_dir) / "cache").string();
    }

    std::vector<Tensor> latents, texts;
    for (const auto& entry : manifest) {
        svg::Document doc = svg::parse_svg(read_file(entry.svg_path));
        if (!normalize::is_normalized_grammar(doc) || doc.canvas != vcfg.canvas)
            fail(Errc::manifest_error, entry.svg_path + ": not normalized for this VP-VAE");
        codec::SvgMatrix m = codec::encode_matrix(doc, {}, vcfg.n_tokens);
        codec::SvgMatrix normalized = codec::normalize_continuous(m, doc.canvas);
        cond::PixelFeatures pix = vpvae::stage_features(doc, vcfg, cache_dir);
        latents.push_back(vae->encode_mu(normalized, pix.tokens));
        texts.push_back(cond::embed_text_stub(entry.caption, cfg.d_txt, cfg.t_txt).tokens);
    }

    // scale latents to unit RMS so the diffusion operates at noise scale
    double sq = 0;
    std::size_t count = 0;
    for (const auto& z : latents) {
        for (double v : z.data) sq += v * v;
        count += z.data.size();
    }
    double latent_scale = std::max(std::sqrt(sq / static_cast<double>(count)), 1e-8);
    for (auto& z : latents)
        for (double& v : z.data) v /= latent_scale;

    VSDiT model(cfg, vcfg.d_z, vcfg.n_tokens, opts.seed);
    NoiseSchedule sched = NoiseSchedule::linear_beta(cfg.t_steps);
    nn::AdamW opt;
    opt.weight_decay = cfg.weight_decay;
    opt.init(model.params().params);
    nn::Rng rng(opts.seed ^ 0xd17f00dULL);

    std::ostringstream trace;
    trace << "step,lr,loss\n";
    double last_loss = 0;

    for (long s = 1; s <= opts.steps; ++s) {
        std::vector<Tensor> batch_z, batch_t;
        if (static_cast<int>(latents.size()) <= opts.batch) {
            batch_z = latents;
            batch_t = texts;
        } else {
            for (int b = 0; b < opts.batch; ++b) {
                std::size_t i = rng.next_u64() % latents.size();
                batch_z.push_back(latents[i]);
                batch_t.push_back(texts[i]);
            }
        }
        model.params().zero_grad();
        Var loss = dit_loss_graph(model, batch_z, batch_t, sched, rng, cfg.cond_dropout);
        last_loss = loss->value.item();
        if (!std::isfinite(last_loss))
            fail(Errc::non_finite_loss, "train_dit: non-finite loss at step " + std::to_string(s));
        nn::backward(loss);
        nn::clip_grad_norm(model.params().params, cfg.clip_norm);
        double lr = nn::lr_schedule(s, opts.steps, cfg.warmup, cfg.lr_peak, cfg.lr_floor);
        opt.step(model.params().params, lr);
        if (s == 1 || s % 50 == 0 || s == opts.steps)
            trace << s << "," << format_double(lr) << "," << format_double(last_loss) << "\n";
    }

    nlohmann::json vae_header = nlohmann::json::parse(ckpt::load_checkpoint(vae_ckpt).config_json);
    config::Config full = config::parse_config(vae_header.at("config").dump());
    full.dit = cfg;

    DitTrainResult result;
    result.final_loss = last_loss;
    result.latent_scale = latent_scale;
    result.checkpoint_path = (std::filesystem::path(opts.out_dir) / "dit.vxc").string();
    result.trace_path = (std::filesystem::path(opts.out_dir) / "dit_trace.csv").string();
    save_vsdit(model, full, latent_scale, result.checkpoint_path);
    write_file_atomic(result.trace_path, trace.str());
    return result;
}

void save_vsdit(const VSDiT& model, const config::Config& full_cfg, double latent_scale,
                const std::string& path) {
    nlohmann::ordered_json header;
    header["model"] = "vsdit";
    header["d_z"] = model.d_z();
    header["n_tokens"] = model.n_tokens();
    header["latent_scale"] = latent_scale;
    config::Config full = full_cfg;
    full.dit = model.config();
    header["config"] = nlohmann::ordered_json::parse(config::to_json(full));
    ckpt::save_checkpoint(path, header.dump(), ckpt::named_tensors(model.params()));
}

std::unique_ptr<VSDiT> load_vsdit(const std::string& path, double* latent_scale_out,
                                  config::Config* cfg_out) {
    ckpt::Checkpoint c = ckpt::load_checkpoint(path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(c.config_json);
    } catch (const nlohmann::json::exception&) {
        fail(Errc::bad_checkpoint, path + ": unreadable config header");
    }
    if (!header.contains("model") || header.at("model") != "vsdit")
        fail(Errc::bad_checkpoint, path + ": not a VS-DiT checkpoint");
    config::Config cfg = config::parse_config(header.at("config").dump());
    int d_z = header.at("d_z").get<int>();
    int n_tokens = header.at("n_tokens").get<int>();
    auto model = std::make_unique<VSDiT>(cfg.dit, d_z, n_tokens, /*seed=*/1);
    model->params().load_values(c.tensors);
    if (latent_scale_out) *latent_scale_out = header.at("latent_scale").get<double>();
    if (cfg_out) *cfg_out = cfg;
    return model;
}

svg::Document text_to_svg(const std::string& prompt, const std::string& vae_ckpt,
                          const std::string& dit_ckpt, double w, int steps, std::uint64_t seed) {
    auto vae = vpvae::load_vpvae(vae_ckpt);
    double latent_scale = 1.0;
    config::Config dit_cfg;
    auto dit = load_vsdit(dit_ckpt, &latent_scale, &dit_cfg);
    const config::VaeConfig& vcfg = vae->config();
    if (dit->d_z() != vcfg.d_z || dit->n_tokens() != vcfg.n_tokens)
        fail(Errc::incompatible_checkpoints,
             "sample: VS-DiT checkpoint was trained for (N=" + std::to_string(dit->n_tokens()) +
                 ", D_z=" + std::to_string(dit->d_z()) + ") but the VP-VAE has (N=" +
                 std::to_string(vcfg.n_tokens) + ", D_z=" + std::to_string(vcfg.d_z) + ")");

    cond::TextEmbedding text = cond::embed_text_stub(prompt, dit->config().d_txt, dit->config().t_txt);
    NoiseSchedule sched = NoiseSchedule::linear_beta(dit->config().t_steps);
    Tensor z = ddim_sample(*dit, sched, text, steps, w, seed);
    for (double& v : z.data) v *= latent_scale;

    Tensor recon = vae->decode_tokens(z);
    codec::SvgMatrix m = codec::unembed(recon, vae->tables(), vcfg.canvas);
    codec::repair_framing(m);
    svg::Document doc = codec::decode_matrix(m, {}, /*strict=*/false);
    return normalize::quantize_precision(doc, 2);
}

} // namespace vexel::vsdit
