#include "vexel/vpvae.hpp"

#include "vexel/checkpoint.hpp"
#include "vexel/normalize.hpp"
#include "vexel/raster.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

namespace vexel::vpvae {

using codec::SvgMatrix;
using nn::Tensor;
using nn::Var;

VPVAE::VPVAE(const config::VaeConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    nn::Rng rng(seed);
    std::size_t de = cfg_.d_e, dz = cfg_.d_z, dp = cfg_.d_p, dtok = cfg_.d_tok;
    std::size_t n = cfg_.n_tokens, ff = cfg_.ff_dim;

    codec::EmbedTables t = codec::init_embed_tables(static_cast<int>(n), static_cast<int>(de),
                                                    static_cast<int>(dtok), rng.next_u64());
    elem_emb_ = ps_.add("tables.elem", t.elem_emb);
    cmd_emb_ = ps_.add("tables.cmd", t.cmd_emb);
    pos_emb_ = ps_.add("tables.pos", t.pos_emb);
    proj_ = ps_.add("tables.proj", t.proj);

    proj_e_ = nn::make_linear(ps_, "enc.proj_e", de, dz, rng);
    proj_p_ = nn::make_linear(ps_, "enc.proj_p", dp, dz, rng);
    xattn_ = nn::make_attention(ps_, "enc.xattn", dz, dz, dz, rng);
    for (int i = 0; i < cfg_.layers; ++i)
        enc_blocks_.push_back(make_block("enc.blk" + std::to_string(i), dz, ff, rng));
    enc_lnf_g_ = ps_.add("enc.lnf.g", Tensor(1, dz, 1.0));
    enc_lnf_b_ = ps_.add("enc.lnf.b", Tensor(1, dz));
    mu_head_ = nn::make_linear(ps_, "enc.mu", dz, dz, rng);
    logvar_head_ = nn::make_linear(ps_, "enc.logvar", dz, dz, rng);

    up_ = nn::make_linear(ps_, "dec.up", dz, de, rng);
    for (int i = 0; i < cfg_.layers; ++i)
        dec_blocks_.push_back(make_block("dec.blk" + std::to_string(i), de, ff, rng));
    dec_lnf_g_ = ps_.add("dec.lnf.g", Tensor(1, de, 1.0));
    dec_lnf_b_ = ps_.add("dec.lnf.b", Tensor(1, de));
    out_ = nn::make_linear(ps_, "dec.out", de, de, rng);
}

VPVAE::Block VPVAE::make_block(const std::string& prefix, std::size_t d, std::size_t ff, nn::Rng& rng) {
    Block b;
    b.ln1_g = ps_.add(prefix + ".ln1.g", Tensor(1, d, 1.0));
    b.ln1_b = ps_.add(prefix + ".ln1.b", Tensor(1, d));
    b.attn = nn::make_attention(ps_, prefix + ".attn", d, d, d, rng);
    b.ln2_g = ps_.add(prefix + ".ln2.g", Tensor(1, d, 1.0));
    b.ln2_b = ps_.add(prefix + ".ln2.b", Tensor(1, d));
    b.fc1 = nn::make_linear(ps_, prefix + ".fc1", d, ff, rng);
    b.fc2 = nn::make_linear(ps_, prefix + ".fc2", ff, d, rng);
    return b;
}

namespace {

Var affine_ln(const Var& x, const Var& g, const Var& b) {
    return nn::add_rowvec(nn::mul_rowvec(nn::layer_norm_rows(x), g), b);
}

} // namespace

Var VPVAE::block_forward(const Block& b, const Var& x, int heads) const {
    Var a = affine_ln(x, b.ln1_g, b.ln1_b);
    Var y = nn::add(x, nn::multi_head_attention(a, a, b.attn, heads, /*rope=*/true));
    Var f = affine_ln(y, b.ln2_g, b.ln2_b);
    return nn::add(y, nn::linear(nn::gelu(nn::linear(f, b.fc1)), b.fc2));
}

Var VPVAE::embed_graph(const SvgMatrix& normalized) const {
    if (normalized.rows != cfg_.n_tokens)
        fail(Errc::shape_mismatch, "embed_graph: matrix rows != n_tokens");
    std::vector<std::size_t> rho(normalized.rows), tau(normalized.rows);
    Tensor cont(normalized.rows, 12);
    for (int r = 0; r < normalized.rows; ++r) {
        rho[r] = static_cast<std::size_t>(std::lround(normalized.at(r, 0)));
        tau[r] = static_cast<std::size_t>(std::lround(normalized.at(r, 1)));
        for (int c = 0; c < 12; ++c) cont.at(r, c) = normalized.at(r, 2 + c);
    }
    Var concat = nn::concat_cols({nn::gather_rows(elem_emb_, rho), nn::gather_rows(cmd_emb_, tau),
                                  nn::constant(std::move(cont))});
    return nn::add(nn::matmul(concat, proj_), pos_emb_);
}

Latent VPVAE::encode_graph(const Var& emb, const Tensor& pix_tokens, const Tensor* eps) const {
    if (pix_tokens.rows() != static_cast<std::size_t>(cfg_.n_tokens) ||
        pix_tokens.cols() != static_cast<std::size_t>(cfg_.d_p))
        fail(Errc::shape_mismatch, "encode_graph: pixel tokens must be N x d_p");
    Var q0 = nn::linear(emb, proj_e_);
    Var p0 = nn::linear(nn::constant(pix_tokens), proj_p_);
    Var x = nn::add(q0, nn::multi_head_attention(nn::layer_norm_rows(q0), p0, xattn_, cfg_.heads,
                                                 /*rope=*/false));
    for (const auto& b : enc_blocks_) x = block_forward(b, x, cfg_.heads);
    Var xf = affine_ln(x, enc_lnf_g_, enc_lnf_b_);

    Latent lat;
    lat.mu = nn::linear(xf, mu_head_);
    lat.logvar = nn::clamp(nn::linear(xf, logvar_head_), -20.0, 4.0);
    if (eps) {
        if (!eps->same_shape(lat.mu->value)) fail(Errc::shape_mismatch, "encode_graph: eps shape");
        Var stddev = nn::exp(nn::scale(lat.logvar, 0.5));
        lat.z = nn::add(lat.mu, nn::mul(stddev, nn::constant(*eps)));
    } else {
        lat.z = lat.mu;
    }
    return lat;
}

Var VPVAE::decode_graph(const Var& z) const {
    Var x = nn::linear(z, up_);
    for (const auto& b : dec_blocks_) x = block_forward(b, x, cfg_.heads);
    return nn::linear(affine_ln(x, dec_lnf_g_, dec_lnf_b_), out_);
}

VPVAE::LossVars VPVAE::loss_graph(const Var& recon, const Var& emb_target, const Latent& lat,
                                  const SvgMatrix& normalized, const std::vector<double>& mask) const {
    LossVars out;
    if (cfg_.mse_space == "matrix") {
        // compare continuous matrix columns recovered through the (fixed per
        // step) pseudo-inverse of the current projection
        Tensor pinv = codec::projection_pinv(tables()); // d_e x (2*d_tok+12)
        Tensor pinv_cont(cfg_.d_e, 12);
        for (int r = 0; r < cfg_.d_e; ++r)
            for (int c = 0; c < 12; ++c) pinv_cont.at(r, c) = pinv.at(r, 2 * cfg_.d_tok + c);
        Tensor target_cont(cfg_.n_tokens, 12);
        for (int r = 0; r < cfg_.n_tokens; ++r)
            for (int c = 0; c < 12; ++c) target_cont.at(r, c) = normalized.at(r, 2 + c);
        Var cont = nn::matmul(nn::sub(recon, pos_emb_), nn::constant(std::move(pinv_cont)));
        out.mse = nn::masked_row_mean(nn::square(nn::sub(cont, nn::constant(std::move(target_cont)))), mask);
    } else {
        out.mse = nn::masked_row_mean(nn::square(nn::sub(recon, emb_target)), mask);
    }
    // KL(N(mu, sigma^2) || N(0, I)) = 1/2 (mu^2 + sigma^2 - log sigma^2 - 1)
    Var inner = nn::add_scalar(nn::sub(nn::add(nn::square(lat.mu), nn::exp(lat.logvar)), lat.logvar), -1.0);
    out.kl = nn::scale(nn::masked_row_mean(inner, mask), 0.5);
    out.total = nn::add(out.mse, nn::scale(out.kl, cfg_.lambda_kl));
    return out;
}

codec::EmbedTables VPVAE::tables() const {
    codec::EmbedTables t;
    t.d_tok = cfg_.d_tok;
    t.d_e = cfg_.d_e;
    t.n_rows = cfg_.n_tokens;
    t.elem_emb = elem_emb_->value;
    t.cmd_emb = cmd_emb_->value;
    t.pos_emb = pos_emb_->value;
    t.proj = proj_->value;
    return t;
}

Tensor VPVAE::encode_mu(const SvgMatrix& normalized, const Tensor& pix) const {
    Latent lat = encode_graph(embed_graph(normalized), pix, nullptr);
    return lat.mu->value;
}

Tensor VPVAE::encode_sampled(const SvgMatrix& normalized, const Tensor& pix, std::uint64_t seed,
                             Tensor* mu_out, Tensor* logvar_out) const {
    nn::Rng rng(seed);
    Tensor eps = rng.normal_tensor(cfg_.n_tokens, cfg_.d_z);
    Latent lat = encode_graph(embed_graph(normalized), pix, &eps);
    if (mu_out) *mu_out = lat.mu->value;
    if (logvar_out) *logvar_out = lat.logvar->value;
    return lat.z->value;
}

Tensor VPVAE::decode_tokens(const Tensor& z) const {
    return decode_graph(nn::constant(z))->value;
}

// ---------------------------------------------------------------- stages

std::vector<svg::Document> build_stages(const svg::Document& doc, int b) {
    if (doc.elements.empty()) fail(Errc::empty_document, "build_stages: document has no elements");
    if (b < 1) fail(Errc::bad_config, "build_stages: B must be >= 1");
    std::size_t n = doc.elements.size();
    std::vector<svg::Document> stages;
    stages.reserve(b);
    for (int k = 1; k <= b; ++k) {
        std::size_t take = (k * n + b - 1) / b; // ceil(k*n/b)
        svg::Document stage;
        stage.canvas = doc.canvas;
        stage.elements.assign(doc.elements.begin(), doc.elements.begin() + take);
        stages.push_back(std::move(stage));
    }
    return stages;
}

std::vector<double> row_mask(const SvgMatrix& m) {
    std::vector<double> mask(m.rows, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        mask[r] = 1.0;
        if (static_cast<int>(std::lround(m.at(r, 0))) == codec::Vocabulary::eos) break;
    }
    return mask;
}

cond::PixelFeatures stage_features(const svg::Document& doc, const config::VaeConfig& cfg,
                                   const std::string& cache_dir) {
    if (!cache_dir.empty()) {
        std::uint64_t key = fnv1a64(svg::serialize_svg(doc));
        key ^= fnv1a64(std::to_string(cfg.d_p) + ":" + std::to_string(cfg.n_tokens) + ":" +
                       std::to_string(cfg.canvas));
        char name[64];
        std::snprintf(name, sizeof(name), "feat_%016llx.vxf", static_cast<unsigned long long>(key));
        std::filesystem::path path = std::filesystem::path(cache_dir) / name;
        if (std::filesystem::exists(path))
            return cond::load_pixel_features(path.string(), cfg.d_p, cfg.n_tokens);
        raster::RasterGrid grid = raster::rasterize(doc, cfg.canvas);
        cond::PixelFeatures f = cond::extract_stub_features(grid, cfg.d_p, cfg.n_tokens);
        std::filesystem::create_directories(path.parent_path());
        cond::write_vxf(f.tokens, path.string());
        return f;
    }
    raster::RasterGrid grid = raster::rasterize(doc, cfg.canvas);
    return cond::extract_stub_features(grid, cfg.d_p, cfg.n_tokens);
}

// ---------------------------------------------------------------- training

namespace {

struct StageData {
    SvgMatrix normalized;
    std::vector<double> mask;
    Tensor pix;
};

struct DocData {
    std::vector<StageData> stages;
};

DocData prepare_doc(const svg::Document& doc, const config::VaeConfig& cfg,
                    const std::string& cache_dir) {
    DocData data;
    for (const auto& stage : build_stages(doc, cfg.stages)) {
        StageData sd;
        SvgMatrix m = codec::encode_matrix(stage, {}, cfg.n_tokens);
        sd.normalized = codec::normalize_continuous(m, stage.canvas);
        sd.mask = row_mask(m);
        sd.pix = stage_features(stage, cfg, cache_dir).tokens;
        data.stages.push_back(std::move(sd));
    }
    return data;
}

} // namespace

TrainResult train_vae(const std::vector<config::ManifestEntry>& manifest,
                      const config::VaeConfig& cfg, const TrainOptions& opts) {
    if (manifest.empty()) fail(Errc::manifest_error, "train_vae: empty manifest");
    std::filesystem::create_directories(opts.out_dir);
    std::string cache_dir = opts.cache_dir;
    if (cache_dir.empty()) {
        if (const char* env = std::getenv("VEXEL_CACHE")) cache_dir = env;
        else cache_dir = (std::filesystem::path(opts.out_dir) / "cache").string();
    }

    std::vector<svg::Document> docs;
    for (const auto& entry : manifest) {
        svg::Document doc = svg::parse_svg(read_file(entry.svg_path));
        if (!normalize::is_normalized_grammar(doc))
            fail(Errc::manifest_error, entry.svg_path + ": not normalized (run `vexel clean` first)");
        if (doc.canvas != cfg.canvas)
            fail(Errc::manifest_error, entry.svg_path + ": canvas != config canvas");
        if (doc.elements.empty())
            fail(Errc::manifest_error, entry.svg_path + ": empty document");
        docs.push_back(std::move(doc));
    }

    std::vector<DocData> prepared;
    prepared.reserve(docs.size());
    for (const auto& doc : docs) prepared.push_back(prepare_doc(doc, cfg, cache_dir));

    VPVAE model(cfg, opts.seed);
    nn::AdamW opt;
    opt.weight_decay = cfg.weight_decay;
    opt.init(model.params().params);
    nn::Rng rng(opts.seed ^ 0x5eedf00dULL);

    std::ostringstream trace;
    trace << "step,lr,mse,kl,total\n";
    double last_mse = 0, last_kl = 0;

    for (long s = 1; s <= opts.steps; ++s) {
        const DocData& dd = prepared[rng.next_u64() % prepared.size()];
        model.params().zero_grad();

        Var total;
        double mse_acc = 0, kl_acc = 0;
        for (const auto& sd : dd.stages) {
            Var emb = model.embed_graph(sd.normalized);
            Var target = nn::constant(emb->value); // stop-gradient target
            Tensor eps = rng.normal_tensor(cfg.n_tokens, cfg.d_z);
            Latent lat = model.encode_graph(emb, sd.pix, &eps);
            Var recon = model.decode_graph(lat.z);
            auto parts = model.loss_graph(recon, target, lat, sd.normalized, sd.mask);
            mse_acc += parts.mse->value.item();
            kl_acc += parts.kl->value.item();
            total = total ? nn::add(total, parts.total) : parts.total;
        }
        total = nn::scale(total, 1.0 / static_cast<double>(dd.stages.size()));
        double loss_v = total->value.item();
        if (!std::isfinite(loss_v))
            fail(Errc::non_finite_loss, "train_vae: non-finite loss at step " + std::to_string(s));

        nn::backward(total);
        nn::clip_grad_norm(model.params().params, cfg.clip_norm);
        double lr = nn::lr_schedule(s, opts.steps, cfg.warmup, cfg.lr_peak, cfg.lr_floor);
        opt.step(model.params().params, lr);

        last_mse = mse_acc / dd.stages.size();
        last_kl = kl_acc / dd.stages.size();
        if (s == 1 || s % 50 == 0 || s == opts.steps) {
            trace << s << "," << format_double(lr) << "," << format_double(last_mse) << ","
                  << format_double(last_kl) << "," << format_double(loss_v) << "\n";
        }
    }

    TrainResult result;
    result.final_mse = last_mse;
    result.final_kl = last_kl;

    double eval_acc = 0, tok_acc = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const StageData& full = prepared[i].stages.back();
        cond::PixelFeatures pix{full.pix};
        eval_acc += eval_mse(model, docs[i], pix);
        tok_acc += token_accuracy(model, docs[i], pix);
    }
    result.eval_mse = eval_acc / docs.size();
    result.token_accuracy = tok_acc / docs.size();

    result.checkpoint_path = (std::filesystem::path(opts.out_dir) / "vae.vxc").string();
    result.trace_path = (std::filesystem::path(opts.out_dir) / "vae_trace.csv").string();
    save_vpvae(model, result.checkpoint_path);
    write_file_atomic(result.trace_path, trace.str());
    return result;
}

void save_vpvae(const VPVAE& model, const std::string& path) {
    nlohmann::ordered_json header;
    header["model"] = "vpvae";
    config::Config full;
    full.vae = model.config();
    header["config"] = nlohmann::ordered_json::parse(config::to_json(full));
    ckpt::save_checkpoint(path, header.dump(), ckpt::named_tensors(model.params()));
}

std::unique_ptr<VPVAE> load_vpvae(const std::string& path) {
    ckpt::Checkpoint c = ckpt::load_checkpoint(path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(c.config_json);
    } catch (const nlohmann::json::exception&) {
        fail(Errc::bad_checkpoint, path + ": unreadable config header");
    }
    if (!header.contains("model") || header.at("model") != "vpvae")
        fail(Errc::bad_checkpoint, path + ": not a VP-VAE checkpoint");
    config::Config cfg = config::parse_config(header.at("config").dump());
    auto model = std::make_unique<VPVAE>(cfg.vae, /*seed=*/1);
    model->params().load_values(c.tensors);
    return model;
}

double eval_mse(const VPVAE& model, const svg::Document& doc, const cond::PixelFeatures& pix) {
    const auto& cfg = model.config();
    SvgMatrix m = codec::encode_matrix(doc, {}, cfg.n_tokens);
    SvgMatrix normalized = codec::normalize_continuous(m, doc.canvas);
    std::vector<double> mask = row_mask(m);

    Var emb = model.embed_graph(normalized);
    Latent lat = model.encode_graph(emb, pix.tokens, nullptr);
    Var recon = model.decode_graph(lat.z);
    auto parts = model.loss_graph(recon, nn::constant(emb->value), lat, normalized, mask);
    return parts.mse->value.item();
}

double token_accuracy(const VPVAE& model, const svg::Document& doc, const cond::PixelFeatures& pix) {
    const auto& cfg = model.config();
    SvgMatrix m = codec::encode_matrix(doc, {}, cfg.n_tokens);
    SvgMatrix normalized = codec::normalize_continuous(m, doc.canvas);

    Var emb = model.embed_graph(normalized);
    Latent lat = model.encode_graph(emb, pix.tokens, nullptr);
    Var recon = model.decode_graph(lat.z);
    SvgMatrix rec = codec::unembed(recon->value, model.tables(), doc.canvas);

    int total = 0, hit = 0;
    for (int r = 0; r < m.rows; ++r) {
        ++total;
        if (std::lround(rec.at(r, 0)) == std::lround(m.at(r, 0)) &&
            std::lround(rec.at(r, 1)) == std::lround(m.at(r, 1)))
            ++hit;
        if (static_cast<int>(std::lround(m.at(r, 0))) == codec::Vocabulary::eos) break;
    }
    return total ? static_cast<double>(hit) / total : 0.0;
}

} // namespace vexel::vpvae
