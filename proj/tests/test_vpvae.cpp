#include "vexel/vpvae.hpp"

#include "vexel/checkpoint.hpp"

#include "vexel/normalize.hpp"
#include "vexel/raster.hpp"

#include "helpers.hpp"

#include <cmath>
#include <doctest.h>

using namespace vexel;
using codec::SvgMatrix;
using nn::Tensor;
using nn::Var;

namespace {

svg::Document tiny_doc() {
    return svg::parse_svg(R"(<svg viewBox="0 0 128 128">
        <circle cx="40" cy="40" r="20" fill="#cc3344"/>
        <rect x="60" y="60" width="30" height="20" fill="#1133aa"/>
        <path d="M10 100 L40 80 L70 100 Z" fill="#22aa55"/></svg>)");
}

struct Setup {
    config::VaeConfig cfg = config::vae_tiny();
    svg::Document doc = tiny_doc();
    SvgMatrix m, normalized;
    std::vector<double> mask;
    Tensor pix;

    Setup() {
        m = codec::encode_matrix(doc, {}, cfg.n_tokens);
        normalized = codec::normalize_continuous(m, doc.canvas);
        mask = vpvae::row_mask(m);
        pix = cond::extract_stub_features(raster::rasterize(doc, cfg.canvas), cfg.d_p, cfg.n_tokens)
                  .tokens;
    }
};

} // namespace

TEST_CASE("build_stages: ceil rule") {
    svg::Document doc;
    doc.canvas = 128;
    for (int i = 0; i < 4; ++i) {
        svg::Element c;
        c.kind = svg::ElementKind::circle;
        c.cx = c.cy = 10 + i;
        c.r = 2;
        doc.elements.push_back(c);
    }
    auto stages = vpvae::build_stages(doc, 4);
    REQUIRE(stages.size() == 4);
    for (int k = 0; k < 4; ++k) CHECK(stages[k].elements.size() == static_cast<std::size_t>(k + 1));

    auto one = vpvae::build_stages(doc, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].elements.size() == 4);

    doc.elements.resize(3);
    auto five = vpvae::build_stages(doc, 5);
    std::vector<std::size_t> sizes;
    for (const auto& s : five) sizes.push_back(s.elements.size());
    CHECK(sizes == std::vector<std::size_t>{1, 2, 2, 3, 3});

    svg::Document empty;
    CHECK_THROWS_AS(vpvae::build_stages(empty, 4), Error);
}

TEST_CASE("fuse_encode: zero noise collapses to the mean, seeds are reproducible") {
    Setup s;
    vpvae::VPVAE model(s.cfg, 77);
    Tensor mu = model.encode_mu(s.normalized, s.pix);
    Tensor z1 = model.encode_sampled(s.normalized, s.pix, 5);
    Tensor z2 = model.encode_sampled(s.normalized, s.pix, 5);
    Tensor z3 = model.encode_sampled(s.normalized, s.pix, 6);
    CHECK(z1.data == z2.data);
    CHECK(z1.data != z3.data);
    CHECK(mu.data != z1.data);

    Tensor zero(s.cfg.n_tokens, s.cfg.d_z);
    Var emb = model.embed_graph(s.normalized);
    vpvae::Latent lat = model.encode_graph(emb, s.pix, &zero);
    CHECK(lat.z->value.data == lat.mu->value.data);
}

TEST_CASE("fuse_encode: pixel features are live through the cross-attention") {
    Setup s;
    vpvae::VPVAE model(s.cfg, 78);
    Tensor mu = model.encode_mu(s.normalized, s.pix);
    Tensor perturbed = s.pix;
    nn::Rng rng(91);
    for (double& v : perturbed.data) v += 0.05 * rng.normal();
    Tensor mu2 = model.encode_mu(s.normalized, perturbed);
    double delta = 0;
    for (std::size_t i = 0; i < mu.data.size(); ++i) delta += std::fabs(mu.data[i] - mu2.data[i]);
    CHECK(delta > 0.0);
}

TEST_CASE("decoder: correct shape, no cross-attention parameters, pure function") {
    Setup s;
    vpvae::VPVAE model(s.cfg, 79);
    Tensor z(s.cfg.n_tokens, s.cfg.d_z, 0.1);
    Tensor rec1 = model.decode_tokens(z);
    Tensor rec2 = model.decode_tokens(z);
    CHECK(rec1.rows() == static_cast<std::size_t>(s.cfg.n_tokens));
    CHECK(rec1.cols() == static_cast<std::size_t>(s.cfg.d_e));
    CHECK(rec1.data == rec2.data);

    bool enc_has_xattn = false;
    for (const auto& p : model.params().params) {
        if (p->name.rfind("dec.", 0) == 0) CHECK(p->name.find("xattn") == std::string::npos);
        if (p->name.rfind("enc.xattn", 0) == 0) enc_has_xattn = true;
    }
    CHECK(enc_has_xattn);
}

TEST_CASE("vae_loss: closed-form KL values and zero-MSE case") {
    Setup s;
    vpvae::VPVAE model(s.cfg, 80);
    int n = s.cfg.n_tokens, dz = s.cfg.d_z;
    std::vector<double> mask(n, 1.0);

    vpvae::Latent lat;
    lat.mu = nn::constant(Tensor(n, dz, 0.0));
    lat.logvar = nn::constant(Tensor(n, dz, 0.0));
    lat.z = lat.mu;
    Var recon = nn::constant(Tensor(n, s.cfg.d_e, 0.3));
    auto parts = model.loss_graph(recon, recon, lat, s.normalized, mask);
    CHECK(parts.mse->value.item() == 0.0);
    CHECK(parts.kl->value.item() == doctest::Approx(0.0).epsilon(1e-15));

    lat.mu = nn::constant(Tensor(n, dz, 1.0));
    auto parts2 = model.loss_graph(recon, recon, lat, s.normalized, mask);
    CHECK(parts2.kl->value.item() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(parts2.total->value.item() == doctest::Approx(s.cfg.lambda_kl * 0.5).epsilon(1e-9));
}

TEST_CASE("vae_loss: PAD rows never contribute") {
    Setup s;
    vpvae::VPVAE model(s.cfg, 81);
    Var emb = model.embed_graph(s.normalized);
    vpvae::Latent lat = model.encode_graph(emb, s.pix, nullptr);
    Var recon = model.decode_graph(lat.z);

    Tensor target = emb->value;
    auto base = model.loss_graph(recon, nn::constant(target), lat, s.normalized, s.mask);

    // perturb every masked-out row of the target
    Tensor padded = target;
    for (int r = 0; r < s.cfg.n_tokens; ++r) {
        if (s.mask[r] == 0.0)
            for (int c = 0; c < s.cfg.d_e; ++c) padded.at(r, c) += 17.0;
    }
    auto perturbed = model.loss_graph(recon, nn::constant(padded), lat, s.normalized, s.mask);
    CHECK(base.total->value.item() == perturbed.total->value.item());
}

TEST_CASE("grad_check: full tiny VP-VAE objective") {
    Setup s;
    vpvae::VPVAE model(s.cfg, 82);
    nn::Rng rng(83);
    Tensor eps = rng.normal_tensor(s.cfg.n_tokens, s.cfg.d_z);
    auto loss = [&]() {
        Var emb = model.embed_graph(s.normalized);
        vpvae::Latent lat = model.encode_graph(emb, s.pix, &eps);
        Var recon = model.decode_graph(lat.z);
        return model.loss_graph(recon, nn::constant(emb->value), lat, s.normalized, s.mask).total;
    };
    nn::GradCheckOptions opts;
    opts.samples_per_param = 2;
    opts.seed = 3;
    CHECK(nn::grad_check(loss, model.params().params, opts) < 1e-4);
}

TEST_CASE("reparameterization: sample variance tracks exp(logvar)") {
    // Var(z - mu) with z = mu + exp(logvar/2) eps over many seeded draws
    double logvar = -1.3;
    double expected = std::exp(logvar);
    nn::Rng rng(85);
    const int samples = 10000;
    double acc = 0;
    for (int i = 0; i < samples; ++i) {
        double e = rng.normal();
        double dz = std::exp(0.5 * logvar) * e;
        acc += dz * dz;
    }
    double measured = acc / samples;
    CHECK(std::fabs(measured - expected) / expected < 0.05);
}

TEST_CASE("stage monotonicity: new pixels only where new elements paint") {
    svg::Document doc = tiny_doc();
    auto stages = vpvae::build_stages(doc, 3);
    for (std::size_t k = 0; k + 1 < stages.size(); ++k) {
        auto a = raster::rasterize(stages[k], 128);
        auto b = raster::rasterize(stages[k + 1], 128);
        // mask of pixels the added elements can touch
        svg::Document added;
        added.canvas = doc.canvas;
        added.elements.assign(doc.elements.begin() + stages[k].elements.size(),
                              doc.elements.begin() + stages[k + 1].elements.size());
        auto addmask = raster::rasterize(added, 128);
        for (int y = 0; y < 128; ++y)
            for (int x = 0; x < 128; ++x) {
                bool differs = false, painted = false;
                for (int c = 0; c < 3; ++c) {
                    if (a.at(x, y, c) != b.at(x, y, c)) differs = true;
                    if (addmask.at(x, y, c) != 1.0) painted = true;
                }
                if (differs) CHECK(painted);
            }
    }
}

TEST_CASE("embed_graph agrees with the value-level codec embed") {
    Setup s;
    vpvae::VPVAE model(s.cfg, 86);
    Var emb = model.embed_graph(s.normalized);
    Tensor plain = codec::embed(s.normalized, model.tables());
    CHECK(emb->value.data == plain.data);
}

TEST_CASE("checkpoint: save/load restores the exact model behavior") {
    Setup s;
    vpvae::VPVAE model(s.cfg, 87);
    std::string path = testutil::temp_path("vae_rt.vxc");
    vpvae::save_vpvae(model, path);
    auto loaded = vpvae::load_vpvae(path);
    CHECK(loaded->config().d_z == s.cfg.d_z);

    // behavior matches after the f32 round trip both ways
    for (auto& p : model.params().params) {
        p->value = ckpt::round_f32(p->value);
    }
    Tensor a = model.encode_mu(s.normalized, s.pix);
    Tensor b = loaded->encode_mu(s.normalized, s.pix);
    CHECK(a.data == b.data);
}
