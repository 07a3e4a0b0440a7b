#include "vexel/checkpoint.hpp"
#include "vexel/codec.hpp"
#include "vexel/common.hpp"
#include "vexel/config.hpp"
#include "vexel/features.hpp"
#include "vexel/normalize.hpp"
#include "vexel/raster.hpp"
#include "vexel/svg.hpp"
#include "vexel/vpvae.hpp"
#include "vexel/vsdit.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace vexel;

namespace {

nlohmann::ordered_json stats_entry(const std::string& file, const svg::Document& before,
                                   std::size_t before_bytes, const svg::Document& after,
                                   std::size_t after_bytes) {
    normalize::StatsReport rep = normalize::element_stats(before, after);
    auto counts_json = [](const std::array<int, 8>& counts) {
        nlohmann::ordered_json c;
        for (int k = 0; k < 8; ++k) {
            if (counts[k] > 0) c[svg::kind_name(static_cast<svg::ElementKind>(k))] = counts[k];
        }
        return c;
    };
    nlohmann::ordered_json entry;
    entry["file"] = file;
    entry["before"] = {{"counts", counts_json(rep.before_counts)}, {"bytes", before_bytes}};
    entry["after"] = {{"counts", counts_json(rep.after_counts)}, {"bytes", after_bytes}};
    return entry;
}

struct CleanArgs {
    std::string input, output, stats;
    int precision = 2;
    int canvas = 128;
};

int run_clean(const CleanArgs& args) {
    std::vector<std::pair<std::string, std::string>> jobs; // in, out
    if (fs::is_directory(args.input)) {
        fs::create_directories(args.output);
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(args.input)) {
            if (e.path().extension() == ".svg") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files)
            jobs.emplace_back(f.string(), (fs::path(args.output) / f.filename()).string());
    } else {
        jobs.emplace_back(args.input, args.output);
    }

    nlohmann::ordered_json stats = nlohmann::ordered_json::array();
    for (const auto& [in_path, out_path] : jobs) {
        std::string raw = read_file(in_path);
        svg::Document before = svg::parse_svg_lenient(raw);
        svg::Document cleaned = normalize::normalize_document(raw, args.precision, args.canvas);
        std::string out_text = svg::serialize_svg(cleaned, svg::CoordMode::relative);
        write_file_atomic(out_path, out_text);
        if (!args.stats.empty())
            stats.push_back(stats_entry(in_path, before, raw.size(), cleaned, out_text.size()));
    }
    if (!args.stats.empty()) write_file_atomic(args.stats, stats.dump(2) + "\n");
    return 0;
}

config::Config resolve_config(const std::string& spec_arg) {
    config::Config cfg;
    if (spec_arg.empty() || spec_arg == "default") return cfg;
    if (spec_arg == "tiny") {
        cfg.vae = config::vae_tiny();
        config::apply_dit_preset(cfg.dit, "tiny");
        return cfg;
    }
    if (spec_arg == "S" || spec_arg == "B" || spec_arg == "L") {
        config::apply_dit_preset(cfg.dit, spec_arg);
        return cfg;
    }
    return config::load_config(spec_arg);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vexel: SVG normalization, tensorization and latent-diffusion toolkit"};
    app.require_subcommand(1);
    bool json_errors = false;
    app.add_flag("--json-errors", json_errors, "emit machine-readable errors on stderr");

    CleanArgs clean_args;
    auto* cmd_clean = app.add_subcommand("clean", "normalize an SVG file or directory");
    cmd_clean->add_option("input", clean_args.input, "input .svg file or directory")->required();
    cmd_clean->add_option("-o,--output", clean_args.output, "output file or directory")->required();
    cmd_clean->add_option("--precision", clean_args.precision, "coordinate decimal places");
    cmd_clean->add_option("--canvas", clean_args.canvas, "target canvas side");
    cmd_clean->add_option("--stats", clean_args.stats, "write per-file stats JSON here");

    std::string raster_in, raster_out;
    int raster_size = 128;
    auto* cmd_raster = app.add_subcommand("raster", "rasterize an SVG to binary PPM");
    cmd_raster->add_option("input", raster_in)->required();
    cmd_raster->add_option("-o,--output", raster_out)->required();
    cmd_raster->add_option("--size", raster_size, "output pixels per side");

    std::string enc_in, enc_out;
    int enc_tokens = codec::kDefaultRows;
    auto* cmd_encode = app.add_subcommand("encode", "normalize and encode an SVG to a .mat matrix");
    cmd_encode->add_option("input", enc_in)->required();
    cmd_encode->add_option("-o,--output", enc_out)->required();
    cmd_encode->add_option("--tokens", enc_tokens, "matrix rows (N)");

    std::string dec_in, dec_out;
    int dec_canvas = 128;
    auto* cmd_decode = app.add_subcommand("decode", "decode a .mat matrix back to SVG");
    cmd_decode->add_option("input", dec_in)->required();
    cmd_decode->add_option("-o,--output", dec_out)->required();
    cmd_decode->add_option("--canvas", dec_canvas, "canvas side the matrix was encoded at");

    std::string feat_in, feat_out, feat_import;
    bool feat_stub = false;
    int feat_dp = cond::kDefaultPixelDim, feat_tokens = codec::kDefaultRows;
    auto* cmd_features = app.add_subcommand("features", "produce pixel features (.vxf) for an SVG");
    cmd_features->add_option("input", feat_in)->required();
    cmd_features->add_option("-o,--output", feat_out)->required();
    cmd_features->add_flag("--stub", feat_stub, "use the deterministic stub extractor (default)");
    cmd_features->add_option("--import", feat_import, "import precomputed features from this .vxf");
    cmd_features->add_option("--dp", feat_dp, "feature width D_p");
    cmd_features->add_option("--tokens", feat_tokens, "token count N");

    std::string stats_in, stats_out;
    int stats_precision = 2, stats_canvas = 128;
    auto* cmd_stats = app.add_subcommand("stats", "report element counts and bytes before/after cleaning");
    cmd_stats->add_option("input", stats_in)->required();
    cmd_stats->add_option("-o,--output", stats_out, "write JSON here (default: stdout)");
    cmd_stats->add_option("--precision", stats_precision);
    cmd_stats->add_option("--canvas", stats_canvas);

    std::string tv_manifest, tv_config, tv_out;
    long tv_steps = 1000;
    std::uint64_t tv_seed = 0;
    auto* cmd_train_vae = app.add_subcommand("train-vae", "train the VP-VAE on a manifest");
    cmd_train_vae->add_option("--manifest", tv_manifest)->required();
    cmd_train_vae->add_option("--config", tv_config, "config JSON path, or tiny|default");
    cmd_train_vae->add_option("--steps", tv_steps);
    cmd_train_vae->add_option("--seed", tv_seed);
    cmd_train_vae->add_option("-o,--output", tv_out, "checkpoint directory")->required();

    std::string td_manifest, td_vae, td_config, td_out;
    long td_steps = 1000;
    std::uint64_t td_seed = 0;
    int td_batch = 8;
    auto* cmd_train_dit = app.add_subcommand("train-dit", "train the VS-DiT over a frozen VP-VAE");
    cmd_train_dit->add_option("--manifest", td_manifest)->required();
    cmd_train_dit->add_option("--vae", td_vae, "VP-VAE checkpoint")->required();
    cmd_train_dit->add_option("--config", td_config, "config JSON path, or tiny|S|B|L");
    cmd_train_dit->add_option("--steps", td_steps);
    cmd_train_dit->add_option("--seed", td_seed);
    cmd_train_dit->add_option("--batch", td_batch);
    cmd_train_dit->add_option("-o,--output", td_out, "checkpoint directory")->required();

    std::string sm_prompt, sm_vae, sm_dit, sm_out, sm_png;
    double sm_cfg = 4.0;
    int sm_steps = 100;
    std::uint64_t sm_seed = 0;
    auto* cmd_sample = app.add_subcommand("sample", "generate an SVG from a text prompt");
    cmd_sample->add_option("--prompt", sm_prompt, "text prompt (empty: unconditional)");
    cmd_sample->add_option("--vae", sm_vae)->required();
    cmd_sample->add_option("--dit", sm_dit)->required();
    cmd_sample->add_option("--cfg", sm_cfg, "classifier-free guidance weight");
    cmd_sample->add_option("--steps", sm_steps, "DDIM steps");
    cmd_sample->add_option("--seed", sm_seed);
    cmd_sample->add_option("-o,--output", sm_out)->required();
    cmd_sample->add_option("--png", sm_png, "also write a PPM render here");

    std::string gc_config = "tiny";
    auto* cmd_gradcheck = app.add_subcommand("gradcheck", "finite-difference check of both training losses");
    cmd_gradcheck->add_option("--config", gc_config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (cmd_clean->parsed()) return run_clean(clean_args);

        if (cmd_raster->parsed()) {
            svg::Document doc = svg::parse_svg_lenient(read_file(raster_in));
            raster::write_ppm(raster::rasterize(doc, raster_size), raster_out);
            return 0;
        }

        if (cmd_encode->parsed()) {
            std::string raw = read_file(enc_in);
            svg::Document doc = normalize::normalize_document(raw);
            codec::SvgMatrix m = codec::encode_matrix(doc, {}, enc_tokens);
            codec::write_mat(m, enc_out);
            return 0;
        }

        if (cmd_decode->parsed()) {
            codec::SvgMatrix m = codec::read_mat(dec_in, dec_canvas);
            svg::Document doc = codec::decode_matrix(m);
            write_file_atomic(dec_out, svg::serialize_svg(doc, svg::CoordMode::absolute));
            return 0;
        }

        if (cmd_features->parsed()) {
            if (!feat_import.empty()) {
                nn::Tensor t = cond::read_vxf(feat_import);
                if (t.rows() != static_cast<std::size_t>(feat_tokens) ||
                    t.cols() != static_cast<std::size_t>(feat_dp))
                    fail(Errc::shape_mismatch, feat_import + ": imported shape does not match --tokens/--dp");
                cond::write_vxf(t, feat_out);
                return 0;
            }
            std::string raw = read_file(feat_in);
            svg::Document doc = normalize::normalize_document(raw);
            raster::RasterGrid grid = raster::rasterize(doc, doc.canvas);
            cond::PixelFeatures f = cond::extract_stub_features(grid, feat_dp, feat_tokens);
            cond::write_vxf(f.tokens, feat_out);
            return 0;
        }

        if (cmd_stats->parsed()) {
            std::string raw = read_file(stats_in);
            svg::Document before = svg::parse_svg_lenient(raw);
            svg::Document cleaned = normalize::normalize_document(raw, stats_precision, stats_canvas);
            std::string out_text = svg::serialize_svg(cleaned, svg::CoordMode::relative);
            auto entry = stats_entry(stats_in, before, raw.size(), cleaned, out_text.size());
            if (stats_out.empty()) std::cout << entry.dump(2) << "\n";
            else write_file_atomic(stats_out, entry.dump(2) + "\n");
            return 0;
        }

        if (cmd_train_vae->parsed()) {
            config::Config cfg = resolve_config(tv_config);
            vpvae::TrainOptions opts;
            opts.steps = tv_steps;
            opts.seed = tv_seed;
            opts.out_dir = tv_out;
            auto manifest = config::load_manifest(tv_manifest);
            vpvae::TrainResult r = vpvae::train_vae(manifest, cfg.vae, opts);
            std::cout << "checkpoint: " << r.checkpoint_path << "\n"
                      << "trace: " << r.trace_path << "\n"
                      << "final mse: " << format_double(r.final_mse) << "\n"
                      << "eval mse: " << format_double(r.eval_mse) << "\n"
                      << "token accuracy: " << format_double(r.token_accuracy) << "\n";
            return 0;
        }

        if (cmd_train_dit->parsed()) {
            config::Config cfg = resolve_config(td_config);
            vsdit::DitTrainOptions opts;
            opts.steps = td_steps;
            opts.seed = td_seed;
            opts.batch = td_batch;
            opts.out_dir = td_out;
            auto manifest = config::load_manifest(td_manifest);
            vsdit::DitTrainResult r = vsdit::train_dit(manifest, td_vae, cfg.dit, opts);
            std::cout << "checkpoint: " << r.checkpoint_path << "\n"
                      << "trace: " << r.trace_path << "\n"
                      << "final loss: " << format_double(r.final_loss) << "\n"
                      << "latent scale: " << format_double(r.latent_scale) << "\n";
            return 0;
        }

        if (cmd_sample->parsed()) {
            svg::Document doc = vsdit::text_to_svg(sm_prompt, sm_vae, sm_dit, sm_cfg, sm_steps, sm_seed);
            write_file_atomic(sm_out, svg::serialize_svg(doc, svg::CoordMode::absolute));
            if (!sm_png.empty()) raster::write_ppm(raster::rasterize(doc, 128), sm_png);
            return 0;
        }

        if (cmd_gradcheck->parsed()) {
            config::Config cfg = resolve_config(gc_config);

            // fixed synthetic inputs keep both losses pure functions of params
            svg::Document doc;
            doc.canvas = cfg.vae.canvas;
            svg::Element circle;
            circle.kind = svg::ElementKind::circle;
            circle.cx = 40;
            circle.cy = 40;
            circle.r = 20;
            circle.fill = {0.8, 0.2, 0.2};
            doc.elements.push_back(circle);
            svg::Element rect;
            rect.kind = svg::ElementKind::rect;
            rect.x = 60;
            rect.y = 60;
            rect.width = 30;
            rect.height = 20;
            rect.fill = {0.1, 0.3, 0.9};
            doc.elements.push_back(rect);

            vpvae::VPVAE vae(cfg.vae, 17);
            codec::SvgMatrix m = codec::encode_matrix(doc, {}, cfg.vae.n_tokens);
            codec::SvgMatrix normalized = codec::normalize_continuous(m, doc.canvas);
            std::vector<double> mask = vpvae::row_mask(m);
            cond::PixelFeatures pix =
                cond::extract_stub_features(raster::rasterize(doc, cfg.vae.canvas), cfg.vae.d_p,
                                            cfg.vae.n_tokens);
            nn::Rng eps_rng(23);
            nn::Tensor eps = eps_rng.normal_tensor(cfg.vae.n_tokens, cfg.vae.d_z);
            auto vae_loss = [&]() {
                nn::Var emb = vae.embed_graph(normalized);
                vpvae::Latent lat = vae.encode_graph(emb, pix.tokens, &eps);
                nn::Var recon = vae.decode_graph(lat.z);
                return vae.loss_graph(recon, nn::constant(emb->value), lat, normalized, mask).total;
            };
            nn::GradCheckOptions gopts;
            gopts.samples_per_param = 3;
            double vae_err = nn::grad_check(vae_loss, vae.params().params, gopts);

            vsdit::VSDiT dit(cfg.dit, cfg.vae.d_z, cfg.vae.n_tokens, 29);
            vsdit::NoiseSchedule sched = vsdit::NoiseSchedule::linear_beta(cfg.dit.t_steps);
            nn::Rng drng(31);
            nn::Tensor z = drng.normal_tensor(cfg.vae.n_tokens, cfg.vae.d_z);
            nn::Tensor noise = drng.normal_tensor(cfg.vae.n_tokens, cfg.vae.d_z);
            nn::Tensor text = cond::embed_text_stub("a red circle", cfg.dit.d_txt, cfg.dit.t_txt).tokens;
            int t_idx = 640;
            nn::Tensor z_t = vsdit::q_sample(z, t_idx, noise, sched);
            auto dit_loss = [&]() {
                nn::Var pred = dit.predict_graph(z_t, sched.t01(t_idx), text);
                return nn::mean_all(nn::square(nn::sub(pred, nn::constant(noise))));
            };
            double dit_err = nn::grad_check(dit_loss, dit.params().params, gopts);

            std::cout << "vae loss max relative error: " << format_double(vae_err) << "\n"
                      << "dit loss max relative error: " << format_double(dit_err) << "\n";
            bool ok = vae_err < 1e-4 && dit_err < 1e-4;
            std::cout << (ok ? "gradcheck passed" : "gradcheck FAILED") << "\n";
            return ok ? 0 : 3;
        }
    } catch (const Error& e) {
        int code = e.code() == Errc::non_finite_loss ? 3 : 2;
        if (json_errors) {
            nlohmann::json j{{"error", errc_name(e.code())}, {"message", e.what()}};
            std::cerr << j.dump() << "\n";
        } else {
            std::cerr << "vexel: " << errc_name(e.code()) << ": " << e.what() << "\n";
        }
        return code;
    } catch (const std::exception& e) {
        if (json_errors) {
            nlohmann::json j{{"error", "Internal"}, {"message", e.what()}};
            std::cerr << j.dump() << "\n";
        } else {
            std::cerr << "vexel: error: " << e.what() << "\n";
        }
        return 2;
    }
    return 1;
}
