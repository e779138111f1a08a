// ssmri: phantom/mask generation, measurement simulation, reconstruction
// (self-supervised, TV, supervised-apply), evaluation, and a one-command
// demo. Every command takes an optional key=value config file; flags given
// on the command line win over config values. Relative output paths are
// prefixed with $SSMRI_OUT_ROOT when it is set.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssmri/data_eval.hpp"
#include "ssmri/forward_models.hpp"
#include "ssmri/image_io.hpp"
#include "ssmri/rng.hpp"
#include "ssmri/solvers.hpp"

namespace fs = std::filesystem;
using namespace ssmri;

namespace {

std::string resolve_out(const std::string& path) {
    const char* root = std::getenv("SSMRI_OUT_ROOT");
    if (root == nullptr || *root == '\0') return path;
    fs::path p(path);
    return p.is_absolute() ? path : (fs::path(root) / p).string();
}

void ensure_parent_dir(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void echo(const char* key, const std::string& v) { std::printf("%s=%s\n", key, v.c_str()); }
void echo(const char* key, double v) { std::printf("%s=%g\n", key, v); }
void echo(const char* key, int v) { std::printf("%s=%d\n", key, v); }
void echo(const char* key, uint64_t v) { std::printf("%s=%llu\n", key, static_cast<unsigned long long>(v)); }
void echo(const char* key, bool v) { std::printf("%s=%s\n", key, v ? "true" : "false"); }

void add_config_support(CLI::App* cmd) {
    cmd->allow_config_extras(CLI::config_extras_mode::error);
    cmd->set_config("--config", "", "key=value config file; command-line flags win");
}

// --- mask ---------------------------------------------------------------

struct MaskArgs {
    std::string task = "sr";
    int af = 4;
    int size = 64;
    int height = 0, width = 0;
    double center_fraction = -1.0;  // < 0: default for the AF
    std::string out;
};

void run_mask(const MaskArgs& a) {
    const int h = a.height > 0 ? a.height : a.size;
    const int w = a.width > 0 ? a.width : a.size;
    SamplingMask mask;
    double cf = a.center_fraction;
    if (a.task == "sr") {
        mask = make_sr_mask(h, w, a.af);
    } else if (a.task == "dealias") {
        if (cf < 0.0) cf = default_center_fraction(a.af);
        mask = make_dealiasing_mask(h, w, a.af, cf);
    } else {
        mask = make_full_mask(h, w);
    }
    const std::string out = resolve_out(a.out);
    ensure_parent_dir(out);
    write_pbm(out, mask);
    echo("task", a.task);
    echo("af", a.af);
    echo("height", h);
    echo("width", w);
    if (a.task == "dealias") echo("center_fraction", cf);
    echo("out", out);
    std::printf("sampled_fraction=%g\n", mask.sampled_fraction());
}

// --- simulate -----------------------------------------------------------

struct SimArgs {
    std::string image, mask, out, preview;
    double noise_std = 0.0;
    uint64_t seed = 0;
};

void run_simulate(const SimArgs& a) {
    const Image img = read_image_any(a.image);
    const SamplingMask mask = read_pbm(a.mask);
    if (img.h != mask.h || img.w != mask.w)
        throw std::invalid_argument("simulate: image is " + std::to_string(img.h) + "x" + std::to_string(img.w) +
                                    " but mask is " + std::to_string(mask.h) + "x" + std::to_string(mask.w));
    const ComplexImage y = simulate_measurement(img, mask, MeasurementSimConfig{a.noise_std, a.seed});
    const std::string out = resolve_out(a.out);
    const std::string preview = resolve_out(a.preview.empty() ? a.out + ".preview.pgm" : a.preview);
    ensure_parent_dir(out);
    ensure_parent_dir(preview);
    write_complex_raw(out, y);
    write_pgm16(preview, magnitude(y));
    echo("image", a.image);
    echo("mask", a.mask);
    echo("noise_std", a.noise_std);
    echo("seed", a.seed);
    echo("out", out);
    echo("preview", preview);
}

// --- reconstruct ----------------------------------------------------------

struct ReconArgs {
    std::string method = "ssl";
    std::string measurement, mask, out_prefix, checkpoint, ref;
    uint64_t seed = 0;
    int iters = 2000;
    double lr = 1e-4;
    double alpha = -1.0, beta = -1.0, gamma = -1.0;  // < 0: task preset
    std::string input_mode;                          // empty: task preset
    int scales = 3, base_channels = 16, kernel_size = 3;
    bool use_norm = false;
    bool track_best = true;
    int log_every = 0;
    double tv_weight = 0.01;
    int tv_iters = 200;
};

void run_reconstruct(const ReconArgs& a) {
    ReconRequest req;
    req.method = a.method;
    req.y = read_complex_raw(a.measurement);
    req.mask = read_pbm(a.mask);
    req.checkpoint_path = a.checkpoint;

    LossWeights w = LossWeights::preset_for(req.mask.accel_factor);
    if (a.alpha >= 0.0) w.alpha = a.alpha;
    if (a.beta >= 0.0) w.beta = a.beta;
    if (a.gamma >= 0.0) w.gamma = a.gamma;
    req.weights = w;
    const InputMode mode = a.input_mode.empty()
                               ? (req.mask.accel_factor >= 8.0 ? InputMode::meshgrid : InputMode::stacked)
                               : input_mode_from_string(a.input_mode);
    req.input_mode = mode;

    req.net_cfg.scales = a.scales;
    req.net_cfg.base_channels = a.base_channels;
    req.net_cfg.kernel_size = a.kernel_size;
    req.net_cfg.use_norm = a.use_norm;
    req.net_cfg.seed = a.seed;
    req.fit_cfg.max_iters = a.iters;
    req.fit_cfg.lr = a.lr;
    req.fit_cfg.seed = a.seed;
    req.fit_cfg.track_best = a.track_best;
    req.fit_cfg.log_every = a.log_every;
    req.tv_weight = a.tv_weight;
    req.tv_iters = a.tv_iters;

    echo("method", a.method);
    echo("measurement", a.measurement);
    echo("mask", a.mask);
    echo("seed", a.seed);
    if (a.method == "ssl") {
        echo("alpha", w.alpha);
        echo("beta", w.beta);
        echo("gamma", w.gamma);
        echo("input_mode", to_string(mode));
        echo("iters", a.iters);
        echo("lr", a.lr);
        echo("scales", a.scales);
        echo("base_channels", a.base_channels);
        echo("kernel_size", a.kernel_size);
        echo("use_norm", a.use_norm);
        echo("track_best", a.track_best);
    } else if (a.method == "tv") {
        echo("tv_weight", a.tv_weight);
        echo("tv_iters", a.tv_iters);
    } else {
        echo("checkpoint", a.checkpoint);
    }

    auto [x, rep] = reconstruct(req);
    if (!a.ref.empty()) {
        const Image ref = read_image_any(a.ref);
        rep.psnr_db = psnr(ref, x);
        rep.ssim_val = ssim(ref, x);
    }

    const std::string prefix = resolve_out(a.out_prefix);
    ensure_parent_dir(prefix);
    write_pgm16(prefix + ".pgm", x);
    write_image_raw(prefix + ".raw", x);
    write_recon_csv(prefix + "_trace.csv", rep);
    write_recon_summary(prefix + "_summary.txt", rep);
    echo("out_pgm", prefix + ".pgm");
    echo("out_raw", prefix + ".raw");
    if (rep.psnr_db) std::printf("psnr=%.17g\n", *rep.psnr_db);
    if (rep.ssim_val) std::printf("ssim=%.17g\n", *rep.ssim_val);
}

// --- eval -----------------------------------------------------------------

struct EvalArgs {
    std::string ref, out;
    std::vector<std::string> tests;
};

void append_path_csv(const std::string& path, const std::string& name, double p, double s) {
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    std::ofstream f(path, std::ios::app);
    if (!f) throw std::runtime_error("eval: cannot open " + path);
    if (fresh) f << "path,psnr,ssim\n";
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", name.c_str(), p, s);
    f << buf;
    if (!f) throw std::runtime_error("eval: write failed for " + path);
}

int run_eval(const EvalArgs& a) {
    const Image ref = read_image_any(a.ref);
    const std::string out = resolve_out(a.out);
    ensure_parent_dir(out);
    echo("ref", a.ref);
    echo("out", out);
    int failures = 0;
    for (const std::string& t : a.tests) {
        try {
            const Image test = read_image_any(t);
            const double p = psnr(ref, test);
            const double s = ssim(ref, test);
            append_path_csv(out, t, p, s);
            std::printf("%s psnr=%.17g ssim=%.17g\n", t.c_str(), p, s);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s: %s\n", t.c_str(), e.what());
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}

// --- train-supervised -------------------------------------------------------

struct TrainArgs {
    std::string task = "sr4";
    int n = 50;
    int size = 64;
    uint64_t seed = 0;
    int iters = 2000;
    double lr = 1e-4;
    int scales = 3, base_channels = 16, kernel_size = 3;
    std::string input_mode = "stacked";
    bool use_norm = false;
    int log_every = 0;
    std::string out;
};

void run_train(const TrainArgs& a) {
    const SamplingMask mask = mask_for_task(a.task, a.size, a.size);
    const auto pairs = build_dataset(a.n, a.size, mask, a.seed);

    NetConfig net_cfg;
    net_cfg.scales = a.scales;
    net_cfg.base_channels = a.base_channels;
    net_cfg.kernel_size = a.kernel_size;
    net_cfg.input_mode = input_mode_from_string(a.input_mode);
    net_cfg.use_norm = a.use_norm;
    net_cfg.seed = a.seed;
    FitConfig fit_cfg;
    fit_cfg.max_iters = a.iters;
    fit_cfg.lr = a.lr;
    fit_cfg.seed = a.seed;
    fit_cfg.log_every = a.log_every;

    echo("task", a.task);
    echo("n", a.n);
    echo("size", a.size);
    echo("seed", a.seed);
    echo("iters", a.iters);
    echo("lr", a.lr);
    echo("scales", a.scales);
    echo("base_channels", a.base_channels);
    echo("kernel_size", a.kernel_size);
    echo("input_mode", a.input_mode);
    echo("use_norm", a.use_norm);

    auto [net, rep] = supervised_train(pairs, net_cfg, fit_cfg);
    const std::string out = resolve_out(a.out);
    ensure_parent_dir(out);
    save_checkpoint(out, net);
    echo("out", out);
    std::printf("final_mean_l1=%.17g\n", rep.final_loss);
}

// --- demo -------------------------------------------------------------------

struct DemoArgs {
    std::string task = "sr4";
    int size = 64;
    uint64_t seed = 0;
    std::string out_dir;
    double noise_std = 0.0;
    int ssl_iters = 2000;
    double lr = 1e-4;
    int scales = 3, base_channels = 16;
    double tv_weight = 0.01;
    int tv_iters = 200;
};

Image make_montage(const std::vector<const Image*>& panels, int sep) {
    const int h = panels[0]->h, w = panels[0]->w;
    const int n = static_cast<int>(panels.size());
    Image out(h, n * w + (n - 1) * sep, 1.0);  // separators render white
    for (int k = 0; k < n; ++k) {
        const int off = k * (w + sep);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) out.at(r, off + c) = panels[k]->at(r, c);
    }
    return out;
}

void run_demo(const DemoArgs& a) {
    const std::string dir = resolve_out(a.out_dir);
    fs::create_directories(dir);
    const auto path = [&dir](const char* name) { return (fs::path(dir) / name).string(); };

    echo("task", a.task);
    echo("size", a.size);
    echo("seed", a.seed);
    echo("noise_std", a.noise_std);
    echo("ssl_iters", a.ssl_iters);
    echo("lr", a.lr);
    echo("scales", a.scales);
    echo("base_channels", a.base_channels);
    echo("tv_weight", a.tv_weight);
    echo("tv_iters", a.tv_iters);
    echo("out_dir", dir);

    const Image gt = make_phantom(a.size, PhantomKind::ellipses, a.seed);
    const SamplingMask mask = mask_for_task(a.task, a.size, a.size);
    const ComplexImage y =
        simulate_measurement(gt, mask, MeasurementSimConfig{a.noise_std, mix_seed(a.seed, 1)});
    const Image corrupted = real_part(y);

    auto [tv_x, tv_rep] = tv_reconstruct(y, mask, a.tv_weight, a.tv_iters);

    ReconRequest req;
    req.method = "ssl";
    req.y = y;
    req.mask = mask;
    req.net_cfg.scales = a.scales;
    req.net_cfg.base_channels = a.base_channels;
    req.net_cfg.seed = a.seed;
    req.fit_cfg.max_iters = a.ssl_iters;
    req.fit_cfg.lr = a.lr;
    req.fit_cfg.seed = a.seed;
    auto [ssl_x, ssl_rep] = reconstruct(req);

    // fresh report per run so reruns into the same directory are identical
    const std::string report = path("report.csv");
    fs::remove(report);
    const auto record = [&](const char* method, const Image& img) {
        EvalRecord rec{a.task, method, psnr(gt, img), ssim(gt, img)};
        append_eval_csv(report, rec);
        std::printf("%s psnr=%.2f ssim=%.4f\n", method, rec.psnr_db, rec.ssim_val);
    };
    record("corrupted", corrupted);
    record("tv", tv_x);
    record("ssl", ssl_x);

    write_pgm16(path("gt.pgm"), gt);
    write_pgm16(path("corrupted.pgm"), corrupted);
    write_pgm16(path("tv.pgm"), tv_x);
    write_pgm16(path("ssl.pgm"), ssl_x);
    write_pgm16(path("montage.pgm"), make_montage({&gt, &corrupted, &tv_x, &ssl_x}, 2));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-supervised MRI-style inverse problem toolkit"};
    app.require_subcommand(1);
    app.allow_config_extras(CLI::config_extras_mode::error);

    MaskArgs mask_args;
    auto* mask_cmd = app.add_subcommand("mask", "generate a k-space sampling mask (PBM)");
    add_config_support(mask_cmd);
    mask_cmd->add_option("--task", mask_args.task, "sr | dealias | full")
        ->check(CLI::IsMember({"sr", "dealias", "full"}));
    mask_cmd->add_option("--af", mask_args.af, "acceleration factor");
    mask_cmd->add_option("--size", mask_args.size, "square mask size");
    mask_cmd->add_option("--height", mask_args.height, "rows (overrides --size)");
    mask_cmd->add_option("--width", mask_args.width, "columns (overrides --size)");
    mask_cmd->add_option("--center-fraction", mask_args.center_fraction,
                         "dealias central band fraction (default depends on AF)");
    mask_cmd->add_option("-o,--out", mask_args.out, "output PBM path")->required();

    SimArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "push an image through the masked Fourier model");
    add_config_support(sim_cmd);
    sim_cmd->add_option("--image", sim_args.image, "input image (.pgm or raw)")->required();
    sim_cmd->add_option("--mask", sim_args.mask, "sampling mask (PBM)")->required();
    sim_cmd->add_option("--noise-std", sim_args.noise_std, "k-space-equivalent Gaussian noise std");
    sim_cmd->add_option("--seed", sim_args.seed, "noise seed")->required();
    sim_cmd->add_option("-o,--out", sim_args.out, "output complex measurement")->required();
    sim_cmd->add_option("--preview", sim_args.preview, "magnitude preview PGM (default: <out>.preview.pgm)");

    ReconArgs rec_args;
    auto* rec_cmd = app.add_subcommand("reconstruct", "reconstruct an image from a measurement");
    add_config_support(rec_cmd);
    rec_cmd->add_option("--method", rec_args.method, "ssl | tv | supervised-apply")
        ->check(CLI::IsMember({"ssl", "tv", "supervised-apply"}));
    rec_cmd->add_option("--measurement", rec_args.measurement, "complex measurement file")->required();
    rec_cmd->add_option("--mask", rec_args.mask, "sampling mask (PBM)")->required();
    rec_cmd->add_option("--out-prefix", rec_args.out_prefix, "output prefix")->required();
    rec_cmd->add_option("--seed", rec_args.seed, "network init seed")->required();
    rec_cmd->add_option("--iters", rec_args.iters, "fit iterations");
    rec_cmd->add_option("--lr", rec_args.lr, "Adam learning rate");
    rec_cmd->add_option("--alpha", rec_args.alpha, "image-term weight (default: task preset)");
    rec_cmd->add_option("--beta", rec_args.beta, "k-space-term weight (default: task preset)");
    rec_cmd->add_option("--gamma", rec_args.gamma, "cycle-term weight (default: task preset)");
    rec_cmd->add_option("--input-mode", rec_args.input_mode, "measurement | meshgrid | stacked (default: task preset)")
        ->check(CLI::IsMember({"measurement", "meshgrid", "stacked", ""}));
    rec_cmd->add_option("--scales", rec_args.scales, "encoder depth");
    rec_cmd->add_option("--base-channels", rec_args.base_channels, "width of the first scale");
    rec_cmd->add_option("--kernel-size", rec_args.kernel_size, "conv kernel size (odd)");
    rec_cmd->add_flag("--use-norm,!--no-use-norm", rec_args.use_norm, "per-channel normalization");
    rec_cmd->add_flag("--track-best,!--no-track-best", rec_args.track_best, "return the lowest-loss iterate");
    rec_cmd->add_option("--log-every", rec_args.log_every, "progress print period (0 = silent)");
    rec_cmd->add_option("--tv-weight", rec_args.tv_weight, "TV regularization weight");
    rec_cmd->add_option("--tv-iters", rec_args.tv_iters, "TV solver iterations");
    rec_cmd->add_option("--checkpoint", rec_args.checkpoint, "trained network (supervised-apply)");
    rec_cmd->add_option("--ref", rec_args.ref, "ground-truth image for PSNR/SSIM reporting");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM of images against a reference");
    add_config_support(eval_cmd);
    eval_cmd->add_option("--ref", eval_args.ref, "reference image")->required();
    eval_cmd->add_option("-o,--out", eval_args.out, "output CSV (appended)")->required();
    eval_cmd->add_option("tests", eval_args.tests, "images to score")->required();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train-supervised", "train the network on synthetic pairs");
    add_config_support(train_cmd);
    train_cmd->add_option("--task", train_args.task, "sr4 | sr8 | dealias4 | dealias8 | full");
    train_cmd->add_option("--n", train_args.n, "number of training pairs");
    train_cmd->add_option("--size", train_args.size, "phantom size (power of two >= 32)");
    train_cmd->add_option("--seed", train_args.seed, "dataset + init seed")->required();
    train_cmd->add_option("--iters", train_args.iters, "training steps (one pair per step)");
    train_cmd->add_option("--lr", train_args.lr, "Adam learning rate");
    train_cmd->add_option("--scales", train_args.scales, "encoder depth");
    train_cmd->add_option("--base-channels", train_args.base_channels, "width of the first scale");
    train_cmd->add_option("--kernel-size", train_args.kernel_size, "conv kernel size (odd)");
    train_cmd->add_option("--input-mode", train_args.input_mode, "measurement | stacked");
    train_cmd->add_flag("--use-norm,!--no-use-norm", train_args.use_norm, "per-channel normalization");
    train_cmd->add_option("--log-every", train_args.log_every, "progress print period (0 = silent)");
    train_cmd->add_option("-o,--out", train_args.out, "checkpoint path")->required();

    DemoArgs demo_args;
    auto* demo_cmd = app.add_subcommand("demo", "phantom -> mask -> measurement -> TV + SSL, with report");
    add_config_support(demo_cmd);
    demo_cmd->add_option("--task", demo_args.task, "sr4 | sr8 | dealias4 | dealias8");
    demo_cmd->add_option("--size", demo_args.size, "phantom size (power of two >= 32)");
    demo_cmd->add_option("--seed", demo_args.seed, "master seed")->required();
    demo_cmd->add_option("--out-dir", demo_args.out_dir, "output directory")->required();
    demo_cmd->add_option("--noise-std", demo_args.noise_std, "measurement noise std");
    demo_cmd->add_option("--ssl-iters", demo_args.ssl_iters, "SSL fit iterations");
    demo_cmd->add_option("--lr", demo_args.lr, "SSL learning rate");
    demo_cmd->add_option("--scales", demo_args.scales, "encoder depth");
    demo_cmd->add_option("--base-channels", demo_args.base_channels, "width of the first scale");
    demo_cmd->add_option("--tv-weight", demo_args.tv_weight, "TV regularization weight");
    demo_cmd->add_option("--tv-iters", demo_args.tv_iters, "TV solver iterations");

    CLI11_PARSE(app, argc, argv);

    try {
        if (mask_cmd->parsed()) run_mask(mask_args);
        else if (sim_cmd->parsed()) run_simulate(sim_args);
        else if (rec_cmd->parsed()) run_reconstruct(rec_args);
        else if (eval_cmd->parsed()) return run_eval(eval_args);
        else if (train_cmd->parsed()) run_train(train_args);
        else if (demo_cmd->parsed()) run_demo(demo_args);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
