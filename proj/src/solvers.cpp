#include "ssmri/solvers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace ssmri {

void LossWeights::validate() const {
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
        throw std::invalid_argument("LossWeights: weights must be >= 0");
}

void FitConfig::validate() const {
    if (max_iters < 1) throw std::invalid_argument("FitConfig: max_iters must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("FitConfig: lr must be positive");
    if (early_stop && early_stop_window < 2)
        throw std::invalid_argument("FitConfig: early_stop_window must be >= 2");
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Plateau test on the trailing window of the trace.
bool plateaued(const std::vector<double>& trace, const FitConfig& cfg) {
    const size_t n = trace.size();
    if (!cfg.early_stop || n < static_cast<size_t>(cfg.early_stop_window)) return false;
    const double prev = trace[n - cfg.early_stop_window];
    const double cur = trace[n - 1];
    return std::abs(prev - cur) < cfg.early_stop_rel * std::max(1.0, std::abs(prev));
}

}  // namespace

Tensor ssl_loss(const ComplexImage& y, const Tensor& x_hat, const SamplingMask& mask, const LossWeights& w,
                const PriorNet* net) {
    w.validate();
    const Shape& s = x_hat.shape();
    if (s.c != 1) throw std::invalid_argument("ssl_loss: x_hat must have 1 channel");
    if (s.h != y.h || s.w != y.w || mask.h != y.h || mask.w != y.w)
        throw std::invalid_argument("ssl_loss: measurement, mask and x_hat shapes disagree");

    std::vector<Tensor> terms;
    Tensor y_hat;  // built lazily; needed by the first and third terms
    auto resynth = [&]() -> const Tensor& {
        if (!y_hat.defined()) y_hat = masked_fourier(x_hat, mask);
        return y_hat;
    };
    if (w.alpha > 0.0) terms.push_back(scale(l1_norm(resynth(), complex_to_tensor(y)), w.alpha));
    if (w.beta > 0.0) {
        Tensor y_k = complex_to_tensor(fft2_centered(y));
        terms.push_back(scale(l1_norm(masked_fft(x_hat, mask), y_k), w.beta));
    }
    if (w.gamma > 0.0) {
        if (net == nullptr)
            throw std::invalid_argument("ssl_loss: gamma > 0 needs the network for the cycle term");
        if (net->cfg.input_mode == InputMode::meshgrid)
            throw std::invalid_argument(
                "ssl_loss: gamma > 0 is incompatible with meshgrid input; the cycle term would never see the "
                "re-synthesized measurement");
        Tensor x_cycle = net_forward(*net, make_input_from(net->cfg.input_mode, resynth()));
        terms.push_back(scale(l1_norm(x_hat, x_cycle), w.gamma));
    }
    if (terms.empty()) return Tensor::scalar(0.0);
    Tensor total = terms[0];
    for (size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
    return total;
}

std::pair<Image, ReconReport> ssl_fit(const ComplexImage& y, const SamplingMask& mask, const NetConfig& net_cfg,
                                      const LossWeights& w, const FitConfig& fit_cfg) {
    net_cfg.validate();
    fit_cfg.validate();
    w.validate();
    if (w.alpha + w.beta + w.gamma <= 0.0)
        throw std::invalid_argument("ssl_fit: at least one loss weight must be positive");
    if (w.gamma > 0.0 && net_cfg.input_mode == InputMode::meshgrid)
        throw std::invalid_argument("ssl_fit: gamma > 0 requires a measurement-carrying input mode");

    const auto t0 = std::chrono::steady_clock::now();
    PriorNet net = build_network(net_cfg);
    const Tensor input = make_input(net_cfg.input_mode, &y, y.h, y.w);
    AdamConfig adam;
    adam.lr = fit_cfg.lr;

    ReconReport rep;
    rep.method = "ssl";
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> out_px;

    for (int it = 0; it < fit_cfg.max_iters; ++it) {
        Tensor x_hat = net_forward(net, input);
        Tensor loss = ssl_loss(y, x_hat, mask, w, &net);
        const double lv = loss.item();
        if (!std::isfinite(lv))
            throw std::runtime_error("ssl_fit: loss is not finite at iteration " + std::to_string(it));
        rep.loss_trace.push_back(lv);
        if (!fit_cfg.track_best || lv < best) {
            best = lv;
            out_px = x_hat.value();
        }
        if (fit_cfg.log_every > 0 && it % fit_cfg.log_every == 0)
            std::fprintf(stderr, "ssl_fit iter %d loss %.6g\n", it, lv);
        if (plateaued(rep.loss_trace, fit_cfg)) break;
        backward(loss);
        adam_step(net.params, adam);
    }

    rep.iterations = static_cast<int>(rep.loss_trace.size());
    rep.final_loss = rep.loss_trace.back();
    rep.wall_seconds = seconds_since(t0);

    Image out(y.h, y.w);
    out.px.assign(out_px.begin(), out_px.end());
    return {std::move(out), std::move(rep)};
}

std::pair<PriorNet, ReconReport> supervised_train(const std::vector<std::pair<Image, ComplexImage>>& pairs,
                                                  const NetConfig& net_cfg, const FitConfig& fit_cfg) {
    net_cfg.validate();
    fit_cfg.validate();
    if (pairs.empty()) throw std::invalid_argument("supervised_train: need at least one pair");
    if (net_cfg.input_mode == InputMode::meshgrid)
        throw std::invalid_argument("supervised_train: meshgrid input carries no measurement information");
    const int h = pairs[0].first.h, wd = pairs[0].first.w;
    for (const auto& [x, y] : pairs)
        if (x.h != h || x.w != wd || y.h != h || y.w != wd)
            throw std::invalid_argument("supervised_train: all pairs must share one shape");

    const auto t0 = std::chrono::steady_clock::now();
    PriorNet net = build_network(net_cfg);
    std::vector<Tensor> inputs, targets;
    inputs.reserve(pairs.size());
    targets.reserve(pairs.size());
    for (const auto& [x, y] : pairs) {
        inputs.push_back(make_input(net_cfg.input_mode, &y, h, wd));
        targets.push_back(image_to_tensor(x));
    }

    AdamConfig adam;
    adam.lr = fit_cfg.lr;
    ReconReport rep;
    rep.method = "supervised-train";

    for (int it = 0; it < fit_cfg.max_iters; ++it) {
        const size_t i = static_cast<size_t>(it) % pairs.size();
        Tensor loss = l1_norm(net_forward(net, inputs[i]), targets[i]);
        const double lv = loss.item();
        if (!std::isfinite(lv))
            throw std::runtime_error("supervised_train: loss is not finite at iteration " + std::to_string(it));
        rep.loss_trace.push_back(lv);
        if (fit_cfg.log_every > 0 && it % fit_cfg.log_every == 0)
            std::fprintf(stderr, "supervised_train iter %d pair %zu loss %.6g\n", it, i, lv);
        if (plateaued(rep.loss_trace, fit_cfg)) break;
        backward(loss);
        adam_step(net.params, adam);
    }

    rep.iterations = static_cast<int>(rep.loss_trace.size());
    rep.final_loss = supervised_mean_loss(net, pairs);
    rep.wall_seconds = seconds_since(t0);
    return {std::move(net), std::move(rep)};
}

double supervised_mean_loss(const PriorNet& net, const std::vector<std::pair<Image, ComplexImage>>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("supervised_mean_loss: need at least one pair");
    double total = 0.0;
    for (const auto& [x, y] : pairs) {
        Tensor input = make_input(net.cfg.input_mode, &y, x.h, x.w);
        total += l1_norm(net_forward(net, input), image_to_tensor(x)).item();
    }
    return total / static_cast<double>(pairs.size());
}

Image supervised_apply(const PriorNet& net, const ComplexImage& y) {
    Tensor input = make_input(net.cfg.input_mode, &y, y.h, y.w);
    return tensor_to_image(net_forward(net, input));
}

double total_variation(const Image& x) {
    double tv = 0.0;
    for (int r = 0; r < x.h; ++r)
        for (int c = 0; c < x.w; ++c) {
            const double dx = c + 1 < x.w ? x.at(r, c + 1) - x.at(r, c) : 0.0;
            const double dy = r + 1 < x.h ? x.at(r + 1, c) - x.at(r, c) : 0.0;
            tv += std::sqrt(dx * dx + dy * dy);
        }
    return tv;
}

namespace {

/// Forward differences, zero in the last column/row (Neumann).
void tv_grad(const Image& x, Image& gx, Image& gy) {
    for (int r = 0; r < x.h; ++r)
        for (int c = 0; c < x.w; ++c) {
            gx.at(r, c) = c + 1 < x.w ? x.at(r, c + 1) - x.at(r, c) : 0.0;
            gy.at(r, c) = r + 1 < x.h ? x.at(r + 1, c) - x.at(r, c) : 0.0;
        }
}

/// Exact negative adjoint of tv_grad; the last gradient column/row never
/// enters (it is structurally zero).
void tv_div(const Image& px, const Image& py, Image& out) {
    const int h = px.h, w = px.w;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double d = 0.0;
            if (c == 0) d += px.at(r, 0);
            else if (c < w - 1) d += px.at(r, c) - px.at(r, c - 1);
            else d += -px.at(r, c - 1);
            if (r == 0) d += py.at(0, c);
            else if (r < h - 1) d += py.at(r, c) - py.at(r - 1, c);
            else d += -py.at(r - 1, c);
            out.at(r, c) = d;
        }
}

double masked_data_term(const KSpace& fx, const KSpace& b, const SamplingMask& mask) {
    double v = 0.0;
    for (int r = 0; r < fx.h; ++r)
        for (int c = 0; c < fx.w; ++c) {
            if (!mask.sampled_col(c)) continue;
            const size_t i = fx.idx(r, c);
            const double dr = fx.re[i] - b.re[i], di = fx.im[i] - b.im[i];
            v += dr * dr + di * di;
        }
    return 0.5 * v;
}

}  // namespace

std::pair<Image, ReconReport> tv_reconstruct(const ComplexImage& y, const SamplingMask& mask, double tv_weight,
                                             int iters) {
    if (tv_weight < 0.0) throw std::invalid_argument("tv_reconstruct: tv_weight must be >= 0");
    if (iters < 1) throw std::invalid_argument("tv_reconstruct: iters must be >= 1");
    if (mask.h != y.h || mask.w != y.w) throw std::invalid_argument("tv_reconstruct: mask/measurement mismatch");

    const auto t0 = std::chrono::steady_clock::now();
    const int h = y.h, w = y.w;

    // Data target in k-space: the sampled part of the measurement's spectrum.
    KSpace b = fft2_centered(y);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (!mask.sampled_col(c)) b.re[b.idx(r, c)] = b.im[b.idx(r, c)] = 0.0;

    // Primal-dual iteration with K = [grad; S.F]. |grad|^2 <= 8 and the
    // masked Fourier operator has norm <= 1, so tau = sigma = 1/3 meets
    // tau * sigma * |K|^2 <= 1.
    const double tau = 1.0 / 3.0, sigma = 1.0 / 3.0;

    Image x = real_part(y);  // warm start at the corrupted image
    Image xbar = x;
    Image px(h, w), py(h, w), gx(h, w), gy(h, w), div(h, w);
    KSpace q(h, w);

    ReconReport rep;
    rep.method = "tv";

    for (int it = 0; it < iters; ++it) {
        // dual ascent on the TV part: project onto the pointwise ball
        tv_grad(xbar, gx, gy);
        for (int i = 0; i < x.numel(); ++i) {
            double ax = px.px[i] + sigma * gx.px[i];
            double ay = py.px[i] + sigma * gy.px[i];
            const double n = std::sqrt(ax * ax + ay * ay);
            if (n > tv_weight) {
                ax *= tv_weight / n;
                ay *= tv_weight / n;
            }
            px.px[i] = ax;
            py.px[i] = ay;
        }
        // dual ascent on the data part, only on sampled bins
        KSpace fxbar = fft2_centered(to_complex(xbar));
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                if (!mask.sampled_col(c)) continue;
                const size_t i = q.idx(r, c);
                q.re[i] = (q.re[i] + sigma * (fxbar.re[i] - b.re[i])) / (1.0 + sigma);
                q.im[i] = (q.im[i] + sigma * (fxbar.im[i] - b.im[i])) / (1.0 + sigma);
            }
        // primal descent and over-relaxation
        tv_div(px, py, div);
        Image aq = real_part(ifft2_centered(q));
        for (int i = 0; i < x.numel(); ++i) {
            const double xn = x.px[i] - tau * (-div.px[i] + aq.px[i]);
            xbar.px[i] = 2.0 * xn - x.px[i];
            x.px[i] = xn;
        }
        rep.loss_trace.push_back(masked_data_term(fft2_centered(to_complex(x)), b, mask) +
                                 tv_weight * total_variation(x));
    }

    rep.iterations = iters;
    rep.final_loss = rep.loss_trace.back();
    rep.wall_seconds = seconds_since(t0);
    return {std::move(x), std::move(rep)};
}

std::pair<Image, ReconReport> reconstruct(const ReconRequest& req) {
    if (req.method == "tv") return tv_reconstruct(req.y, req.mask, req.tv_weight, req.tv_iters);
    if (req.method == "ssl") {
        const bool high_af = req.mask.accel_factor >= 8.0;
        NetConfig nc = req.net_cfg;
        nc.input_mode = req.input_mode ? *req.input_mode : (high_af ? InputMode::meshgrid : InputMode::stacked);
        const LossWeights w = req.weights ? *req.weights : LossWeights::preset_for(req.mask.accel_factor);
        return ssl_fit(req.y, req.mask, nc, w, req.fit_cfg);
    }
    if (req.method == "supervised-apply") {
        if (req.checkpoint_path.empty())
            throw std::invalid_argument("reconstruct: supervised-apply needs a checkpoint path");
        const auto t0 = std::chrono::steady_clock::now();
        PriorNet net = load_checkpoint(req.checkpoint_path);
        Image out = supervised_apply(net, req.y);
        ReconReport rep;
        rep.method = "supervised-apply";
        rep.wall_seconds = seconds_since(t0);
        return {std::move(out), std::move(rep)};
    }
    throw std::invalid_argument("reconstruct: unknown method '" + req.method + "'");
}

void write_recon_csv(const std::string& path, const ReconReport& report) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_recon_csv: cannot open " + path);
    f << "iteration,loss,psnr,ssim\n";
    char buf[160];
    for (size_t i = 0; i < report.loss_trace.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g", i, report.loss_trace[i]);
        f << buf;
        if (i + 1 == report.loss_trace.size() && report.psnr_db && report.ssim_val) {
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", *report.psnr_db, *report.ssim_val);
            f << buf;
        } else {
            f << ",,\n";
        }
    }
    if (!f) throw std::runtime_error("write_recon_csv: write failed for " + path);
}

void write_recon_summary(const std::string& path, const ReconReport& report) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_recon_summary: cannot open " + path);
    char buf[160];
    f << "method: " << report.method << "\n";
    f << "iterations: " << report.iterations << "\n";
    std::snprintf(buf, sizeof(buf), "final_loss: %.17g\n", report.final_loss);
    f << buf;
    std::snprintf(buf, sizeof(buf), "wall_seconds: %.3f\n", report.wall_seconds);
    f << buf;
    if (report.psnr_db) {
        std::snprintf(buf, sizeof(buf), "psnr_db: %.17g\n", *report.psnr_db);
        f << buf;
    }
    if (report.ssim_val) {
        std::snprintf(buf, sizeof(buf), "ssim: %.17g\n", *report.ssim_val);
        f << buf;
    }
    if (!f) throw std::runtime_error("write_recon_summary: write failed for " + path);
}

}  // namespace ssmri
