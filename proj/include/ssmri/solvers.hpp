#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssmri/forward_models.hpp"
#include "ssmri/image.hpp"
#include "ssmri/prior_net.hpp"
#include "ssmri/tensor.hpp"

namespace ssmri {

/// Coefficients of the three-term self-supervised loss:
/// alpha * image residual + beta * k-space residual + gamma * cycle term.
struct LossWeights {
    double alpha = 1.0;
    double beta = 8.0;
    double gamma = 1e-5;

    static LossWeights preset_x4() { return {1.0, 8.0, 1e-5}; }
    static LossWeights preset_x8() { return {0.0, 7.0, 0.0}; }
    static LossWeights preset_for(double accel_factor) {
        return accel_factor >= 8.0 ? preset_x8() : preset_x4();
    }
    void validate() const;
};

struct FitConfig {
    int max_iters = 2000;
    double lr = 1e-4;
    uint64_t seed = 0;
    bool track_best = true;  // return the lowest-loss iterate instead of the last
    int log_every = 0;       // 0 = silent
    // plateau stop, off by default so runs always have the same length
    bool early_stop = false;
    int early_stop_window = 100;
    double early_stop_rel = 1e-6;

    void validate() const;
};

struct ReconReport {
    std::string method;
    int iterations = 0;
    double final_loss = 0.0;
    std::vector<double> loss_trace;  // one entry per iteration run
    double wall_seconds = 0.0;
    std::optional<double> psnr_db;  // filled by callers that hold a ground truth
    std::optional<double> ssim_val;
};

/// Self-supervised loss on one measurement:
///   alpha * |y - y_hat|_1 + beta * |F y - S.F x_hat|_1 + gamma * |x_hat - I(y_hat)|_1
/// with y_hat = F^-1(S . F x_hat). Complex L1 sums the absolute real and
/// imaginary parts. When gamma > 0 the network re-runs on y_hat (built with
/// the same input mode), so net is required and a measurement-free input
/// mode is rejected; x_hat must then be the network's own output on y.
/// gamma = 0 skips the second pass entirely.
Tensor ssl_loss(const ComplexImage& y, const Tensor& x_hat, const SamplingMask& mask, const LossWeights& w,
                const PriorNet* net = nullptr);

/// Fits the network to a single measurement by Adam on ssl_loss. Throws if
/// the loss stops being finite, naming the iteration.
std::pair<Image, ReconReport> ssl_fit(const ComplexImage& y, const SamplingMask& mask, const NetConfig& net_cfg,
                                      const LossWeights& w, const FitConfig& fit_cfg);

/// Trains the network to map measurements to ground-truth images,
/// minimizing the mean per-pair L1 by cycling Adam steps through the pairs
/// in order (one pair per step). The trace holds the stepped pair's loss;
/// final_loss is the mean loss over the whole set after training.
std::pair<PriorNet, ReconReport> supervised_train(const std::vector<std::pair<Image, ComplexImage>>& pairs,
                                                  const NetConfig& net_cfg, const FitConfig& fit_cfg);

/// Mean over pairs of |I(y_i) - x_i|_1 (the training objective).
double supervised_mean_loss(const PriorNet& net, const std::vector<std::pair<Image, ComplexImage>>& pairs);

/// One forward pass of a frozen network on a measurement.
Image supervised_apply(const PriorNet& net, const ComplexImage& y);

/// Isotropic total variation: sum of gradient magnitudes under forward
/// differences with Neumann boundaries.
double total_variation(const Image& x);

/// Solves min_x 0.5 |S.F x - S.F y|^2 + tv_weight * TV(x) with a
/// primal-dual (Chambolle-Pock) scheme; both the gradient operator and the
/// masked Fourier operator are dualized, with step sizes from the operator
/// norm bound |K|^2 <= 8 + 1. The report's trace is the objective value per
/// iteration.
std::pair<Image, ReconReport> tv_reconstruct(const ComplexImage& y, const SamplingMask& mask,
                                             double tv_weight = 0.01, int iters = 200);

/// Uniform entry point for the CLI. Task presets (applied when the
/// optionals are empty): acceleration >= 8 pairs weights (0, 7, 0) with
/// meshgrid input; lower accelerations pair (1, 8, 1e-5) with stacked
/// input.
struct ReconRequest {
    std::string method;  // "ssl", "tv", "supervised-apply"
    ComplexImage y;
    SamplingMask mask;
    NetConfig net_cfg;
    FitConfig fit_cfg;
    std::optional<LossWeights> weights;
    std::optional<InputMode> input_mode;
    double tv_weight = 0.01;
    int tv_iters = 200;
    std::string checkpoint_path;  // supervised-apply
};

std::pair<Image, ReconReport> reconstruct(const ReconRequest& req);

/// CSV with header iteration,loss,psnr,ssim; metric columns are empty
/// except on the last row when they are known.
void write_recon_csv(const std::string& path, const ReconReport& report);

/// Small human-readable summary. Wall time lives here and only here, so
/// repeated runs produce byte-identical CSVs.
void write_recon_summary(const std::string& path, const ReconReport& report);

}  // namespace ssmri
