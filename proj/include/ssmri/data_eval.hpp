#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssmri/forward_models.hpp"
#include "ssmri/image.hpp"

namespace ssmri {

enum class PhantomKind { ellipses, shepp_logan_like };

PhantomKind phantom_kind_from_string(const std::string& s);

/// Piecewise-smooth synthetic test image in [0, 1], deterministic for a
/// given (kind, seed, size). The ellipses kind superimposes 5-12 random
/// ellipses on a dark background.
Image make_phantom(int size, PhantomKind kind, uint64_t seed);

/// 10 * log10(data_range^2 / MSE), capped at 100 dB. data_range <= 0 means
/// "use max of ref".
double psnr(const Image& ref, const Image& test, double data_range = 0.0);

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, evaluated on windows that fit entirely inside the image.
double ssim(const Image& ref, const Image& test, double data_range = 0.0);

struct EvalRecord {
    std::string task;
    std::string method;
    double psnr_db = 0.0;
    double ssim_val = 0.0;
};

/// Appends one row to a CSV with header "task,method,psnr,ssim".
void append_eval_csv(const std::string& path, const EvalRecord& rec);

/// n (phantom, measurement) pairs with disjoint per-item seeds; noiseless
/// measurements through the given mask.
std::vector<std::pair<Image, ComplexImage>> build_dataset(int n, int size, const SamplingMask& mask,
                                                          uint64_t seed);

}  // namespace ssmri
