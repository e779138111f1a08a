#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssmri/fourier.hpp"
#include "ssmri/image.hpp"
#include "ssmri/tensor.hpp"

namespace ssmri {

enum class MaskGeometry { superresolution, dealiasing, full, custom };

std::string to_string(MaskGeometry g);

/// Binary Cartesian k-space sampling pattern. Masks are column masks
/// (constant along the frequency-encoding axis), so only a per-column
/// flag vector is stored.
struct SamplingMask {
    int h = 0, w = 0;
    std::vector<uint8_t> columns;  // size w, 1 = sampled line
    double accel_factor = 1.0;
    MaskGeometry geometry = MaskGeometry::custom;

    bool sampled_col(int c) const { return columns[c] != 0; }
    double at(int /*r*/, int c) const { return columns[c] ? 1.0 : 0.0; }
    int sampled_columns() const;
    double sampled_fraction() const;
    std::vector<double> plane() const;  // dense h*w copy of the 0/1 pattern
};

SamplingMask make_full_mask(int h, int w);

/// Contiguous central band of w/af columns centered on the DC column.
SamplingMask make_sr_mask(int h, int w, int af);

/// Every af-th column (phased to include the DC column) plus a central band
/// of round(center_fraction * w) columns.
SamplingMask make_dealiasing_mask(int h, int w, int af, double center_fraction);

double default_center_fraction(int af);  // 0.08 for x4, 0.04 for x8

/// Builds the mask for a task tag: "sr4", "sr8", "dealias4", "dealias8", "full".
SamplingMask mask_for_task(const std::string& task, int h, int w);

/// y = Phi^-1(S . Phi x): masked Fourier forward model.
ComplexImage apply_masked_fourier(const ComplexImage& x, const SamplingMask& mask);

struct MeasurementSimConfig {
    double noise_std = 0.0;
    uint64_t seed = 0;
};

/// Measurement with additive i.i.d. Gaussian noise on both the real and
/// imaginary parts. noise_std = 0 reduces exactly to apply_masked_fourier.
ComplexImage simulate_measurement(const Image& x, const SamplingMask& mask, const MeasurementSimConfig& cfg);

// Differentiable versions operating on graph tensors. Input may be a
// 1-channel real image (imaginary part taken as zero) or a 2-channel
// complex pair; output is always a 2-channel complex pair.
Tensor masked_fft(const Tensor& x, const SamplingMask& mask);      // S . Phi x
Tensor masked_fourier(const Tensor& x, const SamplingMask& mask);  // Phi^-1(S . Phi x)

// --- catalog of simple linear operators --------------------------------------

/// Simple linear forward operators on flattened real vectors. The
/// masked-Fourier kind maps an n-vector (real image) to a 2n-vector
/// (re plane then im plane). Radon is named but not implemented.
struct LinearOperatorSpec {
    enum class Kind { identity, inpainting_mask, gaussian_random, masked_fourier, radon };
    Kind kind = Kind::identity;
    int n = 0;  // input dimension
    int m = 0;  // output dimension
    uint64_t seed = 0;
    std::vector<uint8_t> keep;  // inpainting: 1 = entry observed
    SamplingMask mask;          // masked_fourier

    static LinearOperatorSpec identity(int n);
    static LinearOperatorSpec inpainting(std::vector<uint8_t> keep);
    static LinearOperatorSpec gaussian(int m, int n, uint64_t seed);  // requires m <= n
    static LinearOperatorSpec masked_fourier_op(SamplingMask mask);
    static LinearOperatorSpec radon(int n);
};

std::vector<double> apply_linear(const LinearOperatorSpec& spec, const std::vector<double>& x);
std::vector<double> adjoint_linear(const LinearOperatorSpec& spec, const std::vector<double>& y);

// --- serialization ------------------------------------------------------------

void write_pbm(const std::string& path, const SamplingMask& mask);
SamplingMask read_pbm(const std::string& path);

}  // namespace ssmri
