#pragma once

#include <vector>

#include "ssmri/image.hpp"
#include "ssmri/tensor.hpp"

namespace ssmri {

/// Complex-valued 2-D grid stored as planar (re, im) doubles.
struct ComplexImage {
    int h = 0, w = 0;
    std::vector<double> re, im;

    ComplexImage() = default;
    ComplexImage(int h_, int w_)
        : h(h_), w(w_), re(static_cast<size_t>(h_) * w_, 0.0), im(static_cast<size_t>(h_) * w_, 0.0) {}

    int numel() const { return h * w; }
    size_t idx(int r, int c) const { return static_cast<size_t>(r) * w + c; }
};

/// Centered spectrum: DC sits at (h/2, w/2).
using KSpace = ComplexImage;

bool is_pow2(int n);

/// Orthonormal centered 2-D DFT (overall factor 1/sqrt(H*W), DC at the grid
/// center). Dimensions must be powers of two.
KSpace fft2_centered(const ComplexImage& img);
ComplexImage ifft2_centered(const KSpace& ks);

ComplexImage fftshift(const ComplexImage& x);
ComplexImage ifftshift(const ComplexImage& x);

ComplexImage to_complex(const Image& x);
Image real_part(const ComplexImage& x);
Image magnitude(const ComplexImage& x);

// --- graph integration ------------------------------------------------------
// Complex data rides through the autodiff engine as 2-channel tensors
// (channel 0 = re, channel 1 = im). Both transforms are linear, so the
// backward pass is just the opposite transform applied to the gradient.

Tensor complex_to_tensor(const ComplexImage& x, bool requires_grad = false);
ComplexImage tensor_to_complex(const Tensor& t);

Tensor fft2c(const Tensor& x);
Tensor ifft2c(const Tensor& x);

}  // namespace ssmri
