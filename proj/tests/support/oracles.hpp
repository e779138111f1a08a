// Independent reference implementations used only by tests. Everything here
// is deliberately naive (quadruple loops, direct summation) so a bug in the
// library can't hide in a shared code path.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "ssmri/fourier.hpp"
#include "ssmri/tensor.hpp"

namespace oracles {

constexpr double kPi = 3.14159265358979323846;

/// Centered orthonormal 2-D DFT by direct O(N^4) summation:
///   Y[kr][kc] = 1/sqrt(HW) * sum_m x[m] exp(-2*pi*i*((kr-cr)(mr-cr)/H + (kc-cc)(mc-cc)/W))
/// with the center at (H/2, W/2); sign = +1 gives the inverse.
inline ssmri::ComplexImage dft2_centered(const ssmri::ComplexImage& x, int sign = -1) {
    const int h = x.h, w = x.w;
    const int cr = h / 2, cc = w / 2;
    const double norm = 1.0 / std::sqrt(static_cast<double>(h) * w);
    ssmri::ComplexImage out(h, w);
    for (int kr = 0; kr < h; ++kr)
        for (int kc = 0; kc < w; ++kc) {
            double sre = 0.0, sim = 0.0;
            for (int mr = 0; mr < h; ++mr)
                for (int mc = 0; mc < w; ++mc) {
                    const double ang = sign * 2.0 * kPi *
                                       (static_cast<double>((kr - cr) * (mr - cr)) / h +
                                        static_cast<double>((kc - cc) * (mc - cc)) / w);
                    const double cre = std::cos(ang), cim = std::sin(ang);
                    const size_t i = x.idx(mr, mc);
                    sre += x.re[i] * cre - x.im[i] * cim;
                    sim += x.re[i] * cim + x.im[i] * cre;
                }
            out.re[out.idx(kr, kc)] = norm * sre;
            out.im[out.idx(kr, kc)] = norm * sim;
        }
    return out;
}

/// Direct convolution over plain vectors, quadruple-nested the obvious way.
/// Kernel layout matches the library: plane oc*in_ch + ic, each K x K.
inline std::vector<double> conv2d_direct(const std::vector<double>& input, int in_ch, int h, int w,
                                         const std::vector<double>& kernel, int out_ch, int k,
                                         const std::vector<double>& bias, int stride, int padding) {
    const int oh = (h + 2 * padding - k) / stride + 1;
    const int ow = (w + 2 * padding - k) / stride + 1;
    std::vector<double> out(static_cast<size_t>(out_ch) * oh * ow, 0.0);
    for (int oc = 0; oc < out_ch; ++oc)
        for (int r = 0; r < oh; ++r)
            for (int c = 0; c < ow; ++c) {
                double acc = bias[oc];
                for (int ic = 0; ic < in_ch; ++ic)
                    for (int kr = 0; kr < k; ++kr)
                        for (int kc = 0; kc < k; ++kc) {
                            const int ir = r * stride + kr - padding;
                            const int icol = c * stride + kc - padding;
                            if (ir < 0 || ir >= h || icol < 0 || icol >= w) continue;
                            acc += input[(static_cast<size_t>(ic) * h + ir) * w + icol] *
                                   kernel[(static_cast<size_t>(oc * in_ch + ic) * k + kr) * k + kc];
                        }
                out[(static_cast<size_t>(oc) * oh + r) * ow + c] = acc;
            }
    return out;
}

/// One bias-corrected Adam step on a single scalar, written from the
/// published update rule rather than the library code.
struct ScalarAdam {
    double m = 0.0, v = 0.0;
    long t = 0;

    double step(double theta, double g, double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
        ++t;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double mhat = m / (1.0 - std::pow(b1, t));
        const double vhat = v / (1.0 - std::pow(b2, t));
        return theta - lr * mhat / (std::sqrt(vhat) + eps);
    }
};

/// Central-difference gradient check. loss_fn must rebuild the graph from
/// the current parameter values on every call. Returns the worst relative
/// error over all checked entries (elements with both gradients tiny are
/// compared absolutely instead).
inline double max_grad_rel_err(const std::function<ssmri::Tensor()>& loss_fn,
                               const std::vector<ssmri::Tensor>& params, double h = 1e-5) {
    ssmri::Tensor loss = loss_fn();
    for (const ssmri::Tensor& p : params) {
        ssmri::Tensor copy = p;
        copy.clear_grad();
    }
    ssmri::backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const ssmri::Tensor& p : params) analytic.push_back(p.grad());

    double worst = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        ssmri::Tensor p = params[pi];
        std::vector<double>& vals = p.mutable_value();
        for (size_t i = 0; i < vals.size(); ++i) {
            const double orig = vals[i];
            vals[i] = orig + h;
            const double fp = loss_fn().item();
            vals[i] = orig - h;
            const double fm = loss_fn().item();
            vals[i] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = analytic[pi][i];
            const double scale = std::abs(fd) + std::abs(an);
            const double err = scale > 1e-7 ? std::abs(fd - an) / scale : std::abs(fd - an);
            if (err > worst) worst = err;
        }
    }
    return worst;
}

}  // namespace oracles
