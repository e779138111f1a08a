#include "ssmri/fourier.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace ssmri {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Twiddles {
    // w[k] = exp(-2*pi*i*k/n), k in [0, n/2)
    std::vector<double> re, im;
};

const Twiddles& twiddles_for(int n) {
    thread_local std::map<int, Twiddles> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Twiddles t;
    t.re.resize(n / 2);
    t.im.resize(n / 2);
    for (int k = 0; k < n / 2; ++k) {
        const double a = -2.0 * kPi * k / n;
        t.re[k] = std::cos(a);
        t.im[k] = std::sin(a);
    }
    return cache.emplace(n, std::move(t)).first->second;
}

const std::vector<int>& bitrev_for(int n) {
    thread_local std::map<int, std::vector<int>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<int> rev(n);
    int bits = 0;
    while ((1 << bits) < n) ++bits;
    for (int i = 0; i < n; ++i) {
        int r = 0;
        for (int b = 0; b < bits; ++b)
            if (i & (1 << b)) r |= 1 << (bits - 1 - b);
        rev[i] = r;
    }
    return cache.emplace(n, std::move(rev)).first->second;
}

/// In-place radix-2 DIT transform on contiguous buffers, no normalization.
/// inverse = true conjugates the twiddles.
void fft1d(double* re, double* im, int n, bool inverse) {
    const auto& rev = bitrev_for(n);
    for (int i = 0; i < n; ++i) {
        const int j = rev[i];
        if (j > i) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    const auto& tw = twiddles_for(n);
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len >> 1;
        const int step = n / len;
        for (int start = 0; start < n; start += len) {
            for (int k = 0; k < half; ++k) {
                const double wr = tw.re[k * step];
                const double wi = inverse ? -tw.im[k * step] : tw.im[k * step];
                const int a = start + k, b = start + k + half;
                const double tr = re[b] * wr - im[b] * wi;
                const double ti = re[b] * wi + im[b] * wr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
            }
        }
    }
}

void check_dims(const ComplexImage& x, const char* who) {
    if (!is_pow2(x.h) || !is_pow2(x.w))
        throw std::invalid_argument(std::string(who) + ": dimensions must be powers of two, got " +
                                    std::to_string(x.h) + "x" + std::to_string(x.w));
    if (static_cast<int>(x.re.size()) != x.numel() || static_cast<int>(x.im.size()) != x.numel())
        throw std::invalid_argument(std::string(who) + ": plane sizes do not match dimensions");
}

/// Unnormalized 2-D transform: rows, then columns.
void fft2_inplace(ComplexImage& x, bool inverse) {
    for (int r = 0; r < x.h; ++r) fft1d(x.re.data() + x.idx(r, 0), x.im.data() + x.idx(r, 0), x.w, inverse);
    std::vector<double> cr(x.h), ci(x.h);
    for (int c = 0; c < x.w; ++c) {
        for (int r = 0; r < x.h; ++r) {
            cr[r] = x.re[x.idx(r, c)];
            ci[r] = x.im[x.idx(r, c)];
        }
        fft1d(cr.data(), ci.data(), x.h, inverse);
        for (int r = 0; r < x.h; ++r) {
            x.re[x.idx(r, c)] = cr[r];
            x.im[x.idx(r, c)] = ci[r];
        }
    }
}

ComplexImage roll(const ComplexImage& x, int dr, int dc) {
    ComplexImage out(x.h, x.w);
    for (int r = 0; r < x.h; ++r) {
        const int rr = (r + dr) % x.h;
        for (int c = 0; c < x.w; ++c) {
            const int cc = (c + dc) % x.w;
            out.re[out.idx(rr, cc)] = x.re[x.idx(r, c)];
            out.im[out.idx(rr, cc)] = x.im[x.idx(r, c)];
        }
    }
    return out;
}

}  // namespace

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

ComplexImage fftshift(const ComplexImage& x) { return roll(x, x.h / 2, x.w / 2); }

ComplexImage ifftshift(const ComplexImage& x) { return roll(x, x.h - x.h / 2, x.w - x.w / 2); }

KSpace fft2_centered(const ComplexImage& img) {
    check_dims(img, "fft2_centered");
    ComplexImage x = ifftshift(img);
    fft2_inplace(x, false);
    x = fftshift(x);
    const double norm = 1.0 / std::sqrt(static_cast<double>(img.h) * img.w);
    for (double& v : x.re) v *= norm;
    for (double& v : x.im) v *= norm;
    return x;
}

ComplexImage ifft2_centered(const KSpace& ks) {
    check_dims(ks, "ifft2_centered");
    ComplexImage x = ifftshift(ks);
    fft2_inplace(x, true);
    x = fftshift(x);
    const double norm = 1.0 / std::sqrt(static_cast<double>(ks.h) * ks.w);
    for (double& v : x.re) v *= norm;
    for (double& v : x.im) v *= norm;
    return x;
}

ComplexImage to_complex(const Image& x) {
    ComplexImage out(x.h, x.w);
    out.re = x.px;
    return out;
}

Image real_part(const ComplexImage& x) {
    Image out(x.h, x.w);
    out.px = x.re;
    return out;
}

Image magnitude(const ComplexImage& x) {
    Image out(x.h, x.w);
    for (int i = 0; i < x.numel(); ++i) out.px[i] = std::hypot(x.re[i], x.im[i]);
    return out;
}

// --- graph integration ------------------------------------------------------

Tensor complex_to_tensor(const ComplexImage& x, bool requires_grad) {
    std::vector<double> v;
    v.reserve(2 * x.numel());
    v.insert(v.end(), x.re.begin(), x.re.end());
    v.insert(v.end(), x.im.begin(), x.im.end());
    Shape s{2, x.h, x.w};
    return requires_grad ? Tensor::param(s, std::move(v)) : Tensor::constant(s, std::move(v));
}

ComplexImage tensor_to_complex(const Tensor& t) {
    const Shape& s = t.shape();
    if (s.c != 2) throw std::invalid_argument("tensor_to_complex: expected 2 channels, got " + to_string(s));
    ComplexImage out(s.h, s.w);
    const auto& v = t.value();
    std::copy(v.begin(), v.begin() + out.numel(), out.re.begin());
    std::copy(v.begin() + out.numel(), v.end(), out.im.begin());
    return out;
}

namespace {

Tensor transform_node(const Tensor& x, bool inverse) {
    const Shape& s = x.shape();
    if (s.c != 2)
        throw std::invalid_argument("fft2c/ifft2c: expected a 2-channel (re, im) tensor, got " + to_string(s));
    ComplexImage in(s.h, s.w);
    const auto& v = x.value();
    std::copy(v.begin(), v.begin() + in.numel(), in.re.begin());
    std::copy(v.begin() + in.numel(), v.end(), in.im.begin());
    ComplexImage out = inverse ? ifft2_centered(in) : fft2_centered(in);

    std::vector<double> ov;
    ov.reserve(2 * out.numel());
    ov.insert(ov.end(), out.re.begin(), out.re.end());
    ov.insert(ov.end(), out.im.begin(), out.im.end());

    auto xn = x.node();
    Tensor result = Tensor::constant(s, std::move(ov));
    if (xn->requires_grad) {
        auto rn = result.node();
        rn->requires_grad = true;
        rn->parents = {xn};
        const int h = s.h, w = s.w;
        // The transform is unitary, so the Jacobian transpose of the forward
        // map (as a real-linear map on stacked re/im) is the inverse map.
        rn->backprop = [xn, h, w, inverse](detail::Node& self) {
            ComplexImage g(h, w);
            std::copy(self.grad.begin(), self.grad.begin() + g.numel(), g.re.begin());
            std::copy(self.grad.begin() + g.numel(), self.grad.end(), g.im.begin());
            ComplexImage gi = inverse ? fft2_centered(g) : ifft2_centered(g);
            for (int i = 0; i < gi.numel(); ++i) {
                xn->grad[i] += gi.re[i];
                xn->grad[i + gi.numel()] += gi.im[i];
            }
        };
    }
    return result;
}

}  // namespace

Tensor fft2c(const Tensor& x) { return transform_node(x, false); }

Tensor ifft2c(const Tensor& x) { return transform_node(x, true); }

}  // namespace ssmri
