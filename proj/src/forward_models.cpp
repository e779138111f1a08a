#include "ssmri/forward_models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ssmri/rng.hpp"

namespace ssmri {

std::string to_string(MaskGeometry g) {
    switch (g) {
        case MaskGeometry::superresolution: return "superresolution";
        case MaskGeometry::dealiasing: return "dealiasing";
        case MaskGeometry::full: return "full";
        case MaskGeometry::custom: return "custom";
    }
    return "custom";
}

int SamplingMask::sampled_columns() const {
    int n = 0;
    for (uint8_t c : columns) n += c ? 1 : 0;
    return n;
}

double SamplingMask::sampled_fraction() const {
    return w == 0 ? 0.0 : static_cast<double>(sampled_columns()) / w;
}

std::vector<double> SamplingMask::plane() const {
    std::vector<double> p(static_cast<size_t>(h) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) p[static_cast<size_t>(r) * w + c] = columns[c] ? 1.0 : 0.0;
    return p;
}

SamplingMask make_full_mask(int h, int w) {
    SamplingMask m;
    m.h = h;
    m.w = w;
    m.columns.assign(w, 1);
    m.accel_factor = 1.0;
    m.geometry = MaskGeometry::full;
    return m;
}

SamplingMask make_sr_mask(int h, int w, int af) {
    if (af != 1 && af != 2 && af != 4 && af != 8)
        throw std::invalid_argument("make_sr_mask: acceleration factor must be one of {1, 2, 4, 8}");
    if (w % af != 0)
        throw std::invalid_argument("make_sr_mask: width " + std::to_string(w) + " not divisible by af " +
                                    std::to_string(af));
    SamplingMask m;
    m.h = h;
    m.w = w;
    m.columns.assign(w, 0);
    const int band = w / af;
    const int start = w / 2 - band / 2;  // centered on the DC column
    for (int c = start; c < start + band; ++c) m.columns[c] = 1;
    m.accel_factor = af;
    m.geometry = af == 1 ? MaskGeometry::full : MaskGeometry::superresolution;
    return m;
}

SamplingMask make_dealiasing_mask(int h, int w, int af, double center_fraction) {
    if (af < 1) throw std::invalid_argument("make_dealiasing_mask: af must be >= 1");
    if (center_fraction < 0.0 || center_fraction >= 1.0)
        throw std::invalid_argument("make_dealiasing_mask: center_fraction must be in [0, 1)");
    SamplingMask m;
    m.h = h;
    m.w = w;
    m.columns.assign(w, 0);
    const int dc = w / 2;
    for (int c = 0; c < w; ++c)
        if (((c - dc) % af + af) % af == 0) m.columns[c] = 1;
    const int band = static_cast<int>(std::lround(center_fraction * w));
    const int start = dc - band / 2;
    for (int c = start; c < start + band; ++c)
        if (c >= 0 && c < w) m.columns[c] = 1;
    m.accel_factor = af;
    m.geometry = af == 1 ? MaskGeometry::full : MaskGeometry::dealiasing;
    return m;
}

double default_center_fraction(int af) { return af >= 8 ? 0.04 : 0.08; }

SamplingMask mask_for_task(const std::string& task, int h, int w) {
    if (task == "full") return make_full_mask(h, w);
    if (task == "sr4") return make_sr_mask(h, w, 4);
    if (task == "sr8") return make_sr_mask(h, w, 8);
    if (task == "dealias4") return make_dealiasing_mask(h, w, 4, default_center_fraction(4));
    if (task == "dealias8") return make_dealiasing_mask(h, w, 8, default_center_fraction(8));
    throw std::invalid_argument("mask_for_task: unknown task '" + task +
                                "' (expected sr4, sr8, dealias4, dealias8 or full)");
}

ComplexImage apply_masked_fourier(const ComplexImage& x, const SamplingMask& mask) {
    if (x.h != mask.h || x.w != mask.w)
        throw std::invalid_argument("apply_masked_fourier: image " + std::to_string(x.h) + "x" +
                                    std::to_string(x.w) + " vs mask " + std::to_string(mask.h) + "x" +
                                    std::to_string(mask.w));
    KSpace ks = fft2_centered(x);
    for (int r = 0; r < ks.h; ++r)
        for (int c = 0; c < ks.w; ++c)
            if (!mask.sampled_col(c)) {
                ks.re[ks.idx(r, c)] = 0.0;
                ks.im[ks.idx(r, c)] = 0.0;
            }
    return ifft2_centered(ks);
}

ComplexImage simulate_measurement(const Image& x, const SamplingMask& mask, const MeasurementSimConfig& cfg) {
    if (cfg.noise_std < 0.0) throw std::invalid_argument("simulate_measurement: noise_std must be >= 0");
    ComplexImage y = apply_masked_fourier(to_complex(x), mask);
    if (cfg.noise_std > 0.0) {
        Rng rng(cfg.seed);
        for (int i = 0; i < y.numel(); ++i) y.re[i] += cfg.noise_std * rng.normal();
        for (int i = 0; i < y.numel(); ++i) y.im[i] += cfg.noise_std * rng.normal();
    }
    return y;
}

namespace {

Tensor as_complex_pair(const Tensor& x) {
    const Shape& s = x.shape();
    if (s.c == 2) return x;
    if (s.c == 1) return concat_channels({x, Tensor::zeros(Shape{1, s.h, s.w})});
    throw std::invalid_argument("masked_fourier: expected 1 or 2 channels, got " + to_string(s));
}

}  // namespace

Tensor masked_fft(const Tensor& x, const SamplingMask& mask) {
    const Shape& s = x.shape();
    if (s.h != mask.h || s.w != mask.w)
        throw std::invalid_argument("masked_fft: tensor " + to_string(s) + " vs mask " + std::to_string(mask.h) +
                                    "x" + std::to_string(mask.w));
    return hadamard_plane(fft2c(as_complex_pair(x)), mask.plane(), mask.h, mask.w);
}

Tensor masked_fourier(const Tensor& x, const SamplingMask& mask) { return ifft2c(masked_fft(x, mask)); }

// --- linear operator catalog ---------------------------------------------------

LinearOperatorSpec LinearOperatorSpec::identity(int n) {
    LinearOperatorSpec s;
    s.kind = Kind::identity;
    s.n = n;
    s.m = n;
    return s;
}

LinearOperatorSpec LinearOperatorSpec::inpainting(std::vector<uint8_t> keep) {
    LinearOperatorSpec s;
    s.kind = Kind::inpainting_mask;
    s.n = static_cast<int>(keep.size());
    s.m = s.n;
    s.keep = std::move(keep);
    return s;
}

LinearOperatorSpec LinearOperatorSpec::gaussian(int m, int n, uint64_t seed) {
    if (m > n)
        throw std::invalid_argument("LinearOperatorSpec::gaussian: compressed sensing requires m <= n, got m = " +
                                    std::to_string(m) + ", n = " + std::to_string(n));
    LinearOperatorSpec s;
    s.kind = Kind::gaussian_random;
    s.m = m;
    s.n = n;
    s.seed = seed;
    return s;
}

LinearOperatorSpec LinearOperatorSpec::masked_fourier_op(SamplingMask mask) {
    LinearOperatorSpec s;
    s.kind = Kind::masked_fourier;
    s.n = mask.h * mask.w;
    s.m = 2 * s.n;
    s.mask = std::move(mask);
    return s;
}

LinearOperatorSpec LinearOperatorSpec::radon(int n) {
    LinearOperatorSpec s;
    s.kind = Kind::radon;
    s.n = n;
    s.m = n;
    return s;
}

namespace {

void check_dim(size_t got, int want, const char* who) {
    if (static_cast<int>(got) != want)
        throw std::invalid_argument(std::string(who) + ": dimension mismatch, got " + std::to_string(got) +
                                    ", expected " + std::to_string(want));
}

/// Row-major m x n matrix with i.i.d. N(0, 1/m) entries, regenerated
/// deterministically from the seed.
std::vector<double> gaussian_matrix(const LinearOperatorSpec& spec) {
    Rng rng(spec.seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.m));
    std::vector<double> a(static_cast<size_t>(spec.m) * spec.n);
    for (double& v : a) v = scale * rng.normal();
    return a;
}

}  // namespace

std::vector<double> apply_linear(const LinearOperatorSpec& spec, const std::vector<double>& x) {
    using Kind = LinearOperatorSpec::Kind;
    switch (spec.kind) {
        case Kind::identity:
            check_dim(x.size(), spec.n, "apply_linear(identity)");
            return x;
        case Kind::inpainting_mask: {
            check_dim(x.size(), spec.n, "apply_linear(inpainting)");
            std::vector<double> y(x.size());
            for (size_t i = 0; i < x.size(); ++i) y[i] = spec.keep[i] ? x[i] : 0.0;
            return y;
        }
        case Kind::gaussian_random: {
            check_dim(x.size(), spec.n, "apply_linear(gaussian)");
            const std::vector<double> a = gaussian_matrix(spec);
            std::vector<double> y(spec.m, 0.0);
            for (int r = 0; r < spec.m; ++r) {
                const double* row = a.data() + static_cast<size_t>(r) * spec.n;
                double acc = 0.0;
                for (int c = 0; c < spec.n; ++c) acc += row[c] * x[c];
                y[r] = acc;
            }
            return y;
        }
        case Kind::masked_fourier: {
            check_dim(x.size(), spec.n, "apply_linear(masked_fourier)");
            Image img(spec.mask.h, spec.mask.w);
            img.px = x;
            ComplexImage y = apply_masked_fourier(to_complex(img), spec.mask);
            std::vector<double> out;
            out.reserve(2 * y.numel());
            out.insert(out.end(), y.re.begin(), y.re.end());
            out.insert(out.end(), y.im.begin(), y.im.end());
            return out;
        }
        case Kind::radon:
            throw std::runtime_error("apply_linear: unsupported operator (radon)");
    }
    throw std::logic_error("apply_linear: unreachable");
}

std::vector<double> adjoint_linear(const LinearOperatorSpec& spec, const std::vector<double>& y) {
    using Kind = LinearOperatorSpec::Kind;
    switch (spec.kind) {
        case Kind::identity:
            check_dim(y.size(), spec.m, "adjoint_linear(identity)");
            return y;
        case Kind::inpainting_mask: {
            check_dim(y.size(), spec.m, "adjoint_linear(inpainting)");
            std::vector<double> x(y.size());
            for (size_t i = 0; i < y.size(); ++i) x[i] = spec.keep[i] ? y[i] : 0.0;
            return x;
        }
        case Kind::gaussian_random: {
            check_dim(y.size(), spec.m, "adjoint_linear(gaussian)");
            const std::vector<double> a = gaussian_matrix(spec);
            std::vector<double> x(spec.n, 0.0);
            for (int r = 0; r < spec.m; ++r) {
                const double* row = a.data() + static_cast<size_t>(r) * spec.n;
                for (int c = 0; c < spec.n; ++c) x[c] += row[c] * y[r];
            }
            return x;
        }
        case Kind::masked_fourier: {
            // The complex projection is self-adjoint; restricted to real
            // inputs the adjoint is the real part of the same projection.
            check_dim(y.size(), spec.m, "adjoint_linear(masked_fourier)");
            ComplexImage z(spec.mask.h, spec.mask.w);
            std::copy(y.begin(), y.begin() + z.numel(), z.re.begin());
            std::copy(y.begin() + z.numel(), y.end(), z.im.begin());
            ComplexImage x = apply_masked_fourier(z, spec.mask);
            return x.re;
        }
        case Kind::radon:
            throw std::runtime_error("adjoint_linear: unsupported operator (radon)");
    }
    throw std::logic_error("adjoint_linear: unreachable");
}

// --- serialization ---------------------------------------------------------------

void write_pbm(const std::string& path, const SamplingMask& mask) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_pbm: cannot open " + path);
    f << "P1\n" << mask.w << " " << mask.h << "\n";
    for (int r = 0; r < mask.h; ++r) {
        for (int c = 0; c < mask.w; ++c) f << (mask.sampled_col(c) ? 1 : 0) << (c + 1 == mask.w ? "" : " ");
        f << "\n";
    }
    if (!f) throw std::runtime_error("write_pbm: write failed for " + path);
}

SamplingMask read_pbm(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_pbm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P1") throw std::runtime_error("read_pbm: " + path + " is not a P1 bitmap");
    int w = 0, h = 0;
    f >> w >> h;
    if (w <= 0 || h <= 0) throw std::runtime_error("read_pbm: bad dimensions in " + path);
    SamplingMask m;
    m.h = h;
    m.w = w;
    m.columns.assign(w, 0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            int bit = 0;
            if (!(f >> bit)) throw std::runtime_error("read_pbm: truncated data in " + path);
            if (r == 0) m.columns[c] = bit ? 1 : 0;
            else if ((bit != 0) != (m.columns[c] != 0))
                throw std::runtime_error("read_pbm: " + path + " is not a column mask");
        }
    const int cols = m.sampled_columns();
    m.accel_factor = cols > 0 ? static_cast<double>(w) / cols : 0.0;
    m.geometry = MaskGeometry::custom;
    if (cols == w) {
        m.geometry = MaskGeometry::full;
        m.accel_factor = 1.0;
    }
    return m;
}

}  // namespace ssmri
