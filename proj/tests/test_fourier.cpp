#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ssmri/fourier.hpp"
#include "ssmri/rng.hpp"
#include "support/oracles.hpp"

using namespace ssmri;

namespace {

ComplexImage random_complex(int h, int w, uint64_t seed) {
    Rng rng(seed);
    ComplexImage x(h, w);
    for (int i = 0; i < x.numel(); ++i) {
        x.re[i] = rng.normal();
        x.im[i] = rng.normal();
    }
    return x;
}

double max_abs_diff(const ComplexImage& a, const ComplexImage& b) {
    double m = 0.0;
    for (int i = 0; i < a.numel(); ++i) {
        m = std::max(m, std::abs(a.re[i] - b.re[i]));
        m = std::max(m, std::abs(a.im[i] - b.im[i]));
    }
    return m;
}

double energy(const ComplexImage& x) {
    double e = 0.0;
    for (int i = 0; i < x.numel(); ++i) e += x.re[i] * x.re[i] + x.im[i] * x.im[i];
    return e;
}

}  // namespace

TEST_CASE("fft2_centered: constant image concentrates at the center bin") {
    const int n = 8;
    const double c = 0.7;
    ComplexImage x(n, n);
    for (int i = 0; i < x.numel(); ++i) x.re[i] = c;
    KSpace ks = fft2_centered(x);
    for (int r = 0; r < n; ++r)
        for (int col = 0; col < n; ++col) {
            const size_t i = ks.idx(r, col);
            if (r == n / 2 && col == n / 2) {
                CHECK(ks.re[i] == doctest::Approx(c * n).epsilon(1e-12));
                CHECK(std::abs(ks.im[i]) < 1e-12);
            } else {
                CHECK(std::abs(ks.re[i]) < 1e-12);
                CHECK(std::abs(ks.im[i]) < 1e-12);
            }
        }
}

TEST_CASE("fft2_centered satisfies Parseval") {
    ComplexImage x = random_complex(16, 16, 7);
    KSpace ks = fft2_centered(x);
    CHECK(energy(ks) == doctest::Approx(energy(x)).epsilon(1e-12));
}

TEST_CASE("fft2_centered matches the direct-summation oracle on 8x8") {
    ComplexImage x = random_complex(8, 8, 8);
    CHECK(max_abs_diff(fft2_centered(x), oracles::dft2_centered(x, -1)) < 1e-10);
    CHECK(max_abs_diff(ifft2_centered(x), oracles::dft2_centered(x, +1)) < 1e-10);
}

TEST_CASE("round trip on 64x64 is exact to 1e-10") {
    ComplexImage x = random_complex(64, 64, 9);
    CHECK(max_abs_diff(ifft2_centered(fft2_centered(x)), x) < 1e-10);
    CHECK(max_abs_diff(fft2_centered(ifft2_centered(x)), x) < 1e-10);
}

TEST_CASE("ifft2_centered: zero spectrum and pure DC bin") {
    const int n = 8;
    KSpace zero(n, n);
    CHECK(max_abs_diff(ifft2_centered(zero), ComplexImage(n, n)) == 0.0);

    KSpace dc(n, n);
    dc.re[dc.idx(n / 2, n / 2)] = n;
    ComplexImage img = ifft2_centered(dc);
    for (int i = 0; i < img.numel(); ++i) {
        CHECK(img.re[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(img.im[i]) < 1e-12);
    }
}

TEST_CASE("non-power-of-two dimensions are rejected") {
    ComplexImage x(6, 8);
    CHECK_THROWS_AS(fft2_centered(x), std::invalid_argument);
    CHECK_THROWS_AS(ifft2_centered(x), std::invalid_argument);
}

TEST_CASE("fftshift: double shift is the identity and a corner delta moves to the center") {
    ComplexImage x = random_complex(4, 4, 10);
    CHECK(max_abs_diff(fftshift(fftshift(x)), x) == 0.0);
    CHECK(max_abs_diff(ifftshift(fftshift(x)), x) == 0.0);

    ComplexImage delta(4, 4);
    delta.re[0] = 1.0;
    ComplexImage shifted = fftshift(delta);
    CHECK(shifted.re[shifted.idx(2, 2)] == 1.0);
    double total = 0.0;
    for (double v : shifted.re) total += std::abs(v);
    CHECK(total == 1.0);
}

TEST_CASE("both transforms are linear") {
    ComplexImage x1 = random_complex(16, 16, 11);
    ComplexImage x2 = random_complex(16, 16, 12);
    const double a = 2.25, b = -0.75;
    ComplexImage mix(16, 16);
    for (int i = 0; i < mix.numel(); ++i) {
        mix.re[i] = a * x1.re[i] + b * x2.re[i];
        mix.im[i] = a * x1.im[i] + b * x2.im[i];
    }
    KSpace lhs = fft2_centered(mix);
    KSpace k1 = fft2_centered(x1), k2 = fft2_centered(x2);
    double worst = 0.0;
    for (int i = 0; i < lhs.numel(); ++i) {
        worst = std::max(worst, std::abs(lhs.re[i] - (a * k1.re[i] + b * k2.re[i])));
        worst = std::max(worst, std::abs(lhs.im[i] - (a * k1.im[i] + b * k2.im[i])));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("real input has a Hermitian-symmetric centered spectrum") {
    const int h = 16, w = 16;
    ComplexImage x = random_complex(h, w, 13);
    for (int i = 0; i < x.numel(); ++i) x.im[i] = 0.0;
    KSpace ks = fft2_centered(x);
    // centered bin (r, c) pairs with the centered image of (-r, -c)
    const int cr = h / 2, cc = w / 2;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int mr = ((cr - (r - cr)) % h + h) % h;
            const int mc = ((cc - (c - cc)) % w + w) % w;
            CHECK(ks.re[ks.idx(r, c)] == doctest::Approx(ks.re[ks.idx(mr, mc)]).epsilon(1e-10));
            CHECK(ks.im[ks.idx(r, c)] == doctest::Approx(-ks.im[ks.idx(mr, mc)]).epsilon(1e-10));
        }
}

TEST_CASE("graph transforms carry gradients that match finite differences") {
    Rng rng(14);
    std::vector<double> v(2 * 8 * 8);
    for (double& x : v) x = rng.normal();
    Tensor x = Tensor::param({2, 8, 8}, std::move(v));
    Tensor target = complex_to_tensor(random_complex(8, 8, 15));

    auto fwd_loss = [&] { return l1_norm(fft2c(x), target); };
    CHECK(oracles::max_grad_rel_err(fwd_loss, {x}) < 1e-4);
    auto inv_loss = [&] { return l1_norm(ifft2c(x), target); };
    CHECK(oracles::max_grad_rel_err(inv_loss, {x}) < 1e-4);
}

TEST_CASE("fft2c forward values agree with the plain transform") {
    ComplexImage x = random_complex(8, 8, 16);
    Tensor t = fft2c(complex_to_tensor(x));
    CHECK(max_abs_diff(tensor_to_complex(t), fft2_centered(x)) == 0.0);
}

TEST_CASE("complex/tensor conversions round-trip") {
    ComplexImage x = random_complex(8, 4, 17);
    CHECK(max_abs_diff(tensor_to_complex(complex_to_tensor(x)), x) == 0.0);

    Image r = real_part(x);
    for (int i = 0; i < x.numel(); ++i) CHECK(r.px[i] == x.re[i]);
    Image m = magnitude(x);
    for (int i = 0; i < x.numel(); ++i)
        CHECK(m.px[i] == doctest::Approx(std::hypot(x.re[i], x.im[i])).epsilon(1e-15));
}
