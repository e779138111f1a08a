#include "ssmri/data_eval.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "ssmri/rng.hpp"

namespace ssmri {

namespace {

struct Ellipse {
    double intensity, cx, cy, a, b, phi;  // unit coordinates in [-1, 1]^2
};

void render_ellipses(Image& img, const std::vector<Ellipse>& ellipses) {
    const int n = img.h;
    for (const Ellipse& e : ellipses) {
        const double c = std::cos(e.phi), s = std::sin(e.phi);
        for (int r = 0; r < img.h; ++r) {
            const double y = 2.0 * (r + 0.5) / n - 1.0;
            for (int cc = 0; cc < img.w; ++cc) {
                const double x = 2.0 * (cc + 0.5) / n - 1.0;
                const double dx = x - e.cx, dy = y - e.cy;
                const double u = (dx * c + dy * s) / e.a;
                const double v = (-dx * s + dy * c) / e.b;
                if (u * u + v * v <= 1.0) img.at(r, cc) += e.intensity;
            }
        }
    }
}

Image make_ellipses_phantom(int size, uint64_t seed) {
    Rng rng(seed);
    std::vector<Ellipse> es;
    const int count = rng.uniform_int(5, 12);
    // dark background with a large bright support ellipse, MR-magnitude style
    es.push_back({rng.uniform(0.2, 0.4), rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                  rng.uniform(0.7, 0.9), rng.uniform(0.7, 0.9), rng.uniform(0.0, 3.14159265358979323846)});
    for (int i = 1; i < count; ++i) {
        es.push_back({rng.uniform(-0.5, 1.0), rng.uniform(-0.55, 0.55), rng.uniform(-0.55, 0.55),
                      rng.uniform(0.08, 0.45), rng.uniform(0.08, 0.45),
                      rng.uniform(0.0, 3.14159265358979323846)});
    }
    Image img(size, size);
    render_ellipses(img, es);
    img.clamp(0.0, 1.0);
    return img;
}

Image make_shepp_logan_like(int size, uint64_t seed) {
    // Toft's high-contrast variant, with a small seeded rotation and
    // intensity jitter so distinct seeds give distinct phantoms.
    static const Ellipse base[] = {
        {1.00, 0.0, 0.0, 0.69, 0.92, 0.0},
        {-0.80, 0.0, -0.0184, 0.6624, 0.8740, 0.0},
        {-0.20, 0.22, 0.0, 0.1100, 0.3100, -0.31415926},
        {-0.20, -0.22, 0.0, 0.1600, 0.4100, 0.31415926},
        {0.10, 0.0, 0.35, 0.2100, 0.2500, 0.0},
        {0.10, 0.0, 0.10, 0.0460, 0.0460, 0.0},
        {0.10, 0.0, -0.10, 0.0460, 0.0460, 0.0},
        {0.10, -0.08, -0.605, 0.0460, 0.0230, 0.0},
        {0.10, 0.0, -0.606, 0.0230, 0.0230, 0.0},
        {0.10, 0.06, -0.605, 0.0230, 0.0460, 0.0},
    };
    Rng rng(seed);
    const double rot = rng.uniform(-0.15, 0.15);
    const double gain = rng.uniform(0.9, 1.0);
    const double cr = std::cos(rot), sr = std::sin(rot);
    std::vector<Ellipse> es;
    for (const Ellipse& e : base) {
        Ellipse t = e;
        t.cx = e.cx * cr - e.cy * sr;
        t.cy = e.cx * sr + e.cy * cr;
        t.phi = e.phi + rot;
        t.intensity = e.intensity * gain;
        es.push_back(t);
    }
    Image img(size, size);
    render_ellipses(img, es);
    img.clamp(0.0, 1.0);
    return img;
}

}  // namespace

PhantomKind phantom_kind_from_string(const std::string& s) {
    if (s == "ellipses") return PhantomKind::ellipses;
    if (s == "shepp_logan" || s == "shepp_logan_like") return PhantomKind::shepp_logan_like;
    throw std::invalid_argument("unknown phantom kind '" + s + "'");
}

Image make_phantom(int size, PhantomKind kind, uint64_t seed) {
    if (size < 32 || !is_pow2(size))
        throw std::invalid_argument("make_phantom: size must be a power of two >= 32, got " +
                                    std::to_string(size));
    return kind == PhantomKind::ellipses ? make_ellipses_phantom(size, seed)
                                         : make_shepp_logan_like(size, seed);
}

double psnr(const Image& ref, const Image& test, double data_range) {
    if (ref.h != test.h || ref.w != test.w)
        throw std::invalid_argument("psnr: shape mismatch " + std::to_string(ref.h) + "x" + std::to_string(ref.w) +
                                    " vs " + std::to_string(test.h) + "x" + std::to_string(test.w));
    if (data_range <= 0.0) data_range = ref.max_value();
    if (data_range <= 0.0) throw std::invalid_argument("psnr: data_range must be positive");
    double mse = 0.0;
    for (int i = 0; i < ref.numel(); ++i) {
        const double d = ref.px[i] - test.px[i];
        mse += d * d;
    }
    mse /= ref.numel();
    if (mse == 0.0) return 100.0;
    return std::min(100.0, 10.0 * std::log10(data_range * data_range / mse));
}

namespace {

constexpr int kSsimWindow = 11;

const std::vector<double>& ssim_window() {
    static const std::vector<double> win = [] {
        const double sigma = 1.5;
        std::vector<double> w(kSsimWindow * kSsimWindow);
        double sum = 0.0;
        for (int r = 0; r < kSsimWindow; ++r)
            for (int c = 0; c < kSsimWindow; ++c) {
                const double dr = r - kSsimWindow / 2, dc = c - kSsimWindow / 2;
                const double v = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
                w[r * kSsimWindow + c] = v;
                sum += v;
            }
        for (double& v : w) v /= sum;
        return w;
    }();
    return win;
}

}  // namespace

double ssim(const Image& ref, const Image& test, double data_range) {
    if (ref.h != test.h || ref.w != test.w)
        throw std::invalid_argument("ssim: shape mismatch");
    if (ref.h < kSsimWindow || ref.w < kSsimWindow)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    if (data_range <= 0.0) data_range = ref.max_value();
    if (data_range <= 0.0) throw std::invalid_argument("ssim: data_range must be positive");
    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    const auto& win = ssim_window();

    double acc = 0.0;
    int count = 0;
    for (int r = 0; r + kSsimWindow <= ref.h; ++r) {
        for (int c = 0; c + kSsimWindow <= ref.w; ++c) {
            double mx = 0.0, my = 0.0;
            for (int i = 0; i < kSsimWindow; ++i)
                for (int j = 0; j < kSsimWindow; ++j) {
                    const double wv = win[i * kSsimWindow + j];
                    mx += wv * ref.at(r + i, c + j);
                    my += wv * test.at(r + i, c + j);
                }
            double vx = 0.0, vy = 0.0, cov = 0.0;
            for (int i = 0; i < kSsimWindow; ++i)
                for (int j = 0; j < kSsimWindow; ++j) {
                    const double wv = win[i * kSsimWindow + j];
                    const double dx = ref.at(r + i, c + j) - mx;
                    const double dy = test.at(r + i, c + j) - my;
                    vx += wv * dx * dx;
                    vy += wv * dy * dy;
                    cov += wv * dx * dy;
                }
            const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
            const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
            acc += num / den;
            ++count;
        }
    }
    return acc / count;
}

void append_eval_csv(const std::string& path, const EvalRecord& rec) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream f(path, std::ios::app);
    if (!f) throw std::runtime_error("append_eval_csv: cannot open " + path);
    if (fresh) f << "task,method,psnr,ssim\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g\n", rec.task.c_str(), rec.method.c_str(), rec.psnr_db,
                  rec.ssim_val);
    f << buf;
    if (!f) throw std::runtime_error("append_eval_csv: write failed for " + path);
}

std::vector<std::pair<Image, ComplexImage>> build_dataset(int n, int size, const SamplingMask& mask,
                                                          uint64_t seed) {
    if (n < 1) throw std::invalid_argument("build_dataset: n must be >= 1");
    std::vector<std::pair<Image, ComplexImage>> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        Image x = make_phantom(size, PhantomKind::ellipses, mix_seed(seed, static_cast<uint64_t>(i)));
        ComplexImage y = simulate_measurement(x, mask, MeasurementSimConfig{0.0, 0});
        out.emplace_back(std::move(x), std::move(y));
    }
    return out;
}

}  // namespace ssmri
