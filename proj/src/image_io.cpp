#include "ssmri/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ssmri {

namespace {

static_assert(std::endian::native == std::endian::little,
              "raw float formats assume a little-endian host");

void write_doubles(std::ofstream& f, const std::vector<double>& v) {
    f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& f, std::vector<double>& v) {
    f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!f) throw std::runtime_error("raw read: truncated data");
}

int skip_pnm_whitespace(std::istream& f) {
    int c = f.get();
    while (c == '#' || std::isspace(c)) {
        if (c == '#')
            while (c != '\n' && c != EOF) c = f.get();
        c = f.get();
    }
    return c;
}

int read_pnm_int(std::istream& f) {
    int c = skip_pnm_whitespace(f);
    if (!std::isdigit(c)) throw std::runtime_error("pgm: malformed header");
    int v = 0;
    while (std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = f.get();
    }
    return v;
}

}  // namespace

void write_pgm16(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_pgm16: cannot open " + path);
    f << "P5\n" << img.w << " " << img.h << "\n65535\n";
    std::vector<uint8_t> buf(static_cast<size_t>(img.numel()) * 2);
    for (int i = 0; i < img.numel(); ++i) {
        const double v = std::min(1.0, std::max(0.0, img.px[i]));
        const uint16_t q = static_cast<uint16_t>(std::lround(v * 65535.0));
        buf[2 * i] = static_cast<uint8_t>(q >> 8);  // PGM stores big-endian samples
        buf[2 * i + 1] = static_cast<uint8_t>(q & 0xFF);
    }
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("write_pgm16: write failed for " + path);
}

Image read_pgm16(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_pgm16: cannot open " + path);
    char m0 = 0, m1 = 0;
    f.get(m0);
    f.get(m1);
    if (m0 != 'P' || m1 != '5') throw std::runtime_error("read_pgm16: " + path + " is not a binary PGM");
    const int w = read_pnm_int(f);
    const int h = read_pnm_int(f);
    const int maxval = read_pnm_int(f);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw std::runtime_error("read_pgm16: bad header in " + path);
    // read_pnm_int consumed exactly one whitespace byte after maxval,
    // so the stream sits at the first binary sample.
    Image img(h, w);
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<uint8_t> buf(static_cast<size_t>(img.numel()) * bytes);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("read_pgm16: truncated data in " + path);
    for (int i = 0; i < img.numel(); ++i) {
        const int q = bytes == 2 ? (buf[2 * i] << 8) | buf[2 * i + 1] : buf[i];
        img.px[i] = static_cast<double>(q) / maxval;
    }
    return img;
}

void write_image_raw(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_image_raw: cannot open " + path);
    f << img.h << " " << img.w << "\n";
    write_doubles(f, img.px);
    if (!f) throw std::runtime_error("write_image_raw: write failed for " + path);
}

Image read_image_raw(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_image_raw: cannot open " + path);
    int h = 0, w = 0;
    f >> h >> w;
    f.get();  // newline
    if (h <= 0 || w <= 0) throw std::runtime_error("read_image_raw: bad header in " + path);
    Image img(h, w);
    read_doubles(f, img.px);
    return img;
}

void write_complex_raw(const std::string& path, const ComplexImage& x) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_complex_raw: cannot open " + path);
    f << x.h << " " << x.w << "\n";
    write_doubles(f, x.re);
    write_doubles(f, x.im);
    if (!f) throw std::runtime_error("write_complex_raw: write failed for " + path);
}

ComplexImage read_complex_raw(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_complex_raw: cannot open " + path);
    int h = 0, w = 0;
    f >> h >> w;
    f.get();
    if (h <= 0 || w <= 0) throw std::runtime_error("read_complex_raw: bad header in " + path);
    ComplexImage x(h, w);
    read_doubles(f, x.re);
    read_doubles(f, x.im);
    return x;
}

Image read_image_any(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".pgm") == 0) return read_pgm16(path);
    return read_image_raw(path);
}

}  // namespace ssmri
