#pragma once

#include <string>

#include "ssmri/fourier.hpp"
#include "ssmri/image.hpp"

namespace ssmri {

/// 16-bit binary PGM (P5, maxval 65535). Values are clamped to [0, 1]
/// before quantization.
void write_pgm16(const std::string& path, const Image& img);

/// Reads 8- or 16-bit binary PGM back to [0, 1].
Image read_pgm16(const std::string& path);

/// Raw image: one text header line "H W\n" followed by H*W little-endian
/// 64-bit floats.
void write_image_raw(const std::string& path, const Image& img);
Image read_image_raw(const std::string& path);

/// Raw complex measurement: header "H W\n" followed by two raw planes
/// (real then imaginary), each H*W little-endian 64-bit floats.
void write_complex_raw(const std::string& path, const ComplexImage& x);
ComplexImage read_complex_raw(const std::string& path);

/// Dispatch on extension: .pgm or raw.
Image read_image_any(const std::string& path);

}  // namespace ssmri
