#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "ssmri/tensor.hpp"

namespace ssmri {

/// Real-valued 2-D image, row-major.
struct Image {
    int h = 0, w = 0;
    std::vector<double> px;

    Image() = default;
    Image(int h_, int w_, double fill = 0.0) : h(h_), w(w_), px(static_cast<size_t>(h_) * w_, fill) {}

    int numel() const { return h * w; }
    double& at(int r, int c) { return px[static_cast<size_t>(r) * w + c]; }
    double at(int r, int c) const { return px[static_cast<size_t>(r) * w + c]; }

    double max_value() const {
        return px.empty() ? 0.0 : *std::max_element(px.begin(), px.end());
    }

    void clamp(double lo, double hi) {
        for (double& v : px) v = std::min(hi, std::max(lo, v));
    }
};

inline Tensor image_to_tensor(const Image& img, bool requires_grad = false) {
    Shape s{1, img.h, img.w};
    return requires_grad ? Tensor::param(s, img.px) : Tensor::constant(s, img.px);
}

/// Takes channel 0 of a tensor as an image.
inline Image tensor_to_image(const Tensor& t) {
    const Shape& s = t.shape();
    Image img(s.h, s.w);
    const auto& v = t.value();
    std::copy(v.begin(), v.begin() + img.numel(), img.px.begin());
    return img;
}

}  // namespace ssmri
