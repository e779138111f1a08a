#include "ssmri/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ssmri {

namespace {

std::atomic<uint64_t> g_next_node_id{1};

std::shared_ptr<detail::Node> make_node(Shape s, std::vector<double> v, bool requires_grad) {
    auto n = std::make_shared<detail::Node>();
    n->shape = s;
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    n->id = g_next_node_id.fetch_add(1, std::memory_order_relaxed);
    return n;
}

void check_shape(const Shape& s, const char* who) {
    if (s.c < 1 || s.h < 1 || s.w < 1)
        throw std::invalid_argument(std::string(who) + ": invalid shape " + to_string(s));
}

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
    throw std::invalid_argument(std::string(op) + ": " + detail);
}

}  // namespace

std::string to_string(const Shape& s) {
    std::ostringstream os;
    os << "(" << s.c << ", " << s.h << ", " << s.w << ")";
    return os.str();
}

// --- Tensor ----------------------------------------------------------------

Tensor Tensor::constant(Shape s, std::vector<double> v) {
    check_shape(s, "Tensor::constant");
    if (static_cast<int>(v.size()) != s.numel())
        shape_error("Tensor::constant", "value size does not match shape " + to_string(s));
    return Tensor(make_node(s, std::move(v), false));
}

Tensor Tensor::param(Shape s, std::vector<double> v) {
    check_shape(s, "Tensor::param");
    if (static_cast<int>(v.size()) != s.numel())
        shape_error("Tensor::param", "value size does not match shape " + to_string(s));
    return Tensor(make_node(s, std::move(v), true));
}

Tensor Tensor::zeros(Shape s, bool requires_grad) {
    check_shape(s, "Tensor::zeros");
    return Tensor(make_node(s, std::vector<double>(s.numel(), 0.0), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor(make_node(Shape{1, 1, 1}, std::vector<double>{v}, requires_grad));
}

const Shape& Tensor::shape() const { return node_->shape; }
bool Tensor::requires_grad() const { return node_->requires_grad; }
const std::vector<double>& Tensor::value() const { return node_->value; }
std::vector<double>& Tensor::mutable_value() { return node_->value; }
bool Tensor::grad_populated() const { return !node_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
    if (node_->grad.empty())
        throw std::runtime_error("Tensor::grad: gradient not populated (run backward first)");
    return node_->grad;
}

void Tensor::clear_grad() { node_->grad.clear(); }

double Tensor::item() const {
    if (node_->shape.numel() != 1)
        throw std::invalid_argument("Tensor::item: tensor is not scalar, shape " + to_string(node_->shape));
    return node_->value[0];
}

double Tensor::at(int c, int h, int w) const {
    const Shape& s = node_->shape;
    return node_->value[(static_cast<size_t>(c) * s.h + h) * s.w + w];
}

uint64_t Tensor::id() const { return node_->id; }

bool Tensor::all_finite() const {
    for (double v : node_->value)
        if (!std::isfinite(v)) return false;
    return true;
}

// --- convolution ------------------------------------------------------------

namespace {

/// Copies (C, H, W) into a zero-padded (C, H+2p, W+2p) buffer.
void pad_into(const std::vector<double>& src, int c, int h, int w, int p, std::vector<double>& dst) {
    const int ph = h + 2 * p, pw = w + 2 * p;
    dst.assign(static_cast<size_t>(c) * ph * pw, 0.0);
    for (int ic = 0; ic < c; ++ic) {
        const double* s = src.data() + static_cast<size_t>(ic) * h * w;
        double* d = dst.data() + static_cast<size_t>(ic) * ph * pw + static_cast<size_t>(p) * pw + p;
        for (int r = 0; r < h; ++r) std::memcpy(d + static_cast<size_t>(r) * pw, s + static_cast<size_t>(r) * w, sizeof(double) * w);
    }
}

struct ConvDims {
    int cin, hin, win, cout, k, stride, pad, hout, wout, phin, pwin;
};

ConvDims conv_dims(const Shape& in, const Shape& ker, const Shape& bias, int stride, int padding) {
    if (stride < 1) shape_error("conv2d", "stride must be >= 1");
    if (padding < 0) shape_error("conv2d", "padding must be >= 0");
    if (ker.h != ker.w) shape_error("conv2d", "kernel must be square, got " + to_string(ker));
    if (ker.c % in.c != 0)
        shape_error("conv2d", "kernel planes " + std::to_string(ker.c) + " not a multiple of input channels " +
                                  std::to_string(in.c) + " (kernel in-channels must equal input channels)");
    ConvDims d;
    d.cin = in.c;
    d.hin = in.h;
    d.win = in.w;
    d.k = ker.h;
    d.cout = ker.c / in.c;
    d.stride = stride;
    d.pad = padding;
    d.hout = (in.h + 2 * padding - d.k) / stride + 1;
    d.wout = (in.w + 2 * padding - d.k) / stride + 1;
    d.phin = in.h + 2 * padding;
    d.pwin = in.w + 2 * padding;
    if (in.h + 2 * padding < d.k || in.w + 2 * padding < d.k)
        shape_error("conv2d", "kernel " + std::to_string(d.k) + "x" + std::to_string(d.k) +
                                  " larger than padded input " + to_string(in));
    if (bias.c != d.cout || bias.h != 1 || bias.w != 1)
        shape_error("conv2d", "bias shape " + to_string(bias) + " does not match out channels " +
                                  std::to_string(d.cout));
    return d;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride, int padding) {
    auto in = input.node();
    auto ker = kernel.node();
    auto b = bias.node();
    const ConvDims d = conv_dims(in->shape, ker->shape, b->shape, stride, padding);

    std::vector<double> padded;
    pad_into(in->value, d.cin, d.hin, d.win, d.pad, padded);

    std::vector<double> out(static_cast<size_t>(d.cout) * d.hout * d.wout);
    for (int oc = 0; oc < d.cout; ++oc) {
        double* op = out.data() + static_cast<size_t>(oc) * d.hout * d.wout;
        const double bv = b->value[oc];
        for (int i = 0; i < d.hout * d.wout; ++i) op[i] = bv;
        for (int ic = 0; ic < d.cin; ++ic) {
            const double* ip = padded.data() + static_cast<size_t>(ic) * d.phin * d.pwin;
            const double* kp = ker->value.data() + (static_cast<size_t>(oc) * d.cin + ic) * d.k * d.k;
            for (int kh = 0; kh < d.k; ++kh) {
                for (int kw = 0; kw < d.k; ++kw) {
                    const double kv = kp[kh * d.k + kw];
                    if (kv == 0.0) continue;
                    for (int oh = 0; oh < d.hout; ++oh) {
                        const double* irow = ip + static_cast<size_t>(oh * d.stride + kh) * d.pwin + kw;
                        double* orow = op + static_cast<size_t>(oh) * d.wout;
                        if (d.stride == 1) {
                            for (int ow = 0; ow < d.wout; ++ow) orow[ow] += kv * irow[ow];
                        } else {
                            for (int ow = 0; ow < d.wout; ++ow) orow[ow] += kv * irow[ow * d.stride];
                        }
                    }
                }
            }
        }
    }

    auto node = make_node(Shape{d.cout, d.hout, d.wout}, std::move(out),
                          in->requires_grad || ker->requires_grad || b->requires_grad);
    if (node->requires_grad) {
        node->parents = {in, ker, b};
        node->backprop = [in, ker, b, d](detail::Node& self) {
            const std::vector<double>& g = self.grad;
            if (b->requires_grad) {
                for (int oc = 0; oc < d.cout; ++oc) {
                    const double* gp = g.data() + static_cast<size_t>(oc) * d.hout * d.wout;
                    double acc = 0.0;
                    for (int i = 0; i < d.hout * d.wout; ++i) acc += gp[i];
                    b->grad[oc] += acc;
                }
            }
            if (ker->requires_grad) {
                std::vector<double> padded;
                pad_into(in->value, d.cin, d.hin, d.win, d.pad, padded);
                std::vector<double> acc(d.wout);
                for (int oc = 0; oc < d.cout; ++oc) {
                    const double* gp = g.data() + static_cast<size_t>(oc) * d.hout * d.wout;
                    for (int ic = 0; ic < d.cin; ++ic) {
                        const double* ip = padded.data() + static_cast<size_t>(ic) * d.phin * d.pwin;
                        double* kg = ker->grad.data() + (static_cast<size_t>(oc) * d.cin + ic) * d.k * d.k;
                        for (int kh = 0; kh < d.k; ++kh) {
                            for (int kw = 0; kw < d.k; ++kw) {
                                std::fill(acc.begin(), acc.end(), 0.0);
                                for (int oh = 0; oh < d.hout; ++oh) {
                                    const double* irow = ip + static_cast<size_t>(oh * d.stride + kh) * d.pwin + kw;
                                    const double* grow = gp + static_cast<size_t>(oh) * d.wout;
                                    if (d.stride == 1) {
                                        for (int ow = 0; ow < d.wout; ++ow) acc[ow] += grow[ow] * irow[ow];
                                    } else {
                                        for (int ow = 0; ow < d.wout; ++ow) acc[ow] += grow[ow] * irow[ow * d.stride];
                                    }
                                }
                                double s = 0.0;
                                for (int ow = 0; ow < d.wout; ++ow) s += acc[ow];
                                kg[kh * d.k + kw] += s;
                            }
                        }
                    }
                }
            }
            if (in->requires_grad) {
                std::vector<double> gpad(static_cast<size_t>(d.cin) * d.phin * d.pwin, 0.0);
                for (int oc = 0; oc < d.cout; ++oc) {
                    const double* gp = g.data() + static_cast<size_t>(oc) * d.hout * d.wout;
                    for (int ic = 0; ic < d.cin; ++ic) {
                        double* gip = gpad.data() + static_cast<size_t>(ic) * d.phin * d.pwin;
                        const double* kp = ker->value.data() + (static_cast<size_t>(oc) * d.cin + ic) * d.k * d.k;
                        for (int kh = 0; kh < d.k; ++kh) {
                            for (int kw = 0; kw < d.k; ++kw) {
                                const double kv = kp[kh * d.k + kw];
                                if (kv == 0.0) continue;
                                for (int oh = 0; oh < d.hout; ++oh) {
                                    double* girow = gip + static_cast<size_t>(oh * d.stride + kh) * d.pwin + kw;
                                    const double* grow = gp + static_cast<size_t>(oh) * d.wout;
                                    if (d.stride == 1) {
                                        for (int ow = 0; ow < d.wout; ++ow) girow[ow] += kv * grow[ow];
                                    } else {
                                        for (int ow = 0; ow < d.wout; ++ow) girow[ow * d.stride] += kv * grow[ow];
                                    }
                                }
                            }
                        }
                    }
                }
                // crop padding back off
                for (int ic = 0; ic < d.cin; ++ic) {
                    const double* src = gpad.data() + static_cast<size_t>(ic) * d.phin * d.pwin +
                                        static_cast<size_t>(d.pad) * d.pwin + d.pad;
                    double* dst = in->grad.data() + static_cast<size_t>(ic) * d.hin * d.win;
                    for (int r = 0; r < d.hin; ++r)
                        for (int c = 0; c < d.win; ++c) dst[static_cast<size_t>(r) * d.win + c] += src[static_cast<size_t>(r) * d.pwin + c];
                }
            }
        };
    }
    return Tensor(node);
}

// --- pointwise and structural ops -------------------------------------------

Tensor leaky_relu(const Tensor& x, double slope) {
    if (slope < 0.0 || slope > 1.0)
        throw std::invalid_argument("leaky_relu: slope must be in [0, 1]");
    auto xn = x.node();
    std::vector<double> out(xn->value.size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double v = xn->value[i];
        out[i] = v >= 0.0 ? v : slope * v;
    }
    auto node = make_node(xn->shape, std::move(out), xn->requires_grad);
    if (node->requires_grad) {
        node->parents = {xn};
        node->backprop = [xn, slope](detail::Node& self) {
            for (size_t i = 0; i < self.grad.size(); ++i)
                xn->grad[i] += self.grad[i] * (xn->value[i] >= 0.0 ? 1.0 : slope);
        };
    }
    return Tensor(node);
}

Tensor upsample_nearest(const Tensor& x, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample_nearest: factor must be >= 1");
    auto xn = x.node();
    const Shape s = xn->shape;
    const Shape os{s.c, s.h * factor, s.w * factor};
    std::vector<double> out(static_cast<size_t>(os.numel()));
    for (int c = 0; c < s.c; ++c)
        for (int r = 0; r < os.h; ++r) {
            const double* srow = xn->value.data() + (static_cast<size_t>(c) * s.h + r / factor) * s.w;
            double* drow = out.data() + (static_cast<size_t>(c) * os.h + r) * os.w;
            for (int cc = 0; cc < os.w; ++cc) drow[cc] = srow[cc / factor];
        }
    auto node = make_node(os, std::move(out), xn->requires_grad);
    if (node->requires_grad) {
        node->parents = {xn};
        node->backprop = [xn, s, os, factor](detail::Node& self) {
            for (int c = 0; c < s.c; ++c)
                for (int r = 0; r < os.h; ++r) {
                    const double* grow = self.grad.data() + (static_cast<size_t>(c) * os.h + r) * os.w;
                    double* drow = xn->grad.data() + (static_cast<size_t>(c) * s.h + r / factor) * s.w;
                    for (int cc = 0; cc < os.w; ++cc) drow[cc / factor] += grow[cc];
                }
        };
    }
    return Tensor(node);
}

Tensor downsample_stride(const Tensor& x, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample_stride: factor must be >= 1");
    auto xn = x.node();
    const Shape s = xn->shape;
    if (s.h % factor != 0 || s.w % factor != 0)
        throw std::invalid_argument("downsample_stride: dims " + to_string(s) + " not divisible by factor " +
                                    std::to_string(factor));
    const Shape os{s.c, s.h / factor, s.w / factor};
    std::vector<double> out(static_cast<size_t>(os.numel()));
    for (int c = 0; c < os.c; ++c)
        for (int r = 0; r < os.h; ++r)
            for (int cc = 0; cc < os.w; ++cc)
                out[(static_cast<size_t>(c) * os.h + r) * os.w + cc] =
                    xn->value[(static_cast<size_t>(c) * s.h + r * factor) * s.w + cc * factor];
    auto node = make_node(os, std::move(out), xn->requires_grad);
    if (node->requires_grad) {
        node->parents = {xn};
        node->backprop = [xn, s, os, factor](detail::Node& self) {
            for (int c = 0; c < os.c; ++c)
                for (int r = 0; r < os.h; ++r)
                    for (int cc = 0; cc < os.w; ++cc)
                        xn->grad[(static_cast<size_t>(c) * s.h + r * factor) * s.w + cc * factor] +=
                            self.grad[(static_cast<size_t>(c) * os.h + r) * os.w + cc];
        };
    }
    return Tensor(node);
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_channels: empty input list");
    const Shape first = xs[0].shape();
    int total_c = 0;
    bool any_grad = false;
    for (const Tensor& t : xs) {
        const Shape& s = t.shape();
        if (s.h != first.h || s.w != first.w)
            shape_error("concat_channels", "spatial mismatch: " + to_string(first) + " vs " + to_string(s));
        total_c += s.c;
        any_grad = any_grad || t.requires_grad();
    }
    const Shape os{total_c, first.h, first.w};
    std::vector<double> out;
    out.reserve(os.numel());
    for (const Tensor& t : xs) out.insert(out.end(), t.value().begin(), t.value().end());

    auto node = make_node(os, std::move(out), any_grad);
    if (any_grad) {
        std::vector<std::shared_ptr<detail::Node>> parents;
        for (const Tensor& t : xs) parents.push_back(t.node());
        node->parents = parents;
        node->backprop = [parents](detail::Node& self) {
            size_t off = 0;
            for (const auto& p : parents) {
                const size_t n = p->value.size();
                if (p->requires_grad)
                    for (size_t i = 0; i < n; ++i) p->grad[i] += self.grad[off + i];
                off += n;
            }
        };
    }
    return Tensor(node);
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!(a.shape() == b.shape()))
        shape_error(op, "shape mismatch: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    auto an = a.node(), bn = b.node();
    std::vector<double> out(an->value.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = an->value[i] + bn->value[i];
    auto node = make_node(an->shape, std::move(out), an->requires_grad || bn->requires_grad);
    if (node->requires_grad) {
        node->parents = {an, bn};
        node->backprop = [an, bn](detail::Node& self) {
            if (an->requires_grad)
                for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
            if (bn->requires_grad)
                for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
        };
    }
    return Tensor(node);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    auto an = a.node(), bn = b.node();
    std::vector<double> out(an->value.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = an->value[i] * bn->value[i];
    auto node = make_node(an->shape, std::move(out), an->requires_grad || bn->requires_grad);
    if (node->requires_grad) {
        node->parents = {an, bn};
        node->backprop = [an, bn](detail::Node& self) {
            if (an->requires_grad)
                for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * bn->value[i];
            if (bn->requires_grad)
                for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i] * an->value[i];
        };
    }
    return Tensor(node);
}

Tensor scale(const Tensor& a, double s) {
    auto an = a.node();
    std::vector<double> out(an->value.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = an->value[i] * s;
    auto node = make_node(an->shape, std::move(out), an->requires_grad);
    if (node->requires_grad) {
        node->parents = {an};
        node->backprop = [an, s](detail::Node& self) {
            for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * s;
        };
    }
    return Tensor(node);
}

Tensor sum_all(const Tensor& x) {
    auto xn = x.node();
    double acc = 0.0;
    for (double v : xn->value) acc += v;
    auto node = make_node(Shape{1, 1, 1}, {acc}, xn->requires_grad);
    if (node->requires_grad) {
        node->parents = {xn};
        node->backprop = [xn](detail::Node& self) {
            const double g = self.grad[0];
            for (double& gv : xn->grad) gv += g;
        };
    }
    return Tensor(node);
}

Tensor l1_norm(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "l1_norm");
    auto an = a.node(), bn = b.node();
    double acc = 0.0;
    for (size_t i = 0; i < an->value.size(); ++i) acc += std::abs(an->value[i] - bn->value[i]);
    auto node = make_node(Shape{1, 1, 1}, {acc}, an->requires_grad || bn->requires_grad);
    if (node->requires_grad) {
        node->parents = {an, bn};
        node->backprop = [an, bn](detail::Node& self) {
            const double g = self.grad[0];
            for (size_t i = 0; i < an->value.size(); ++i) {
                const double d = an->value[i] - bn->value[i];
                const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                if (an->requires_grad) an->grad[i] += g * s;
                if (bn->requires_grad) bn->grad[i] -= g * s;
            }
        };
    }
    return Tensor(node);
}

Tensor hadamard_plane(const Tensor& x, const std::vector<double>& plane, int h, int w) {
    auto xn = x.node();
    const Shape s = xn->shape;
    if (s.h != h || s.w != w || static_cast<int>(plane.size()) != h * w)
        shape_error("hadamard_plane", "plane " + std::to_string(h) + "x" + std::to_string(w) +
                                          " does not match tensor " + to_string(s));
    std::vector<double> out(xn->value.size());
    const size_t hw = static_cast<size_t>(h) * w;
    for (int c = 0; c < s.c; ++c)
        for (size_t i = 0; i < hw; ++i) out[c * hw + i] = xn->value[c * hw + i] * plane[i];
    auto node = make_node(s, std::move(out), xn->requires_grad);
    if (node->requires_grad) {
        node->parents = {xn};
        node->backprop = [xn, plane, hw, s](detail::Node& self) {
            for (int c = 0; c < s.c; ++c)
                for (size_t i = 0; i < hw; ++i) xn->grad[c * hw + i] += self.grad[c * hw + i] * plane[i];
        };
    }
    return Tensor(node);
}

Tensor channel_norm(const Tensor& x, double eps) {
    auto xn = x.node();
    const Shape s = xn->shape;
    const size_t hw = static_cast<size_t>(s.h) * s.w;
    std::vector<double> out(xn->value.size());
    std::vector<double> inv_sigma(s.c);
    for (int c = 0; c < s.c; ++c) {
        const double* xp = xn->value.data() + c * hw;
        double mean = 0.0;
        for (size_t i = 0; i < hw; ++i) mean += xp[i];
        mean /= static_cast<double>(hw);
        double var = 0.0;
        for (size_t i = 0; i < hw; ++i) {
            const double d = xp[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(hw);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_sigma[c] = is;
        double* op = out.data() + c * hw;
        for (size_t i = 0; i < hw; ++i) op[i] = (xp[i] - mean) * is;
    }
    auto node = make_node(s, std::move(out), xn->requires_grad);
    if (node->requires_grad) {
        node->parents = {xn};
        node->backprop = [xn, s, hw, inv_sigma](detail::Node& self) {
            const double n = static_cast<double>(hw);
            for (int c = 0; c < s.c; ++c) {
                const double* g = self.grad.data() + c * hw;
                const double* y = self.value.data() + c * hw;
                double gsum = 0.0, gysum = 0.0;
                for (size_t i = 0; i < hw; ++i) {
                    gsum += g[i];
                    gysum += g[i] * y[i];
                }
                const double gmean = gsum / n, gymean = gysum / n;
                double* gx = xn->grad.data() + c * hw;
                for (size_t i = 0; i < hw; ++i) gx[i] += inv_sigma[c] * (g[i] - gmean - y[i] * gymean);
            }
        };
    }
    return Tensor(node);
}

// --- backward ---------------------------------------------------------------

void backward(const Tensor& loss) {
    if (!loss.defined()) throw std::invalid_argument("backward: undefined tensor");
    auto root = loss.node();
    if (root->shape.numel() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got shape " + to_string(root->shape));
    if (!std::isfinite(root->value[0]))
        throw std::runtime_error("backward: loss value is not finite");
    if (!root->requires_grad) return;

    // Post-order DFS over the requires_grad subgraph; traversal order depends
    // only on graph structure, so accumulation order is deterministic.
    std::vector<detail::Node*> order;
    std::unordered_set<const detail::Node*> visited;
    struct Frame {
        detail::Node* n;
        size_t next;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.n->parents.size()) {
            detail::Node* p = f.n->parents[f.next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.n);
            stack.pop_back();
        }
    }

    for (detail::Node* n : order)
        if (n->grad.empty()) n->grad.assign(n->shape.numel(), 0.0);
    root->grad[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop(**it);
}

// --- NetParams / Adam ---------------------------------------------------------

NetParams::Entry& NetParams::add(std::string name, Tensor t) {
    entries.push_back(Entry{std::move(name), std::move(t), {}, {}});
    return entries.back();
}

NetParams::Entry* NetParams::find(const std::string& name) {
    for (auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

const NetParams::Entry* NetParams::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

size_t NetParams::total_parameters() const {
    size_t n = 0;
    for (const auto& e : entries) n += e.tensor.value().size();
    return n;
}

void NetParams::clear_grads() {
    for (auto& e : entries) e.tensor.clear_grad();
}

void adam_step(NetParams& params, const AdamConfig& cfg) {
    for (const auto& e : params.entries)
        if (!e.tensor.grad_populated())
            throw std::runtime_error("adam_step: gradient not populated for parameter '" + e.name + "'");

    params.step += 1;
    const double t = static_cast<double>(params.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    for (auto& e : params.entries) {
        auto node = e.tensor.node();
        const size_t n = node->value.size();
        if (e.m.empty()) {
            e.m.assign(n, 0.0);
            e.v.assign(n, 0.0);
        }
        for (size_t i = 0; i < n; ++i) {
            const double g = node->grad[i];
            e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * g;
            e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = e.m[i] / bc1;
            const double vhat = e.v[i] / bc2;
            node->value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        node->grad.clear();
    }
}

}  // namespace ssmri
