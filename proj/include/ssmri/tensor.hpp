#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ssmri {

/// (channels, height, width). Scalars use {1, 1, 1}.
struct Shape {
    int c = 0, h = 0, w = 0;
    int numel() const { return c * h * w; }
    bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

namespace detail {

/// One node of a dynamically built computation graph. Children hold
/// shared_ptrs to parents, so a graph is reclaimed as soon as the last
/// handle to its root goes away. Parameter nodes outlive graphs because
/// NetParams keeps handles to them.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until backward() reaches this node
    bool requires_grad = false;
    uint64_t id = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // scatters this->grad into parents
};

}  // namespace detail

/// Value-semantic handle to a graph node; copies alias the same node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

    static Tensor constant(Shape s, std::vector<double> v);
    static Tensor param(Shape s, std::vector<double> v);
    static Tensor zeros(Shape s, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    bool requires_grad() const;
    const std::vector<double>& value() const;
    std::vector<double>& mutable_value();  // in-place edits; meant for optimizers and tests
    bool grad_populated() const;
    const std::vector<double>& grad() const;  // throws when unpopulated
    void clear_grad();
    double item() const;  // scalar tensors only
    double at(int c, int h, int w) const;
    uint64_t id() const;
    bool all_finite() const;

    std::shared_ptr<detail::Node> node() const { return node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

// --- differentiable operations -------------------------------------------

/// 2-D convolution. The kernel is packed as (out_ch * in_ch, K, K) with the
/// input-channel index varying fastest: plane oc*in_ch + ic. Bias has shape
/// (out_ch, 1, 1). Output spatial size: floor((H + 2p - K) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              int stride = 1, int padding = 0);

Tensor leaky_relu(const Tensor& x, double slope);

Tensor upsample_nearest(const Tensor& x, int factor);
Tensor downsample_stride(const Tensor& x, int factor);

Tensor concat_channels(const std::vector<Tensor>& xs);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor sum_all(const Tensor& x);

/// Sum of absolute differences; subgradient 0 at exact ties.
Tensor l1_norm(const Tensor& a, const Tensor& b);

/// Multiplies every channel elementwise by a constant H x W plane.
Tensor hadamard_plane(const Tensor& x, const std::vector<double>& plane, int h, int w);

/// Per-channel standardization (zero mean, unit variance; no affine part).
Tensor channel_norm(const Tensor& x, double eps = 1e-5);

/// Reverse-mode sweep from a scalar loss. Populates grad on every
/// requires_grad node reachable from the loss; grads accumulate across
/// calls until cleared.
void backward(const Tensor& loss);

// --- parameters and optimizer --------------------------------------------

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Ordered, named set of trainable tensors with per-parameter Adam moments.
struct NetParams {
    struct Entry {
        std::string name;
        Tensor tensor;
        std::vector<double> m, v;  // Adam first/second moments
    };
    std::vector<Entry> entries;
    long step = 0;

    Entry& add(std::string name, Tensor t);
    Entry* find(const std::string& name);
    const Entry* find(const std::string& name) const;
    size_t total_parameters() const;
    void clear_grads();
};

/// Bias-corrected Adam update over all entries; rejects unpopulated grads
/// and clears them afterwards.
void adam_step(NetParams& params, const AdamConfig& cfg = {});

}  // namespace ssmri
