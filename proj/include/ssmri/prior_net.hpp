#pragma once

#include <cstdint>
#include <string>

#include "ssmri/fourier.hpp"
#include "ssmri/image.hpp"
#include "ssmri/tensor.hpp"

namespace ssmri {

/// What the network sees: the measurement's (re, im) channels, a smooth
/// 2-channel coordinate ramp, or both stacked.
enum class InputMode { measurement, meshgrid, stacked };

InputMode input_mode_from_string(const std::string& s);
std::string to_string(InputMode m);

struct NetConfig {
    int scales = 3;
    int base_channels = 16;
    int kernel_size = 3;  // odd
    double leaky_slope = 0.1;
    InputMode input_mode = InputMode::stacked;
    bool use_norm = false;  // per-channel standardization after each hidden conv
    uint64_t seed = 0;
    int input_channels_override = 0;  // > 0 forces the input width (probing/tests)

    int input_channels() const {
        if (input_channels_override > 0) return input_channels_override;
        return input_mode == InputMode::stacked ? 4 : 2;
    }
    void validate() const;
};

/// Encoder-decoder with skip connections. Encoder stage s: a stride-1 conv
/// to width base*2^s, then a stride-2 conv at the same width; the stride-1
/// output feeds the matching decoder stage. Decoder stage s: nearest x2
/// upsample, concat with the skip, one conv back to width base*2^s. A 1x1
/// linear head maps to a single output channel.
struct PriorNet {
    NetConfig cfg;
    NetParams params;

    int channel_width(int scale) const { return cfg.base_channels << scale; }
};

/// Kernels drawn N(0, 2/fan_in) from Rng(cfg.seed); biases zero.
PriorNet build_network(const NetConfig& cfg);

/// Coordinate-ramp input: channel 0 = row index / (h-1), channel 1 =
/// column index / (w-1), both in [0, 1].
Tensor meshgrid_input(int h, int w);

/// Builds the network input for a mode. y may be null only in meshgrid
/// mode. Channel order for stacked: y re, y im, mesh row, mesh col.
Tensor make_input(InputMode mode, const ComplexImage* y, int h, int w);

/// Same layout, but the measurement channels come from an in-graph
/// 2-channel tensor (used to feed a re-synthesized measurement back in).
Tensor make_input_from(InputMode mode, const Tensor& y2ch);

/// Runs the network; output shape (1, h, w). h and w must be divisible by
/// 2^scales and the channel count must match the config.
Tensor net_forward(const PriorNet& net, const Tensor& input);

/// Plain-text header (config, then one "name c h w" line per tensor),
/// followed by all values as little-endian binary doubles in header order.
void save_checkpoint(const std::string& path, const PriorNet& net);
PriorNet load_checkpoint(const std::string& path);

}  // namespace ssmri
