#include "ssmri/prior_net.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ssmri/rng.hpp"

namespace ssmri {

InputMode input_mode_from_string(const std::string& s) {
    if (s == "measurement") return InputMode::measurement;
    if (s == "meshgrid") return InputMode::meshgrid;
    if (s == "stacked") return InputMode::stacked;
    throw std::invalid_argument("unknown input mode '" + s + "'");
}

std::string to_string(InputMode m) {
    switch (m) {
        case InputMode::measurement: return "measurement";
        case InputMode::meshgrid: return "meshgrid";
        case InputMode::stacked: return "stacked";
    }
    throw std::logic_error("bad InputMode");
}

void NetConfig::validate() const {
    if (scales < 1) throw std::invalid_argument("NetConfig: scales must be >= 1");
    if (base_channels < 1) throw std::invalid_argument("NetConfig: base_channels must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw std::invalid_argument("NetConfig: kernel_size must be odd and positive");
    if (leaky_slope < 0.0) throw std::invalid_argument("NetConfig: leaky_slope must be >= 0");
}

namespace {

Tensor init_kernel(Rng& rng, int out_ch, int in_ch, int k) {
    const double stddev = std::sqrt(2.0 / (in_ch * k * k));
    std::vector<double> w(static_cast<size_t>(out_ch) * in_ch * k * k);
    for (double& v : w) v = rng.normal(0.0, stddev);
    return Tensor::param(Shape{out_ch * in_ch, k, k}, std::move(w));
}

Tensor zero_bias(int out_ch) {
    return Tensor::zeros(Shape{out_ch, 1, 1}, /*requires_grad=*/true);
}

void add_conv(PriorNet& net, Rng& rng, const std::string& name, int in_ch, int out_ch, int k) {
    net.params.add(name + ".weight", init_kernel(rng, out_ch, in_ch, k));
    net.params.add(name + ".bias", zero_bias(out_ch));
}

}  // namespace

PriorNet build_network(const NetConfig& cfg) {
    cfg.validate();
    PriorNet net;
    net.cfg = cfg;
    Rng rng(cfg.seed);
    const int k = cfg.kernel_size;

    int in_ch = cfg.input_channels();
    for (int s = 0; s < cfg.scales; ++s) {
        const int width = net.channel_width(s);
        add_conv(net, rng, "enc" + std::to_string(s) + ".conv1", in_ch, width, k);
        add_conv(net, rng, "enc" + std::to_string(s) + ".conv2", width, width, k);
        in_ch = width;
    }
    add_conv(net, rng, "bottleneck", in_ch, in_ch, k);
    for (int s = cfg.scales - 1; s >= 0; --s) {
        const int width = net.channel_width(s);
        // input: the upsampled deeper feature map concatenated with the skip
        const int deeper = s + 1 < cfg.scales ? net.channel_width(s + 1) : net.channel_width(cfg.scales - 1);
        add_conv(net, rng, "dec" + std::to_string(s) + ".conv", deeper + width, width, k);
    }
    add_conv(net, rng, "head", net.channel_width(0), 1, 1);
    return net;
}

Tensor meshgrid_input(int h, int w) {
    if (h < 2 || w < 2) throw std::invalid_argument("meshgrid_input: needs h, w >= 2");
    std::vector<double> v(2 * static_cast<size_t>(h) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            v[static_cast<size_t>(r) * w + c] = static_cast<double>(r) / (h - 1);
            v[static_cast<size_t>(h) * w + static_cast<size_t>(r) * w + c] = static_cast<double>(c) / (w - 1);
        }
    return Tensor::constant(Shape{2, h, w}, std::move(v));
}

Tensor make_input(InputMode mode, const ComplexImage* y, int h, int w) {
    if (mode == InputMode::meshgrid) return meshgrid_input(h, w);
    if (y == nullptr) throw std::invalid_argument("make_input: mode " + to_string(mode) + " needs a measurement");
    if (y->h != h || y->w != w) throw std::invalid_argument("make_input: measurement shape mismatch");
    return make_input_from(mode, complex_to_tensor(*y));
}

Tensor make_input_from(InputMode mode, const Tensor& y2ch) {
    const Shape& s = y2ch.shape();
    if (s.c != 2) throw std::invalid_argument("make_input_from: expected a 2-channel measurement tensor");
    switch (mode) {
        case InputMode::measurement: return y2ch;
        case InputMode::meshgrid: return meshgrid_input(s.h, s.w);
        case InputMode::stacked: return concat_channels({y2ch, meshgrid_input(s.h, s.w)});
    }
    throw std::logic_error("bad InputMode");
}

namespace {

const Tensor& param(const PriorNet& net, const std::string& name) {
    const NetParams::Entry* e = net.params.find(name);
    if (!e) throw std::logic_error("missing network parameter " + name);
    return e->tensor;
}

Tensor conv_block(const PriorNet& net, const std::string& name, const Tensor& x, int stride) {
    const int pad = net.cfg.kernel_size / 2;
    Tensor out = conv2d(x, param(net, name + ".weight"), param(net, name + ".bias"), stride, pad);
    if (net.cfg.use_norm) out = channel_norm(out);
    return leaky_relu(out, net.cfg.leaky_slope);
}

}  // namespace

Tensor net_forward(const PriorNet& net, const Tensor& input) {
    const Shape& s = input.shape();
    if (s.c != net.cfg.input_channels())
        throw std::invalid_argument("net_forward: input has " + std::to_string(s.c) + " channels, config wants " +
                                    std::to_string(net.cfg.input_channels()));
    const int down = 1 << net.cfg.scales;
    if (s.h % down != 0 || s.w % down != 0 || s.h < down || s.w < down)
        throw std::invalid_argument("net_forward: spatial dims must be divisible by 2^scales = " +
                                    std::to_string(down));

    std::vector<Tensor> skips;
    Tensor x = input;
    for (int sc = 0; sc < net.cfg.scales; ++sc) {
        x = conv_block(net, "enc" + std::to_string(sc) + ".conv1", x, 1);
        skips.push_back(x);
        x = conv_block(net, "enc" + std::to_string(sc) + ".conv2", x, 2);
    }
    x = conv_block(net, "bottleneck", x, 1);
    for (int sc = net.cfg.scales - 1; sc >= 0; --sc) {
        x = upsample_nearest(x, 2);
        x = concat_channels({x, skips[sc]});
        x = conv_block(net, "dec" + std::to_string(sc) + ".conv", x, 1);
    }
    return conv2d(x, param(net, "head.weight"), param(net, "head.bias"), 1, 0);
}

void save_checkpoint(const std::string& path, const PriorNet& net) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    char num[64];
    f << "ssmri-checkpoint 1\n";
    f << "scales " << net.cfg.scales << "\n";
    f << "base_channels " << net.cfg.base_channels << "\n";
    f << "kernel_size " << net.cfg.kernel_size << "\n";
    std::snprintf(num, sizeof(num), "%.17g", net.cfg.leaky_slope);
    f << "leaky_slope " << num << "\n";
    f << "input_mode " << to_string(net.cfg.input_mode) << "\n";
    f << "use_norm " << (net.cfg.use_norm ? 1 : 0) << "\n";
    f << "seed " << net.cfg.seed << "\n";
    f << "input_channels " << net.cfg.input_channels() << "\n";
    f << "tensors " << net.params.entries.size() << "\n";
    for (const auto& e : net.params.entries) {
        const Shape& s = e.tensor.shape();
        f << e.name << " " << s.c << " " << s.h << " " << s.w << "\n";
    }
    f << "end\n";
    for (const auto& e : net.params.entries) {
        const auto& v = e.tensor.value();
        f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

PriorNet load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    auto fail = [&](const std::string& why) -> std::runtime_error {
        return std::runtime_error("load_checkpoint: " + path + ": " + why);
    };

    std::string line;
    if (!std::getline(f, line) || line != "ssmri-checkpoint 1") throw fail("bad magic line");
    NetConfig cfg;
    size_t n_tensors = 0;
    while (std::getline(f, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "scales") ls >> cfg.scales;
        else if (key == "base_channels") ls >> cfg.base_channels;
        else if (key == "kernel_size") ls >> cfg.kernel_size;
        else if (key == "leaky_slope") ls >> cfg.leaky_slope;
        else if (key == "input_mode") { std::string m; ls >> m; cfg.input_mode = input_mode_from_string(m); }
        else if (key == "use_norm") { int b = 0; ls >> b; cfg.use_norm = b != 0; }
        else if (key == "seed") ls >> cfg.seed;
        else if (key == "input_channels") {
            int ic = 0;
            ls >> ic;
            // store as an override only when it differs from the mode default
            cfg.input_channels_override = 0;
            if (ic != cfg.input_channels()) cfg.input_channels_override = ic;
        }
        else if (key == "tensors") { ls >> n_tensors; break; }
        else throw fail("unexpected header key '" + key + "'");
        if (!ls) throw fail("malformed header line '" + line + "'");
    }
    if (n_tensors == 0) throw fail("missing tensor table");

    // Rebuild the architecture from the config, then overwrite the values.
    // The tensor table must match it exactly.
    PriorNet net = build_network(cfg);
    if (net.params.entries.size() != n_tensors) throw fail("tensor count does not match the config");
    for (auto& e : net.params.entries) {
        if (!std::getline(f, line)) throw fail("truncated tensor table");
        std::istringstream ls(line);
        std::string name;
        Shape s{};
        ls >> name >> s.c >> s.h >> s.w;
        if (!ls || name != e.name || !(s == e.tensor.shape()))
            throw fail("tensor table entry '" + line + "' does not match " + e.name);
    }
    if (!std::getline(f, line) || line != "end") throw fail("missing end marker");
    for (auto& e : net.params.entries) {
        auto& v = e.tensor.mutable_value();
        f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
        if (f.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double))) throw fail("truncated values");
    }
    return net;
}

}  // namespace ssmri
