#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ssmri/rng.hpp"
#include "ssmri/tensor.hpp"
#include "support/oracles.hpp"

using namespace ssmri;

namespace {

Tensor random_tensor(Shape s, uint64_t seed, bool requires_grad = true, double offset = 0.0) {
    Rng rng(seed);
    std::vector<double> v(s.numel());
    for (double& x : v) x = rng.normal() + offset;
    return requires_grad ? Tensor::param(s, std::move(v)) : Tensor::constant(s, std::move(v));
}

}  // namespace

TEST_CASE("conv2d: 1x1 identity kernel passes the input through") {
    Tensor x = random_tensor({1, 4, 4}, 11, false);
    Tensor k = Tensor::constant({1, 1, 1}, {1.0});
    Tensor b = Tensor::zeros({1, 1, 1});
    Tensor y = conv2d(x, k, b);
    REQUIRE(y.shape() == Shape{1, 4, 4});
    for (int i = 0; i < 16; ++i) CHECK(y.value()[i] == x.value()[i]);
}

TEST_CASE("conv2d: zero kernel yields an all-bias output") {
    Tensor x = random_tensor({2, 4, 4}, 12, false);
    Tensor k = Tensor::zeros({3 * 2, 3, 3});
    Tensor b = Tensor::constant({3, 1, 1}, {0.5, -1.0, 2.0});
    Tensor y = conv2d(x, k, b, 1, 1);
    REQUIRE(y.shape() == Shape{3, 4, 4});
    for (int oc = 0; oc < 3; ++oc)
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) CHECK(y.at(oc, r, c) == b.value()[oc]);
}

TEST_CASE("conv2d matches the nested-loop oracle") {
    struct Case {
        int in_ch, h, w, out_ch, k, stride, padding;
    };
    const Case cases[] = {
        {1, 4, 4, 1, 3, 1, 0},
        {2, 8, 8, 3, 3, 1, 1},
        {3, 8, 8, 2, 5, 2, 2},
        {2, 6, 6, 2, 1, 1, 0},
        {1, 8, 8, 4, 3, 2, 1},
    };
    for (const Case& tc : cases) {
        CAPTURE(tc.in_ch, tc.h, tc.w, tc.out_ch, tc.k, tc.stride, tc.padding);
        Tensor x = random_tensor({tc.in_ch, tc.h, tc.w}, 100 + tc.k, false);
        Tensor k = random_tensor({tc.out_ch * tc.in_ch, tc.k, tc.k}, 200 + tc.k, false);
        Tensor b = random_tensor({tc.out_ch, 1, 1}, 300 + tc.k, false);
        Tensor y = conv2d(x, k, b, tc.stride, tc.padding);
        auto ref = oracles::conv2d_direct(x.value(), tc.in_ch, tc.h, tc.w, k.value(), tc.out_ch, tc.k,
                                          b.value(), tc.stride, tc.padding);
        REQUIRE(y.value().size() == ref.size());
        for (size_t i = 0; i < ref.size(); ++i) CHECK(y.value()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv2d rejects mismatched kernel/input channels") {
    Tensor x = random_tensor({3, 4, 4}, 1, false);
    Tensor k = random_tensor({4, 3, 3}, 2, false);  // 4 planes not divisible by 3 input channels
    Tensor b = Tensor::zeros({1, 1, 1});
    CHECK_THROWS_AS(conv2d(x, k, b), std::invalid_argument);
}

TEST_CASE("conv2d is linear in its input with zero bias") {
    Tensor x1 = random_tensor({2, 6, 6}, 21, false);
    Tensor x2 = random_tensor({2, 6, 6}, 22, false);
    Tensor k = random_tensor({2 * 2, 3, 3}, 23, false);
    Tensor b = Tensor::zeros({2, 1, 1});
    const double a = 1.7, c = -0.3;

    std::vector<double> mix(x1.value().size());
    for (size_t i = 0; i < mix.size(); ++i) mix[i] = a * x1.value()[i] + c * x2.value()[i];
    Tensor lhs = conv2d(Tensor::constant({2, 6, 6}, mix), k, b, 1, 1);
    Tensor y1 = conv2d(x1, k, b, 1, 1);
    Tensor y2 = conv2d(x2, k, b, 1, 1);
    for (size_t i = 0; i < lhs.value().size(); ++i)
        CHECK(lhs.value()[i] == doctest::Approx(a * y1.value()[i] + c * y2.value()[i]).epsilon(1e-12));
}

TEST_CASE("conv2d gradients match finite differences") {
    Tensor x = random_tensor({2, 5, 5}, 31);
    Tensor k = random_tensor({3 * 2, 3, 3}, 32);
    Tensor b = random_tensor({3, 1, 1}, 33);
    auto loss = [&] { return sum_all(mul(conv2d(x, k, b, 2, 1), conv2d(x, k, b, 2, 1))); };
    CHECK(oracles::max_grad_rel_err(loss, {x, k, b}) < 1e-4);
}

TEST_CASE("leaky_relu basics") {
    Tensor x = Tensor::constant({1, 1, 4}, {0.0, 1.0, 2.5, 0.3});
    Tensor y = leaky_relu(x, 0.1);
    for (int i = 0; i < 4; ++i) CHECK(y.value()[i] == x.value()[i]);  // nonnegative input unchanged

    Tensor z = Tensor::constant({1, 1, 3}, {-2.0, 0.5, -0.1});
    Tensor w = leaky_relu(z, 1.0);
    for (int i = 0; i < 3; ++i) CHECK(w.value()[i] == z.value()[i]);  // slope 1 is the identity
}

TEST_CASE("leaky_relu gradient at a negative point equals the slope") {
    Tensor x = Tensor::param({1, 1, 1}, {-2.0});
    auto loss = [&] { return sum_all(leaky_relu(x, 0.2)); };
    Tensor l = loss();
    backward(l);
    CHECK(x.grad()[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(oracles::max_grad_rel_err(loss, {x}) < 1e-4);
}

TEST_CASE("upsample/downsample") {
    Tensor x = random_tensor({2, 8, 8}, 41, false);

    SUBCASE("factor 1 is the identity") {
        CHECK(upsample_nearest(x, 1).value() == x.value());
        CHECK(downsample_stride(x, 1).value() == x.value());
    }
    SUBCASE("2x2 upsampled x2 replicates each value into a block") {
        Tensor s = Tensor::constant({1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
        Tensor u = upsample_nearest(s, 2);
        REQUIRE(u.shape() == Shape{1, 4, 4});
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) CHECK(u.at(0, r, c) == s.at(0, r / 2, c / 2));
    }
    SUBCASE("down(up(x, 2), 2) reproduces x exactly") {
        CHECK(downsample_stride(upsample_nearest(x, 2), 2).value() == x.value());
    }
    SUBCASE("non-divisible downsample is rejected") {
        Tensor odd = random_tensor({1, 5, 6}, 42, false);
        CHECK_THROWS_AS(downsample_stride(odd, 2), std::invalid_argument);
    }
    SUBCASE("gradients match finite differences") {
        Tensor p = random_tensor({1, 4, 4}, 43);
        auto up_loss = [&] { return sum_all(mul(upsample_nearest(p, 2), upsample_nearest(p, 2))); };
        CHECK(oracles::max_grad_rel_err(up_loss, {p}) < 1e-4);
        auto down_loss = [&] { return sum_all(mul(downsample_stride(p, 2), downsample_stride(p, 2))); };
        CHECK(oracles::max_grad_rel_err(down_loss, {p}) < 1e-4);
    }
}

TEST_CASE("l1_norm values and gradients") {
    Tensor a = Tensor::constant({1, 1, 2}, {1.0, -1.0});
    Tensor b = Tensor::zeros({1, 1, 2});
    CHECK(l1_norm(a, a).item() == 0.0);
    CHECK(l1_norm(a, b).item() == 2.0);

    Tensor p = random_tensor({2, 3, 3}, 51, true, 0.5);  // offset keeps entries away from ties
    Tensor q = random_tensor({2, 3, 3}, 52, true, -0.5);
    auto loss = [&] { return l1_norm(p, q); };
    CHECK(oracles::max_grad_rel_err(loss, {p, q}) < 1e-4);

    Tensor bad = Tensor::zeros({1, 2, 2});
    CHECK_THROWS_AS(l1_norm(a, bad), std::invalid_argument);
}

TEST_CASE("elementwise ops and their gradients") {
    Tensor a = random_tensor({2, 3, 3}, 61);
    Tensor b = random_tensor({2, 3, 3}, 62);

    Tensor s = add(a, b);
    Tensor m = mul(a, b);
    Tensor sc = scale(a, -2.5);
    for (int i = 0; i < 18; ++i) {
        CHECK(s.value()[i] == a.value()[i] + b.value()[i]);
        CHECK(m.value()[i] == a.value()[i] * b.value()[i]);
        CHECK(sc.value()[i] == -2.5 * a.value()[i]);
    }
    auto loss = [&] { return sum_all(mul(add(a, b), scale(mul(a, b), 0.5))); };
    CHECK(oracles::max_grad_rel_err(loss, {a, b}) < 1e-4);
}

TEST_CASE("concat_channels stacks values and routes gradients") {
    Tensor a = random_tensor({1, 2, 2}, 71);
    Tensor b = random_tensor({2, 2, 2}, 72);
    Tensor c = concat_channels({a, b});
    REQUIRE(c.shape() == Shape{3, 2, 2});
    for (int i = 0; i < 4; ++i) CHECK(c.value()[i] == a.value()[i]);
    for (int i = 0; i < 8; ++i) CHECK(c.value()[4 + i] == b.value()[i]);

    auto loss = [&] { return sum_all(mul(concat_channels({a, b}), concat_channels({a, b}))); };
    CHECK(oracles::max_grad_rel_err(loss, {a, b}) < 1e-4);
}

TEST_CASE("hadamard_plane multiplies every channel by the plane") {
    Tensor x = random_tensor({2, 2, 2}, 81);
    const std::vector<double> plane{1.0, 0.0, -2.0, 0.5};
    Tensor y = hadamard_plane(x, plane, 2, 2);
    for (int ch = 0; ch < 2; ++ch)
        for (int i = 0; i < 4; ++i) CHECK(y.value()[ch * 4 + i] == x.value()[ch * 4 + i] * plane[i]);

    auto loss = [&] { return sum_all(mul(hadamard_plane(x, plane, 2, 2), hadamard_plane(x, plane, 2, 2))); };
    CHECK(oracles::max_grad_rel_err(loss, {x}) < 1e-4);
}

TEST_CASE("channel_norm standardizes each channel") {
    Tensor x = random_tensor({3, 4, 4}, 91, true, 2.0);
    Tensor y = channel_norm(x);
    for (int ch = 0; ch < 3; ++ch) {
        double mean = 0.0, var = 0.0;
        for (int i = 0; i < 16; ++i) mean += y.value()[ch * 16 + i];
        mean /= 16.0;
        for (int i = 0; i < 16; ++i) {
            const double d = y.value()[ch * 16 + i] - mean;
            var += d * d;
        }
        var /= 16.0;
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps in the denominator shifts it slightly
    }
    auto loss = [&] { return sum_all(mul(channel_norm(x), channel_norm(x))); };
    CHECK(oracles::max_grad_rel_err(loss, {x}) < 1e-4);
}

TEST_CASE("backward: sum of a parameter gives a gradient of ones") {
    Tensor p = random_tensor({2, 3, 3}, 101);
    backward(sum_all(p));
    for (double g : p.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward: a parameter the loss never touches numerically gets a zero gradient") {
    Tensor p = random_tensor({1, 2, 2}, 102);
    // reachable in the graph, but multiplied by an all-zero plane
    backward(sum_all(hadamard_plane(p, {0.0, 0.0, 0.0, 0.0}, 2, 2)));
    REQUIRE(p.grad_populated());
    for (double g : p.grad()) CHECK(g == 0.0);
}

TEST_CASE("backward rejects a non-scalar root") {
    Tensor p = random_tensor({1, 2, 2}, 103);
    CHECK_THROWS_AS(backward(add(p, p)), std::invalid_argument);
}

TEST_CASE("backward accumulates until cleared") {
    Tensor p = random_tensor({1, 1, 2}, 104);
    backward(sum_all(p));
    backward(sum_all(p));
    for (double g : p.grad()) CHECK(g == 2.0);
    p.clear_grad();
    CHECK_FALSE(p.grad_populated());
}

TEST_CASE("two-layer network gradients match finite differences") {
    Tensor x = random_tensor({1, 6, 6}, 111, false);
    Tensor k1 = random_tensor({2, 3, 3}, 112);
    Tensor b1 = random_tensor({2, 1, 1}, 113);
    Tensor k2 = random_tensor({1 * 2, 3, 3}, 114);
    Tensor b2 = random_tensor({1, 1, 1}, 115);
    Tensor target = random_tensor({1, 6, 6}, 116, false, 3.0);
    auto loss = [&] {
        Tensor h1 = leaky_relu(conv2d(x, k1, b1, 1, 1), 0.1);
        Tensor h2 = conv2d(h1, k2, b2, 1, 1);
        return l1_norm(h2, target);
    };
    CHECK(oracles::max_grad_rel_err(loss, {k1, b1, k2, b2}) < 1e-4);
}

TEST_CASE("gradients are bit-deterministic") {
    auto run = [] {
        Tensor x = random_tensor({2, 8, 8}, 121, false);
        Tensor k = random_tensor({2 * 2, 3, 3}, 122);
        Tensor b = random_tensor({2, 1, 1}, 123);
        Tensor t = random_tensor({2, 8, 8}, 124, false);
        backward(l1_norm(leaky_relu(conv2d(x, k, b, 1, 1), 0.1), t));
        return std::make_pair(k.grad(), b.grad());
    };
    auto [kg1, bg1] = run();
    auto [kg2, bg2] = run();
    CHECK(kg1 == kg2);
    CHECK(bg1 == bg2);
}

TEST_CASE("adam: zero gradients from a fresh state leave parameters unchanged") {
    NetParams params;
    Tensor p = random_tensor({1, 2, 2}, 131);
    params.add("p", p);
    const std::vector<double> before = p.value();
    backward(sum_all(hadamard_plane(p, {0.0, 0.0, 0.0, 0.0}, 2, 2)));  // exactly-zero grads
    adam_step(params);
    CHECK(p.value() == before);
    CHECK(params.step == 1);
}

TEST_CASE("adam: 100 steps on theta^2 match the scalar oracle to 1e-12") {
    NetParams params;
    Tensor theta = Tensor::param({1, 1, 1}, {1.0});
    params.add("theta", theta);
    AdamConfig cfg;  // library defaults
    CHECK(cfg.lr == 1e-4);

    oracles::ScalarAdam ref;
    double ref_theta = 1.0;
    for (int t = 0; t < 100; ++t) {
        backward(mul(theta, theta));
        adam_step(params, cfg);
        ref_theta = ref.step(ref_theta, 2.0 * ref_theta, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
        // note: the oracle's gradient uses its own trajectory, so compare each step
        REQUIRE(theta.value()[0] == doctest::Approx(ref_theta).epsilon(1e-12));
    }
    CHECK(params.step == 100);
}

TEST_CASE("adam rejects unpopulated gradients") {
    NetParams params;
    params.add("p", random_tensor({1, 2, 2}, 141));
    CHECK_THROWS_AS(adam_step(params), std::runtime_error);
}

TEST_CASE("adam clears gradients after stepping") {
    NetParams params;
    Tensor p = random_tensor({1, 1, 2}, 151);
    params.add("p", p);
    backward(sum_all(p));
    adam_step(params);
    CHECK_FALSE(p.grad_populated());
}

TEST_CASE("forward values stay finite on finite inputs") {
    Tensor x = random_tensor({2, 8, 8}, 161, false, 10.0);
    Tensor k = random_tensor({2 * 2, 3, 3}, 162);
    Tensor b = random_tensor({2, 1, 1}, 163);
    Tensor y = channel_norm(leaky_relu(conv2d(x, k, b, 1, 1), 0.01));
    CHECK(y.all_finite());
}
