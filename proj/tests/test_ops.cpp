#include <catch2/catch_amalgamated.hpp>

#include "fan/ops.hpp"
#include "fan/random.hpp"

using namespace fan;

namespace {

Tensor random_tensor(Shape s, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(std::move(s));
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

} // namespace

TEST_CASE("conv2d: 1x1 kernel is pointwise scaling") {
    Var x = make_leaf(Tensor({1, 1, 3, 3}, 1.0f));
    Var w = make_leaf(Tensor({1, 1, 1, 1}, {2.0f}));
    Var y = conv2d(x, w, nullptr, 1, 0);
    REQUIRE(y->value.shape() == Shape{1, 1, 3, 3});
    for (int64_t i = 0; i < 9; ++i) CHECK(y->value[i] == 2.0f);
}

TEST_CASE("conv2d: LeNet first-layer geometry") {
    Var x = make_leaf(Tensor({1, 1, 28, 28}));
    Var w = make_leaf(Tensor({20, 1, 5, 5}));
    CHECK(conv2d(x, w, nullptr, 1, 0)->value.shape() == Shape{1, 20, 24, 24});
}

TEST_CASE("conv2d rejects bad geometry") {
    Var x = make_leaf(Tensor({1, 1, 3, 3}));
    Var w = make_leaf(Tensor({1, 1, 5, 5}));
    CHECK_THROWS_AS(conv2d(x, w, nullptr, 1, 0), DimensionError);
    Var w2 = make_leaf(Tensor({1, 2, 3, 3}));
    CHECK_THROWS_AS(conv2d(x, w2, nullptr, 1, 0), DimensionError);
}

TEST_CASE("conv2d_transpose: single pixel paints the kernel") {
    float a = 1.7f;
    Var x = make_leaf(Tensor({1, 1, 1, 1}, {a}));
    Tensor wt({1, 1, 3, 3});
    for (int i = 0; i < 9; ++i) wt[i] = static_cast<float>(i) - 4.0f;
    Var w = make_leaf(wt);
    Var y = conv2d_transpose(x, w, nullptr, 1, 0);
    REQUIRE(y->value.shape() == Shape{1, 1, 3, 3});
    for (int i = 0; i < 9; ++i) CHECK(y->value[i] == Catch::Approx(a * wt[i]));
}

TEST_CASE("conv2d_transpose forward equals conv2d backward-wrt-input") {
    Rng rng(11);
    // conv: x[2,3,7,7] * w[4,3,3,3] stride 2 pad 1 -> y[2,4,4,4]
    Tensor xt = random_tensor({2, 3, 7, 7}, rng);
    Tensor wt = random_tensor({4, 3, 3, 3}, rng);
    Tensor gt = random_tensor({2, 4, 4, 4}, rng);

    Var x = make_leaf(xt, true);
    Var w = make_leaf(wt);
    Var y = conv2d(x, w, nullptr, 2, 1);
    REQUIRE(y->value.shape() == gt.shape());
    // read out sum(g ⊙ y) so that dL/dx = conv_backward_input(g, w)
    backward(sum_all(mul(y, make_leaf(gt))));

    Var yt = conv2d_transpose(make_leaf(gt), make_leaf(wt), nullptr, 2, 1);
    REQUIRE(yt->value.shape() == xt.shape());
    for (int64_t i = 0; i < xt.size(); ++i)
        CHECK(std::abs(yt->value[i] - x->grad[i]) < 1e-5f);
}

TEST_CASE("maxpool2x2: single window routes gradient to the max") {
    Var x = make_leaf(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}), true);
    Var y = maxpool2x2(x);
    REQUIRE(y->value.size() == 1);
    CHECK(y->value[0] == 4.0f);
    backward(sum_all(y));
    CHECK(x->grad.vec() == std::vector<float>{0, 0, 0, 1});
}

TEST_CASE("maxpool2x2: ties route to the first element in scan order") {
    Var x = make_leaf(Tensor({1, 1, 2, 2}, 3.5f), true);
    Var y = maxpool2x2(x);
    backward(sum_all(y));
    CHECK(x->grad.vec() == std::vector<float>{1, 0, 0, 0});
}

TEST_CASE("upsample_nearest: block replication and counting backward") {
    Var x = make_leaf(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}), true);
    Var y = upsample_nearest(x, 4, 4);
    std::vector<float> expect = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
    CHECK(y->value.vec() == expect);
    backward(sum_all(y));
    for (int i = 0; i < 4; ++i) CHECK(x->grad[i] == 4.0f); // scale^2
}

TEST_CASE("upsample_nearest rejects non-integer scale") {
    Var x = make_leaf(Tensor({1, 1, 3, 3}));
    CHECK_THROWS_AS(upsample_nearest(x, 7, 7), DimensionError);
}

TEST_CASE("batch_norm train mode standardizes per channel") {
    Rng rng(5);
    Var x = make_leaf(random_tensor({8, 3, 4, 4}, rng, -3.0f, 5.0f));
    Var gamma = make_leaf(Tensor({3}, 1.0f));
    Var beta = make_leaf(Tensor({3}));
    Tensor rm({3}), rv({3}, 1.0f);
    Var y = batch_norm(x, gamma, beta, rm, rv, true);

    for (int c = 0; c < 3; ++c) {
        double mean = 0.0, var = 0.0;
        int m = 0;
        for (int n = 0; n < 8; ++n)
            for (int s = 0; s < 16; ++s) {
                mean += y->value[(n * 3 + c) * 16 + s];
                ++m;
            }
        mean /= m;
        for (int n = 0; n < 8; ++n)
            for (int s = 0; s < 16; ++s) {
                double d = y->value[(n * 3 + c) * 16 + s] - mean;
                var += d * d;
            }
        var /= m;
        CHECK(std::abs(mean) < 1e-5);
        CHECK(std::abs(var - 1.0) < 1e-3);
    }
}

TEST_CASE("batch_norm eval mode with unit running stats is the identity") {
    Rng rng(6);
    Tensor xt = random_tensor({4, 2}, rng);
    Var x = make_leaf(xt);
    Var gamma = make_leaf(Tensor({2}, 1.0f));
    Var beta = make_leaf(Tensor({2}));
    Tensor rm({2}), rv({2}, 1.0f);
    Var y = batch_norm(x, gamma, beta, rm, rv, false);
    for (int64_t i = 0; i < xt.size(); ++i)
        CHECK(y->value[i] == Catch::Approx(xt[i]).margin(1e-5));
}

TEST_CASE("batch_norm rejects batch of one in train mode") {
    Var x = make_leaf(Tensor({1, 2}));
    Var gamma = make_leaf(Tensor({2}, 1.0f));
    Var beta = make_leaf(Tensor({2}));
    Tensor rm({2}), rv({2}, 1.0f);
    CHECK_THROWS_AS(batch_norm(x, gamma, beta, rm, rv, true), ConfigError);
}

TEST_CASE("relu basic") {
    Var x = make_leaf(Tensor({3}, {-1, 0, 2}));
    CHECK(relu(x)->value.vec() == std::vector<float>{0, 0, 2});
}

TEST_CASE("softmax of equal logits over 10 classes is uniform") {
    Var x = make_leaf(Tensor({2, 10}, 3.7f));
    Var y = softmax(x);
    for (int64_t i = 0; i < y->value.size(); ++i)
        CHECK(y->value[i] == Catch::Approx(0.1).margin(1e-6));
}

TEST_CASE("softmax rows sum to one under extreme logits") {
    Var x = make_leaf(Tensor({1, 4}, {1000.0f, -1000.0f, 999.0f, 0.0f}));
    Var y = softmax(x);
    double s = 0.0;
    for (int j = 0; j < 4; ++j) s += y->value[j];
    CHECK(std::abs(s - 1.0) < 1e-6);
}

TEST_CASE("concat and split round-trip") {
    Var a = make_leaf(Tensor({2}, {1, 2}));
    Var b = make_leaf(Tensor({1}, {3}));
    Var cat = concat(a, b, 0);
    CHECK(cat->value.vec() == std::vector<float>{1, 2, 3});

    auto parts = split(cat, {2, 1}, 0);
    CHECK(parts[0]->value.vec() == std::vector<float>{1, 2});
    CHECK(parts[1]->value.vec() == std::vector<float>{3});
}

TEST_CASE("split gradient goes only to the consumed slice") {
    Var x = make_leaf(Tensor({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8}), true);
    auto parts = split(x, {1, 3}, 1);
    backward(sum_all(parts[0]));
    CHECK(x->grad.vec() == std::vector<float>{1, 0, 0, 0, 1, 0, 0, 0});
}

TEST_CASE("split size mismatch throws") {
    Var x = make_leaf(Tensor({2, 4}));
    CHECK_THROWS_AS(split(x, {1, 2}, 1), DimensionError);
}
