#include <catch2/catch_amalgamated.hpp>

#include "advface/core/adam.hpp"
#include "advface/core/checkpoint.hpp"
#include "advface/core/image.hpp"
#include "support/gradcheck.hpp"

using namespace advface;
using nn::Tensor;
using nn::Var;

namespace {

Tensor<double> randn(std::vector<int> shape, uint64_t seed, double std = 1.0) {
    Tensor<double> t(std::move(shape));
    nn::Rng rng(seed);
    nn::fill_normal(t, rng, std);
    return t;
}

}  // namespace

TEST_CASE("tensor basics") {
    Tensor<float> t({2, 3});
    REQUIRE(t.numel() == 6);
    t.at(1, 2) = 5.0f;
    REQUIRE(t[5] == 5.0f);
    REQUIRE_THROWS_AS(t.reshaped({4, 2}), Error);
    auto r = t.reshaped({3, 2});
    REQUIRE(r.at(2, 1) == 5.0f);
}

TEST_CASE("elementwise op gradients") {
    auto a = nn::leaf(randn({3, 4}, 1));
    auto b = nn::leaf(randn({3, 4}, 2));

    auto check = [&](const char* what, std::function<Var<double>()> f) {
        auto r = gradcheck::check<double>({a, b}, f);
        INFO(what);
        CHECK(r.rel_error < 1e-7);
    };
    check("add", [&] { return nn::mean_all(nn::add(a, b)); });
    check("sub", [&] { return nn::mean_all(nn::sub(a, b)); });
    check("mul", [&] { return nn::mean_all(nn::mul(a, b)); });
    check("scale", [&] { return nn::mean_all(nn::scale(a, 2.5)); });
    check("tanh", [&] { return nn::mean_all(nn::tanh_op(a)); });
    check("square-self", [&] { return nn::mean_all(nn::mul(a, a)); });
}

TEST_CASE("relu and clip gradients away from kinks") {
    // Keep inputs off the nondifferentiable points.
    Tensor<double> v({20});
    for (int i = 0; i < 20; ++i) v[i] = (i % 2 ? 1 : -1) * (0.3 + 0.05 * i);
    auto a = nn::leaf(v);
    auto r1 = gradcheck::check<double>({a}, [&] { return nn::mean_all(nn::relu(a)); });
    CHECK(r1.rel_error < 1e-7);
    Tensor<double> u({20});
    for (int i = 0; i < 20; ++i) u[i] = -0.53 + 0.1 * i;  // spans outside [0,1]
    auto c = nn::leaf(u);
    auto r2 = gradcheck::check<double>({c}, [&] { return nn::mean_all(nn::clip01(c)); });
    CHECK(r2.rel_error < 1e-7);
}

TEST_CASE("clip01 subgradient convention") {
    Tensor<double> v({3});
    v[0] = -0.2;
    v[1] = 0.5;
    v[2] = 1.3;
    auto a = nn::leaf(v);
    auto y = nn::clip01(a);
    REQUIRE(y->value[0] == 0.0);
    REQUIRE(y->value[1] == 0.5);
    REQUIRE(y->value[2] == 1.0);
    auto loss = nn::sum_all(y);
    nn::backward(loss);
    CHECK(a->grad[0] == 0.0);
    CHECK(a->grad[1] == 1.0);
    CHECK(a->grad[2] == 0.0);
}

TEST_CASE("matrix op gradients") {
    auto a = nn::leaf(randn({3, 5}, 3));
    auto b = nn::leaf(randn({5, 4}, 4));
    auto r = gradcheck::check<double>({a, b}, [&] { return nn::mean_all(nn::matmul(a, b)); });
    CHECK(r.rel_error < 1e-7);

    auto c = nn::leaf(randn({6, 5}, 5));
    auto r2 = gradcheck::check<double>({a, c}, [&] { return nn::mean_all(nn::matmul_nt(a, c)); });
    CHECK(r2.rel_error < 1e-7);

    auto w = nn::leaf(randn({4, 5}, 6));
    auto bias = nn::leaf(randn({4}, 7));
    auto r3 = gradcheck::check<double>({a, w, bias},
                                       [&] { return nn::mean_all(nn::linear(a, w, bias)); });
    CHECK(r3.rel_error < 1e-7);
}

TEST_CASE("shape and reduction op gradients") {
    auto a = nn::leaf(randn({2, 3, 4, 4}, 8));
    auto b = nn::leaf(randn({2, 2, 4, 4}, 9));
    auto r1 = gradcheck::check<double>(
        {a, b}, [&] { return nn::mean_all(nn::concat_channels(a, b)); });
    CHECK(r1.rel_error < 1e-7);
    auto r2 = gradcheck::check<double>({a}, [&] { return nn::mean_all(nn::global_avg_pool(a)); });
    CHECK(r2.rel_error < 1e-7);
    auto r3 = gradcheck::check<double>({a}, [&] { return nn::mean_all(nn::mean_per_image(a)); });
    CHECK(r3.rel_error < 1e-7);
}

TEST_CASE("normalization and similarity gradients") {
    auto a = nn::leaf(randn({4, 6}, 10));
    auto b = nn::leaf(randn({4, 6}, 11));
    auto r1 = gradcheck::check<double>(
        {a}, [&] { return nn::mean_all(nn::l2_normalize_rows(a)); });
    CHECK(r1.rel_error < 1e-6);
    auto r2 = gradcheck::check<double>(
        {a, b}, [&] { return nn::mean_all(nn::rowdot(nn::l2_normalize_rows(a),
                                                     nn::l2_normalize_rows(b))); });
    CHECK(r2.rel_error < 1e-6);

    auto x = nn::leaf(randn({2, 3, 2, 2}, 12));
    auto r3 = gradcheck::check<double>(
        {x}, [&] { return nn::mean_all(nn::l2_normalize_channels(x)); });
    CHECK(r3.rel_error < 1e-6);
}

TEST_CASE("l2_normalize_rows produces unit rows") {
    auto a = nn::leaf(randn({10, 16}, 13));
    auto y = nn::l2_normalize_rows(a);
    for (int i = 0; i < 10; ++i) {
        double n2 = 0;
        for (int j = 0; j < 16; ++j) n2 += y->value.at(i, j) * y->value.at(i, j);
        CHECK(std::abs(std::sqrt(n2) - 1.0) < 1e-9);
    }
}

TEST_CASE("classification op gradients") {
    auto logits = nn::leaf(randn({4, 3}, 14));
    std::vector<int> labels = {0, 2, 1, 2};
    auto r1 = gradcheck::check<double>(
        {logits}, [&] { return nn::mean_all(nn::softmax_cross_entropy(logits, labels)); });
    CHECK(r1.rel_error < 1e-7);

    auto delta = nn::leaf(randn({4}, 15));
    auto r2 = gradcheck::check<double>({logits, delta}, [&] {
        return nn::mean_all(nn::scatter_row_add(logits, labels, delta));
    });
    CHECK(r2.rel_error < 1e-7);
    auto r3 = gradcheck::check<double>(
        {logits}, [&] { return nn::mean_all(nn::gather_rows(logits, labels)); });
    CHECK(r3.rel_error < 1e-7);
}

TEST_CASE("conv2d gradients") {
    auto x = nn::leaf(randn({2, 3, 6, 6}, 16, 0.5));
    SECTION("k3 s1 p1") {
        auto w = nn::leaf(randn({4, 3, 3, 3}, 17, 0.3));
        auto b = nn::leaf(randn({4}, 18, 0.1));
        auto r = gradcheck::check<double>(
            {x, w, b}, [&] { return nn::mean_all(nn::conv2d(x, w, b, 1, 1)); });
        CHECK(r.rel_error < 1e-6);
    }
    SECTION("k3 s2 p1") {
        auto w = nn::leaf(randn({4, 3, 3, 3}, 19, 0.3));
        auto b = nn::leaf(randn({4}, 20, 0.1));
        auto y = nn::conv2d(x, w, b, 2, 1);
        REQUIRE(y->value.shape() == std::vector<int>({2, 4, 3, 3}));
        auto r = gradcheck::check<double>(
            {x, w, b}, [&] { return nn::mean_all(nn::conv2d(x, w, b, 2, 1)); });
        CHECK(r.rel_error < 1e-6);
    }
    SECTION("k1 s2 p0 projection") {
        auto w = nn::leaf(randn({5, 3, 1, 1}, 21, 0.4));
        auto b = nn::leaf(randn({5}, 22, 0.1));
        auto r = gradcheck::check<double>(
            {x, w, b}, [&] { return nn::mean_all(nn::conv2d(x, w, b, 2, 0)); });
        CHECK(r.rel_error < 1e-6);
    }
}

TEST_CASE("conv_transpose2d gradients and shape") {
    auto x = nn::leaf(randn({2, 3, 4, 4}, 23, 0.5));
    SECTION("k2 s2 p0 doubles resolution") {
        auto w = nn::leaf(randn({3, 4, 2, 2}, 24, 0.3));
        auto b = nn::leaf(randn({4}, 25, 0.1));
        auto y = nn::conv_transpose2d(x, w, b, 2, 0);
        REQUIRE(y->value.shape() == std::vector<int>({2, 4, 8, 8}));
        auto r = gradcheck::check<double>(
            {x, w, b}, [&] { return nn::mean_all(nn::conv_transpose2d(x, w, b, 2, 0)); });
        CHECK(r.rel_error < 1e-6);
    }
    SECTION("k3 s1 p1 keeps resolution") {
        auto w = nn::leaf(randn({3, 4, 3, 3}, 26, 0.3));
        auto b = nn::leaf(randn({4}, 27, 0.1));
        auto y = nn::conv_transpose2d(x, w, b, 1, 1);
        REQUIRE(y->value.shape() == std::vector<int>({2, 4, 4, 4}));
        auto r = gradcheck::check<double>(
            {x, w, b}, [&] { return nn::mean_all(nn::conv_transpose2d(x, w, b, 1, 1)); });
        CHECK(r.rel_error < 1e-6);
    }
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
    // <conv(x), y> == <x, convT(y)>. The (Co,Ci,K,K) conv weight doubles as
    // the (Cin,Cout,K,K) transposed-conv weight with no permutation.
    auto x = randn({1, 3, 5, 5}, 28);
    auto y = randn({1, 4, 3, 3}, 29);
    auto w = randn({4, 3, 3, 3}, 30, 0.5);
    auto zb4 = nn::constant(Tensor<double>({4}));
    auto zb3 = nn::constant(Tensor<double>({3}));
    auto cx = nn::conv2d(nn::constant(x), nn::constant(w), zb4, 2, 1);
    auto cty = nn::conv_transpose2d(nn::constant(y), nn::constant(w), zb3, 2, 1);
    REQUIRE(cx->value.shape() == y.shape());
    REQUIRE(cty->value.shape() == x.shape());
    double lhs = 0, rhs = 0;
    for (long i = 0; i < cx->value.numel(); ++i) lhs += cx->value[i] * y[i];
    for (long i = 0; i < cty->value.numel(); ++i) rhs += cty->value[i] * x[i];
    CHECK(std::abs(lhs - rhs) < 1e-9);
}

TEST_CASE("im2col and col2im are adjoint") {
    const int c = 2, h = 5, w = 6, k = 3, stride = 2, pad = 1;
    int ho = (h + 2 * pad - k) / stride + 1;
    int wo = (w + 2 * pad - k) / stride + 1;
    auto x = randn({c, h, w}, 40);
    auto cvec = randn({c * k * k, ho * wo}, 41);
    Tensor<double> cols({c * k * k, ho * wo});
    nn::detail::im2col(x.data(), c, h, w, k, stride, pad, ho, wo, cols.data());
    Tensor<double> back({c, h, w});
    nn::detail::col2im(cvec.data(), c, h, w, k, stride, pad, ho, wo, back.data());
    double lhs = 0, rhs = 0;
    for (long i = 0; i < cols.numel(); ++i) lhs += cols[i] * cvec[i];
    for (long i = 0; i < back.numel(); ++i) rhs += back[i] * x[i];
    CHECK(std::abs(lhs - rhs) < 1e-9);
}

TEST_CASE("batch_norm2d gradients") {
    auto x = nn::leaf(randn({3, 2, 3, 3}, 31));
    auto gamma = nn::leaf(randn({2}, 32, 0.5));
    auto beta = nn::leaf(randn({2}, 33, 0.5));
    Tensor<double> rm({2}), rv({2});
    rv.fill(1.0);
    SECTION("training mode") {
        auto r = gradcheck::check<double>({x, gamma, beta}, [&] {
            return nn::mean_all(nn::mul(
                nn::batch_norm2d(x, gamma, beta, &rm, &rv, true), x));
        });
        CHECK(r.rel_error < 1e-6);
    }
    SECTION("eval mode") {
        rm[0] = 0.3;
        rm[1] = -0.2;
        rv[0] = 1.5;
        rv[1] = 0.8;
        auto r = gradcheck::check<double>({x, gamma, beta}, [&] {
            return nn::mean_all(nn::mul(
                nn::batch_norm2d(x, gamma, beta, &rm, &rv, false), x));
        });
        CHECK(r.rel_error < 1e-6);
    }
    SECTION("training normalizes batch statistics") {
        auto y = nn::batch_norm2d(x, nn::leaf(Tensor<double>({2}), false),
                                  nn::leaf(Tensor<double>({2}), false), &rm, &rv, true);
        (void)y;  // gamma=0, beta=0 -> output zero
        for (long i = 0; i < y->value.numel(); ++i) REQUIRE(y->value[i] == 0.0);
    }
}

TEST_CASE("conv2d is deterministic across repeated calls") {
    auto x = nn::constant(randn({8, 3, 16, 16}, 34));
    auto w = nn::constant(randn({6, 3, 3, 3}, 35, 0.3));
    auto b = nn::constant(randn({6}, 36, 0.1));
    auto y1 = nn::conv2d(x, w, b, 1, 1);
    auto y2 = nn::conv2d(x, w, b, 1, 1);
    CHECK(nn::bitwise_equal(y1->value, y2->value));
}

TEST_CASE("adam minimizes a quadratic") {
    nn::ParamStore<double> ps;
    Tensor<double> init({4});
    for (int i = 0; i < 4; ++i) init[i] = 2.0 + i;
    auto p = ps.add_param("p", init);
    nn::Adam<double> opt(0.1);
    for (int step = 0; step < 300; ++step) {
        ps.zero_grad();
        auto loss = nn::mean_all(nn::mul(p, p));
        nn::backward(loss);
        opt.step(ps);
    }
    for (int i = 0; i < 4; ++i) CHECK(std::abs(p->value[i]) < 1e-2);
}

TEST_CASE("checkpoint round trip") {
    auto dir = std::filesystem::temp_directory_path() / "advface_ckpt_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "t.ckpt";

    nn::NamedTensors<float> ts;
    nn::Rng rng(37);
    Tensor<float> a({3, 4});
    nn::fill_normal(a, rng, 1.0);
    ts.add("a", a);
    Tensor<float> b({2});
    nn::fill_uniform(b, rng, -1.0, 1.0);
    ts.add("b", b);
    nlohmann::json meta = {{"kind", "test"}, {"value", 7}};
    nn::save_checkpoint(path, meta, ts);

    auto [meta2, ts2] = nn::load_checkpoint<float>(path);
    CHECK(meta2.at("kind") == "test");
    CHECK(meta2.at("value") == 7);
    REQUIRE(ts2.find("a") != nullptr);
    CHECK(nn::bitwise_equal(*ts2.find("a"), a));
    CHECK(nn::bitwise_equal(*ts2.find("b"), b));

    // double-width load converts
    auto [meta3, ts3] = nn::load_checkpoint<double>(path);
    CHECK(std::abs((*ts3.find("a"))[0] - static_cast<double>(a[0])) < 1e-12);
    std::filesystem::remove_all(dir);
}

TEST_CASE("bilinear resize identity and downscale") {
    auto src = randn({3, 8, 8}, 38);
    auto same = img::bilinear_resize(src, 8, 8);
    CHECK(nn::max_abs_diff(src, same) < 1e-12);
    auto down = img::bilinear_resize(src, 4, 4);
    REQUIRE(down.shape() == std::vector<int>({3, 4, 4}));
}
