#include "support.hpp"

using namespace colorspace;
using testing_support::numeric_gradient;
using testing_support::random_tensor;
using testing_support::relative_error;

namespace {

std::mt19937_64 rng_for(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace

TEST(Tensor, ShapeMustMatchBuffer) {
    EXPECT_THROW(Tensor<double>(Shape{2, 3}, std::vector<double>(5)), Error);
    Tensor<double> t(Shape{2, 3}, 1.5);
    EXPECT_EQ(t.size(), 6u);
    EXPECT_THROW(t.reshaped(Shape{4}), Error);
    EXPECT_EQ(t.reshaped(Shape{3, 2}).shape(), (Shape{3, 2}));
}

TEST(Conv2d, OnesKernelSumsWindow) {
    Graph<double> g;
    Var x = g.constant(Tensor<double>(Shape{1, 1, 4, 4}, 1.0));
    Var w = g.constant(Tensor<double>(Shape{1, 1, 3, 3}, 1.0));
    Var b = g.constant(Tensor<double>(Shape{1}, 0.0));
    const auto& y = g.value(conv2d(g, x, w, b, 1, 0));
    ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
    for (double v : y.values()) EXPECT_DOUBLE_EQ(v, 9.0);
}

TEST(Conv2d, OutputSizeFormula) {
    Graph<double> g;
    Var x = g.constant(Tensor<double>(Shape{1, 1, 4, 4}, 1.0));
    Var w = g.constant(Tensor<double>(Shape{1, 1, 2, 2}, 1.0));
    Var b = g.constant(Tensor<double>(Shape{1}));
    EXPECT_EQ(g.value(conv2d(g, x, w, b, 2, 0)).shape(), (Shape{1, 1, 2, 2}));
    // floor((5 + 2 - 3)/2) + 1 = 3
    Var x5 = g.constant(Tensor<double>(Shape{2, 1, 5, 5}, 1.0));
    Var w3 = g.constant(Tensor<double>(Shape{4, 1, 3, 3}, 1.0));
    Var b4 = g.constant(Tensor<double>(Shape{4}));
    EXPECT_EQ(g.value(conv2d(g, x5, w3, b4, 2, 1)).shape(), (Shape{2, 4, 3, 3}));
}

TEST(Conv2d, RejectsChannelMismatchAndZeroStride) {
    Graph<double> g;
    Var x = g.constant(Tensor<double>(Shape{1, 2, 4, 4}));
    Var w = g.constant(Tensor<double>(Shape{1, 3, 3, 3}));
    Var b = g.constant(Tensor<double>(Shape{1}));
    EXPECT_THROW(conv2d(g, x, w, b, 1, 0), Error);
    Var w2 = g.constant(Tensor<double>(Shape{1, 2, 3, 3}));
    EXPECT_THROW(conv2d(g, x, w2, b, 0, 0), Error);
}

TEST(Conv2d, MatchesDirectConvolution) {
    auto rng = rng_for(3);
    const auto xv = random_tensor<double>(rng, Shape{2, 3, 6, 5});
    const auto wv = random_tensor<double>(rng, Shape{4, 3, 3, 3});
    const auto bv = random_tensor<double>(rng, Shape{4});
    Graph<double> g;
    const auto& y = g.value(conv2d(g, g.constant(xv), g.constant(wv), g.constant(bv), 2, 1));
    const std::size_t oh = y.dim(2), ow = y.dim(3);
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t o = 0; o < 4; ++o)
            for (std::size_t i = 0; i < oh; ++i)
                for (std::size_t j = 0; j < ow; ++j) {
                    double acc = bv[o];
                    for (std::size_t c = 0; c < 3; ++c)
                        for (std::size_t ky = 0; ky < 3; ++ky)
                            for (std::size_t kx = 0; kx < 3; ++kx) {
                                const long yy = static_cast<long>(i * 2 + ky) - 1;
                                const long xx = static_cast<long>(j * 2 + kx) - 1;
                                if (yy < 0 || xx < 0 || yy >= 6 || xx >= 5) continue;
                                acc += xv[((n * 3 + c) * 6 + yy) * 5 + xx] * wv[((o * 3 + c) * 3 + ky) * 3 + kx];
                            }
                    EXPECT_NEAR(y[((n * 4 + o) * oh + i) * ow + j], acc, 1e-12);
                }
}

TEST(Conv2d, WeightGradientMatchesFiniteDifference) {
    auto rng = rng_for(4);
    const auto xv = random_tensor<double>(rng, Shape{1, 2, 8, 8});
    const auto wv = random_tensor<double>(rng, Shape{3, 2, 3, 3});
    const auto bv = random_tensor<double>(rng, Shape{3});
    auto loss = [&](const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b) {
        Graph<double> g;
        return g.value(sum(g, conv2d(g, g.constant(x), g.constant(w), g.constant(b), 1, 1)))[0];
    };
    Graph<double> g;
    Var x = g.variable(xv), w = g.variable(wv), b = g.variable(bv);
    g.backward(sum(g, conv2d(g, x, w, b, 1, 1)));
    EXPECT_LE(relative_error(g.grad(w), numeric_gradient([&](const auto& t) { return loss(xv, t, bv); }, wv)), 1e-4);
    EXPECT_LE(relative_error(g.grad(x), numeric_gradient([&](const auto& t) { return loss(t, wv, bv); }, xv)), 1e-4);
    EXPECT_LE(relative_error(g.grad(b), numeric_gradient([&](const auto& t) { return loss(xv, wv, t); }, bv)), 1e-4);
}

TEST(Conv2d, StridedPaddedGradientsWithNonlinearLoss) {
    auto rng = rng_for(5);
    const auto xv = random_tensor<double>(rng, Shape{2, 3, 7, 6});
    const auto wv = random_tensor<double>(rng, Shape{2, 3, 4, 4});
    const auto bv = random_tensor<double>(rng, Shape{2});
    auto forward = [&](Graph<double>& g, Var x, Var w, Var b) {
        Var y = conv2d(g, x, w, b, 2, 1);
        return mean(g, tanh(g, y));
    };
    auto loss = [&](const Tensor<double>& x, const Tensor<double>& w) {
        Graph<double> g;
        return g.value(forward(g, g.constant(x), g.constant(w), g.constant(bv)))[0];
    };
    Graph<double> g;
    Var x = g.variable(xv), w = g.variable(wv);
    g.backward(forward(g, x, w, g.constant(bv)));
    EXPECT_LE(relative_error(g.grad(w), numeric_gradient([&](const auto& t) { return loss(xv, t); }, wv)), 1e-4);
    EXPECT_LE(relative_error(g.grad(x), numeric_gradient([&](const auto& t) { return loss(t, wv); }, xv)), 1e-4);
}

TEST(InstanceNorm, ConstantChannelBecomesZero) {
    Graph<double> g;
    Var x = g.constant(Tensor<double>(Shape{1, 2, 3, 3}, 0.7));
    Var y = instance_norm(g, x, g.constant(Tensor<double>(Shape{2}, 1.0)), g.constant(Tensor<double>(Shape{2})), 1e-5);
    for (double v : g.value(y).values()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(InstanceNorm, ZeroGainGivesBeta) {
    auto rng = rng_for(6);
    Graph<double> g;
    Var x = g.constant(random_tensor<double>(rng, Shape{2, 2, 3, 3}));
    Var y = instance_norm(g, x, g.constant(Tensor<double>(Shape{2}, 0.0)),
                          g.constant(Tensor<double>(Shape{2}, std::vector<double>{0.25, -3.0})), 1e-5);
    const auto& v = g.value(y);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_DOUBLE_EQ(v[i], (i / 9) % 2 == 0 ? 0.25 : -3.0);
}

TEST(InstanceNorm, StandardizesFourValues) {
    Graph<double> g;
    Var x = g.constant(Tensor<double>(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4}));
    Var y = instance_norm(g, x, g.constant(Tensor<double>(Shape{1}, 1.0)), g.constant(Tensor<double>(Shape{1})), 1e-12);
    // mean 2.5, population variance 1.25
    const double sd = std::sqrt(1.25);
    const auto& v = g.value(y);
    const double expected[] = {-1.5 / sd, -0.5 / sd, 0.5 / sd, 1.5 / sd};
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(v[i], expected[i], 1e-9);
    EXPECT_NEAR(v[0], -1.3416, 1e-4);
    EXPECT_NEAR(v[1], -0.4472, 1e-4);
}

TEST(InstanceNorm, NonPositiveEpsIsRejected) {
    Graph<double> g;
    Var x = g.constant(Tensor<double>(Shape{1, 1, 1, 1}, 1.0));
    try {
        instance_norm(g, x, g.constant(Tensor<double>(Shape{1}, 1.0)), g.constant(Tensor<double>(Shape{1})), 0.0);
        FAIL() << "expected a division hazard";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::division_hazard);
    }
}

TEST(InstanceNorm, GradientsMatchFiniteDifference) {
    auto rng = rng_for(7);
    const auto xv = random_tensor<double>(rng, Shape{2, 3, 4, 3});
    const auto gv = random_tensor<double>(rng, Shape{3}, 0.5, 1.5);
    const auto bv = random_tensor<double>(rng, Shape{3});
    const auto wv = random_tensor<double>(rng, Shape{2, 3, 4, 3});
    auto forward = [&](Graph<double>& g, Var x, Var gamma, Var beta) {
        Var y = instance_norm(g, x, gamma, beta, 1e-5);
        // weighted sum so the loss is not invariant to normalization
        return sum(g, tanh(g, add(g, y, g.constant(wv))));
    };
    auto loss = [&](const Tensor<double>& x, const Tensor<double>& ga, const Tensor<double>& be) {
        Graph<double> g;
        return g.value(forward(g, g.constant(x), g.constant(ga), g.constant(be)))[0];
    };
    Graph<double> g;
    Var x = g.variable(xv), ga = g.variable(gv), be = g.variable(bv);
    g.backward(forward(g, x, ga, be));
    EXPECT_LE(relative_error(g.grad(x), numeric_gradient([&](const auto& t) { return loss(t, gv, bv); }, xv)), 1e-4);
    EXPECT_LE(relative_error(g.grad(ga), numeric_gradient([&](const auto& t) { return loss(xv, t, bv); }, gv)), 1e-4);
    EXPECT_LE(relative_error(g.grad(be), numeric_gradient([&](const auto& t) { return loss(xv, gv, t); }, bv)), 1e-4);
}

TEST(Activations, PointValues) {
    Graph<double> g;
    Var x = g.variable(Tensor<double>(Shape{4}, std::vector<double>{-2, -0.5, 0, 3}));
    const auto& lr = g.value(leaky_relu(g, x, 0.2));
    EXPECT_DOUBLE_EQ(lr[0], -0.4);
    EXPECT_DOUBLE_EQ(lr[2], 0.0);
    EXPECT_DOUBLE_EQ(lr[3], 3.0);
    const auto& r = g.value(relu(g, x));
    EXPECT_DOUBLE_EQ(r[1], 0.0);
    EXPECT_DOUBLE_EQ(r[3], 3.0);
    EXPECT_DOUBLE_EQ(g.value(sigmoid(g, x))[2], 0.5);
    EXPECT_DOUBLE_EQ(g.value(tanh(g, x))[2], 0.0);
    EXPECT_NEAR(g.value(tanh(g, x))[3], std::tanh(3.0), 1e-15);
}

TEST(Activations, GradientsMatchFiniteDifference) {
    auto rng = rng_for(8);
    auto xv = random_tensor<double>(rng, Shape{32}, -3, 3);
    for (auto& v : xv.values())
        if (std::abs(v) < 1e-3) v = 0.5;  // stay off the ReLU kink
    using Op = std::function<Var(Graph<double>&, Var)>;
    const std::vector<Op> ops = {[](Graph<double>& g, Var x) { return leaky_relu(g, x, 0.2); },
                                 [](Graph<double>& g, Var x) { return relu(g, x); },
                                 [](Graph<double>& g, Var x) { return sigmoid(g, x); },
                                 [](Graph<double>& g, Var x) { return tanh(g, x); }};
    for (const auto& op : ops) {
        auto loss = [&](const Tensor<double>& t) {
            Graph<double> g;
            Var y = op(g, g.constant(t));
            return g.value(sum(g, tanh(g, y)))[0];
        };
        Graph<double> g;
        Var x = g.variable(xv);
        g.backward(sum(g, tanh(g, op(g, x))));
        EXPECT_LE(relative_error(g.grad(x), numeric_gradient(loss, xv)), 1e-6);
    }
}

TEST(Dense, GradientsMatchFiniteDifference) {
    auto rng = rng_for(9);
    const auto xv = random_tensor<double>(rng, Shape{3, 5});
    const auto wv = random_tensor<double>(rng, Shape{2, 5});
    const auto bv = random_tensor<double>(rng, Shape{2});
    auto loss = [&](const Tensor<double>& x, const Tensor<double>& w) {
        Graph<double> g;
        return g.value(sum(g, tanh(g, dense(g, g.constant(x), g.constant(w), g.constant(bv)))))[0];
    };
    Graph<double> g;
    Var x = g.variable(xv), w = g.variable(wv);
    g.backward(sum(g, tanh(g, dense(g, x, w, g.constant(bv)))));
    EXPECT_LE(relative_error(g.grad(w), numeric_gradient([&](const auto& t) { return loss(xv, t); }, wv)), 1e-4);
    EXPECT_LE(relative_error(g.grad(x), numeric_gradient([&](const auto& t) { return loss(t, wv); }, xv)), 1e-4);
}

TEST(Bce, ValuesAndTargetContract) {
    Graph<double> g;
    Var p = g.variable(Tensor<double>(Shape{2}, 0.5));
    EXPECT_NEAR(g.value(bce_loss(g, p, Tensor<double>(Shape{2}, std::vector<double>{1, 0})))[0], std::log(2.0), 1e-12);
    Var q = g.variable(Tensor<double>(Shape{1}, 0.25));
    EXPECT_NEAR(g.value(bce_loss(g, q, Tensor<double>(Shape{1}, 1.0)))[0], 1.3863, 1e-4);
    EXPECT_THROW(bce_loss(g, q, Tensor<double>(Shape{1}, 0.5)), Error);
    // saturated predictions stay finite
    Var sat = g.variable(Tensor<double>(Shape{2}, std::vector<double>{0.0, 1.0}));
    EXPECT_TRUE(std::isfinite(g.value(bce_loss(g, sat, Tensor<double>(Shape{2}, std::vector<double>{1, 0})))[0]));
}

TEST(Bce, LogitsFormAgreesWithProbabilityForm) {
    auto rng = rng_for(10);
    const auto z = random_tensor<double>(rng, Shape{16}, -4, 4);
    Tensor<double> t(Shape{16});
    for (std::size_t i = 0; i < 16; i += 2) t[i] = 1;
    Graph<double> g;
    Var zl = g.variable(z);
    Var a = bce_with_logits(g, zl, t);
    Var b = bce_loss(g, sigmoid(g, zl), t);
    EXPECT_NEAR(g.value(a)[0], g.value(b)[0], 1e-12);
    Graph<double> g2;
    Var z2 = g2.variable(z);
    g2.backward(bce_with_logits(g2, z2, t));
    auto loss = [&](const Tensor<double>& v) {
        Graph<double> h;
        return h.value(bce_with_logits(h, h.constant(v), t))[0];
    };
    EXPECT_LE(relative_error(g2.grad(z2), numeric_gradient(loss, z)), 1e-6);
}

TEST(Graph, FanOutAccumulatesAndBackwardRunsOnce) {
    Graph<double> g;
    Var x = g.variable(Tensor<double>(Shape{1}, 3.0));
    Var y = add(g, scale(g, x, 2.0), x);  // 3x
    g.backward(y);
    EXPECT_DOUBLE_EQ(g.grad(x)[0], 3.0);
    EXPECT_THROW(g.backward(y), Error);
}

TEST(Graph, ParameterGradientsReachBinding) {
    Parameter<double> p{"w", Tensor<double>(Shape{2}, std::vector<double>{1, 2}), {}};
    p.zero_grad();
    Graph<double> g;
    Var w = g.parameter(p);
    g.backward(sum(g, scale(g, w, 4.0)));
    EXPECT_DOUBLE_EQ(p.grad[0], 4.0);
    EXPECT_DOUBLE_EQ(p.grad[1], 4.0);
    Parameter<double> frozen{"f", Tensor<double>(Shape{1}, 1.0), {}};
    frozen.zero_grad();
    Graph<double> h;
    Var f = h.parameter(frozen, false);
    Var v = h.variable(Tensor<double>(Shape{1}, 2.0));
    h.backward(sum(h, add(h, f, v)));
    EXPECT_DOUBLE_EQ(frozen.grad[0], 0.0);
    EXPECT_DOUBLE_EQ(h.grad(v)[0], 1.0);
}

TEST(HeInit, StandardDeviationMatchesFanIn) {
    Rng rng(11);
    const std::size_t fan_in = 3 * 4 * 4;
    const auto t = he_init<double>(Shape{400, 3, 4, 4}, fan_in, rng);
    double s = 0, ss = 0;
    for (double v : t.values()) {
        s += v;
        ss += v * v;
    }
    const double n = static_cast<double>(t.size());
    const double sd = std::sqrt(ss / n - (s / n) * (s / n));
    EXPECT_NEAR(sd / std::sqrt(2.0 / fan_in), 1.0, 0.01);
    EXPECT_THROW(he_init<double>(Shape{1}, 0, rng), Error);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Parameter<double> p{"w", Tensor<double>(Shape{3}, std::vector<double>{1, -2, 0.5}), {}};
    p.grad = Tensor<double>(Shape{3}, std::vector<double>{0.3, -7.0, 1e-3});
    Adam<double> opt(AdamConfig{1e-3, 0.5, 0.999, 1e-8});
    std::vector<Parameter<double>*> ps{&p};
    opt.step(ps);
    // bias-corrected first step is lr·g/(|g| + eps) ≈ lr·sign(g)
    EXPECT_NEAR(p.value[0], 1 - 1e-3, 1e-9);
    EXPECT_NEAR(p.value[1], -2 + 1e-3, 1e-9);
    EXPECT_NEAR(p.value[2], 0.5 - 1e-3, 1e-8);
    EXPECT_EQ(opt.step_count(), 1u);
}

TEST(Adam, MatchesReferenceRecursion) {
    Parameter<double> p{"w", Tensor<double>(Shape{1}, 0.0), {}};
    Adam<double> opt(AdamConfig{0.01, 0.5, 0.999, 1e-8});
    std::vector<Parameter<double>*> ps{&p};
    double m = 0, v = 0, w = 0;
    for (int t = 1; t <= 20; ++t) {
        const double grad = std::sin(t) + 0.1 * t;
        p.grad = Tensor<double>(Shape{1}, grad);
        opt.step(ps);
        m = 0.5 * m + 0.5 * grad;
        v = 0.999 * v + 0.001 * grad * grad;
        w -= 0.01 * (m / (1 - std::pow(0.5, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
        EXPECT_NEAR(p.value[0], w, 1e-12);
    }
}

TEST(Adam, NonFiniteGradientIsDivergence) {
    Parameter<double> p{"w", Tensor<double>(Shape{2}), {}};
    p.grad = Tensor<double>(Shape{2}, std::vector<double>{0.0, std::nan("")});
    Adam<double> opt;
    std::vector<Parameter<double>*> ps{&p};
    try {
        opt.step(ps);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::divergence);
        EXPECT_EQ(exit_code(e.kind()), 4);
    }
    EXPECT_EQ(opt.step_count(), 0u);
}
