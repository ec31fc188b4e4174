#include "support.hpp"

using namespace colorspace;
using testing_support::random_image;

namespace {

Image<double> pixel(double r, double g, double b) { return Image<double>(1, 1, std::vector<double>{r, g, b}); }

Image<double> gray_pair(double a, double b) { return Image<double>(1, 2, std::vector<double>{a, a, a, b, b, b}); }

// Interior image: values well inside [0,1] and saturation low enough that
// moderate α never reaches a clamp.
Image<double> interior_image(std::mt19937_64& rng, std::size_t h, std::size_t w) {
    return random_image(rng, h, w, 0.4, 0.6);
}

}  // namespace

TEST(Brightness, ClosedFormValues) {
    EXPECT_DOUBLE_EQ(op_brightness(pixel(0.5, 0.5, 0.5), 0.5).data[0], 0.75);
    EXPECT_DOUBLE_EQ(op_brightness(pixel(0.5, 0.5, 0.5), -0.5).data[0], 0.25);
    for (double v : op_brightness(pixel(0.1, 0.7, 0.3), 1.0).data) EXPECT_DOUBLE_EQ(v, 1.0);
    for (double v : op_brightness(pixel(0.1, 0.7, 0.3), -1.0).data) EXPECT_DOUBLE_EQ(v, 0.0);
    // out-of-range α is clipped to ±1
    EXPECT_EQ(op_brightness(pixel(0.1, 0.7, 0.3), 3.0), op_brightness(pixel(0.1, 0.7, 0.3), 1.0));
}

TEST(Contrast, TwoPixelGrayExample) {
    const auto y = op_contrast(gray_pair(0.2, 0.6), 0.5);
    EXPECT_NEAR(y.data[0], 0.0, 1e-15);
    EXPECT_NEAR(y.data[3], 0.8, 1e-15);
}

TEST(Contrast, MinusOneCollapsesToMean) {
    std::mt19937_64 rng(1);
    const auto x = random_image(rng, 5, 4);
    const double mean = image_mean(x);
    for (double v : op_contrast(x, -1.0).data) EXPECT_NEAR(v, mean, 1e-15);
}

TEST(Saturation, HandEvaluatedPixel) {
    const auto y = op_saturation(pixel(0.8, 0.4, 0.2), 0.3);
    EXPECT_NEAR(y.data[0], 0.92857, 1e-5);
    EXPECT_NEAR(y.data[1], 0.35714, 1e-5);
    EXPECT_NEAR(y.data[2], 0.07143, 1e-5);
    // exact: L = 0.5, s = 1/0.7 - 1
    const double s = 1 / 0.7 - 1;
    EXPECT_NEAR(y.data[0], 0.8 + 0.3 * s, 1e-15);
}

TEST(Saturation, StatsOfHandPixel) {
    const double rgb[] = {0.8, 0.4, 0.2};
    const auto st = pixel_stats(rgb);
    EXPECT_DOUBLE_EQ(st.lightness, 0.5);
    EXPECT_NEAR(st.delta, 0.6, 1e-15);
    EXPECT_NEAR(st.saturation, 0.6, 1e-15);
    const double dark[] = {0.3, 0.1, 0.2};
    EXPECT_NEAR(pixel_stats(dark).saturation, 0.2 / (2 * 0.2), 1e-15);
}

TEST(Saturation, MinusOneHalvesChromaAroundLightness) {
    // s = 1/(1-(-1)) - 1 = -1/2, so every channel moves halfway to L = 0.6
    const auto y = op_saturation(pixel(0.9, 0.3, 0.5), -1.0);
    EXPECT_NEAR(y.data[0], 0.75, 1e-15);
    EXPECT_NEAR(y.data[1], 0.45, 1e-15);
    EXPECT_NEAR(y.data[2], 0.55, 1e-15);
}

TEST(Saturation, BranchesAgreeAtZeroAndAcrossSign) {
    // Both printed branches are the same map; the α > 0 branch choice is
    // therefore unobservable. Check against the negative-branch form.
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        const auto x = random_image(rng, 2, 2);
        const double a = std::uniform_real_distribution<double>(0.01, 0.9)(rng);
        const auto y = op_saturation(x, a);
        for (std::size_t p = 0; p < 4; ++p) {
            const auto st = pixel_stats(&x.data[3 * p]);
            if (st.delta <= 0) continue;
            const double s = a + st.saturation >= 1 ? 1 / st.saturation - 1 : 1 / (1 - a) - 1;
            for (int c = 0; c < 3; ++c) {
                const double neg = st.lightness + (x.data[3 * p + c] - st.lightness) * (1 + s);
                EXPECT_NEAR(y.data[3 * p + c], std::clamp(neg, 0.0, 1.0), 1e-14);
            }
        }
    }
    EXPECT_EQ(op_saturation(pixel(0.8, 0.4, 0.2), 0.0), pixel(0.8, 0.4, 0.2));
}

TEST(Compose, IdentityAtZeroIsExact) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const auto x = random_image(rng, 7, 9);
        EXPECT_EQ(ops_compose(x, {}), x);
    }
}

TEST(Compose, OrderIsContrastThenSaturationThenBrightness) {
    std::mt19937_64 rng(4);
    const auto x = random_image(rng, 4, 4);
    const AdjustParams a{0.2, -0.3, 0.4};
    EXPECT_EQ(ops_compose(x, a), op_brightness(op_saturation(op_contrast(x, 0.4), -0.3), 0.2));
    const auto g = gray_pair(0.5, 0.5);
    for (double v : ops_compose(g, {0.5, 0.0, 0.0}).data) EXPECT_DOUBLE_EQ(v, 0.75);
    EXPECT_EQ(ops_compose(gray_pair(0.3, 0.7), {0.0, 0.8, 0.0}), gray_pair(0.3, 0.7));
}

TEST(Compose, ParametersAreClipped) {
    const auto c = clipped({2.0, 1.0, 1.0});
    EXPECT_DOUBLE_EQ(c.brightness, 1.0);
    EXPECT_DOUBLE_EQ(c.saturation, 1.0 - 1e-3);
    EXPECT_DOUBLE_EQ(c.contrast, 1.0 - 1e-3);
    std::mt19937_64 rng(5);
    const auto x = random_image(rng, 3, 3);
    const auto y = ops_compose(x, {0.0, 0.0, 1.0});
    for (double v : y.data) EXPECT_TRUE(std::isfinite(v));
}

// Property tests over random images and parameters.

TEST(Properties, OutputsStayInUnitRange) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> a(-1.5, 1.5);
    for (int t = 0; t < 300; ++t) {
        const auto x = random_image(rng, 5, 5);
        const auto y = ops_compose(x, {a(rng), a(rng), a(rng)});
        for (double v : y.data) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Properties, BrightnessMonotoneInSign) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> a(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        const auto x = random_image(rng, 4, 4);
        const double ab = a(rng);
        const auto up = op_brightness(x, ab), down = op_brightness(x, -ab);
        for (std::size_t i = 0; i < x.size(); ++i) {
            EXPECT_GE(up.data[i], x.data[i]);
            EXPECT_LE(down.data[i], x.data[i]);
        }
    }
}

TEST(Properties, ContrastPreservesMeanWithoutClamping) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> a(-1.0, 0.5);
    for (int t = 0; t < 300; ++t) {
        const auto x = interior_image(rng, 6, 6);
        const double ac = a(rng);
        EXPECT_NEAR(image_mean(op_contrast(x, ac)), image_mean(x), 1e-9);
    }
}

TEST(Properties, GrayPixelsAreSaturationFixedPoints) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0), a(-1.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        Image<double> x(3, 3);
        for (std::size_t p = 0; p < x.pixels(); ++p) x.data[3 * p] = x.data[3 * p + 1] = x.data[3 * p + 2] = u(rng);
        x.data[0] = 0.0;
        x.data[1] = x.data[2] = 0.0;  // black
        x.data[3] = x.data[4] = x.data[5] = 1.0;  // white
        EXPECT_EQ(op_saturation(x, a(rng)), x);
    }
}

// Derivatives.

TEST(AlphaGradient, BrightnessAndContrastExamples) {
    EXPECT_NEAR(op_brightness_grad(gray_pair(0.5, 0.5), 0.5).data[0], 0.5, 1e-15);
    EXPECT_NEAR(op_brightness_grad(gray_pair(0.3, 0.3), -0.5).data[0], 0.3, 1e-15);
    // x=0.6, mean 0.4, α=0.5: (x - mean)/(1-α)² = 0.8
    EXPECT_NEAR(op_contrast_grad(gray_pair(0.2, 0.6), 0.5).data[3], 0.8, 1e-14);
    EXPECT_NEAR(op_contrast_grad(gray_pair(0.2, 0.6), -0.5).data[3], 0.2, 1e-14);
    for (double v : op_saturation_grad(gray_pair(0.3, 0.8), 0.4).data) EXPECT_EQ(v, 0.0);
}

TEST(AlphaGradient, JetValueEqualsComposition) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> a(-1.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        const auto x = random_image(rng, 4, 5);
        const AdjustParams p{a(rng), a(rng), a(rng)};
        EXPECT_EQ(ops_grad_alpha(x, p).value, ops_compose(x, p));
    }
}

TEST(AlphaGradient, SingleOperatorsMatchFiniteDifferences) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> mag(1e-2, 0.95);
    std::bernoulli_distribution neg(0.5);
    std::size_t checked = 0, skipped = 0;
    for (int t = 0; t < 200; ++t) {
        const auto x = random_image(rng, 4, 4);
        const double a = neg(rng) ? -mag(rng) : mag(rng);
        const auto cb = oracle::check_alpha_gradient([&](double v) { return oracle::ref_brightness(oracle::traced(x), v); },
                                                     a, op_brightness_grad(x, a).data);
        const auto cs = oracle::check_alpha_gradient([&](double v) { return oracle::ref_saturation(oracle::traced(x), v); },
                                                     a, op_saturation_grad(x, a).data);
        const auto cc = oracle::check_alpha_gradient([&](double v) { return oracle::ref_contrast(oracle::traced(x), v); },
                                                     a, op_contrast_grad(x, a).data);
        for (const auto& c : {cb, cs, cc}) {
            EXPECT_LE(c.rel_error, 1e-5) << "alpha " << a;
            checked += c.checked;
            skipped += c.skipped;
        }
    }
    EXPECT_LT(static_cast<double>(skipped), 1e-3 * static_cast<double>(checked + skipped));
}

TEST(AlphaGradient, CompositeMatchesFiniteDifferences) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> mag(1e-2, 0.95);
    std::bernoulli_distribution neg(0.5);
    auto draw = [&] { return neg(rng) ? -mag(rng) : mag(rng); };
    std::size_t checked = 0, skipped = 0;
    for (int t = 0; t < 200; ++t) {
        const auto x = random_image(rng, 4, 4);
        const AdjustParams p{draw(), draw(), draw()};
        const auto jet = ops_grad_alpha(x, p);
        for (std::size_t k = 0; k < 3; ++k) {
            auto f = [&](double v) {
                AdjustParams q = p;
                (k == 0 ? q.brightness : k == 1 ? q.saturation : q.contrast) = v;
                return oracle::ref_compose(x, q);
            };
            const double a = k == 0 ? p.brightness : k == 1 ? p.saturation : p.contrast;
            const auto c = oracle::check_alpha_gradient(f, a, jet.tangents[k]);
            EXPECT_LE(c.rel_error, 1e-5) << "slot " << k;
            checked += c.checked;
            skipped += c.skipped;
        }
    }
    EXPECT_LT(static_cast<double>(skipped), 1e-3 * static_cast<double>(checked + skipped));
}

TEST(AlphaGradient, ReferenceOperatorsAgreeWithLibrary) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> a(-1.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const auto x = random_image(rng, 3, 3);
        const AdjustParams p{a(rng), a(rng), a(rng)};
        const auto ref = oracle::ref_compose(x, p).value;
        const auto got = ops_compose(x, p).data;
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(got[i], ref[i], 1e-12);
    }
}

TEST(AlphaGradient, ClippedParameterHasZeroDerivative) {
    std::mt19937_64 rng(14);
    const auto x = random_image(rng, 3, 3);
    for (double v : op_brightness_grad(x, 1.5).data) EXPECT_EQ(v, 0.0);
    for (double v : op_contrast_grad(x, 0.9995).data) EXPECT_EQ(v, 0.0);
}
