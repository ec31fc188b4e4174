#include "support.hpp"

using namespace colorspace;
using testing_support::random_image;
using testing_support::TempDir;

TEST(ImageIo, ByteEndpointsMapToUnitRange) {
    TempDir dir("io");
    Image<double> img(1, 2, std::vector<double>{0, 0, 0, 1, 1, 1});
    save_image(img, dir / "a.png");
    const auto back = load_image(dir / "a.png");
    EXPECT_EQ(back, img);
}

TEST(ImageIo, HalfRoundsUpTo128) {
    TempDir dir("io");
    save_image(Image<double>(3, 3, 0.5), dir / "h.png");
    const auto bytes = load_image(dir / "h.png");
    for (double v : bytes.data) EXPECT_DOUBLE_EQ(v, 128.0 / 255.0);
    EXPECT_EQ(quantize(0.5), 128);
    EXPECT_EQ(quantize(127.4999 / 255.0), 127);
    EXPECT_EQ(quantize(-0.2), 0);
    EXPECT_EQ(quantize(1.7), 255);
}

TEST(ImageIo, RoundTripWithinQuantizationBound) {
    TempDir dir("io");
    std::mt19937_64 rng(1);
    const auto img = random_image(rng, 17, 23);
    save_image(img, dir / "r.png");
    const auto back = load_image(dir / "r.png");
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_LE(std::abs(back.data[i] - img.data[i]), 1.0 / 510 + 1e-12);
}

TEST(ImageIo, DeterministicBytes) {
    TempDir dir("io");
    std::mt19937_64 rng(2);
    const auto img = random_image(rng, 9, 9);
    save_image(img, dir / "a.png");
    save_image(img, dir / "b.png");
    EXPECT_EQ(read_bytes(dir / "a.png"), read_bytes(dir / "b.png"));
}

TEST(ImageIo, GrayscalePromotedAndCorruptRejected) {
    TempDir dir("io");
    MaskImage m{2, 2, {0, 255, 128, 1}};
    save_mask(m, dir / "g.png");
    const auto img = load_image(dir / "g.png");
    EXPECT_EQ(img.data[3], 1.0);
    EXPECT_EQ(img.data[4], 1.0);
    EXPECT_EQ(img.data[5], 1.0);
    write_bytes(dir / "bad.png", "garbage");
    try {
        load_image(dir / "bad.png");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::decode);
        EXPECT_NE(std::string(e.what()).find("bad.png"), std::string::npos);
    }
    EXPECT_THROW(save_image(img, dir / "missing" / "x.png"), Error);
}

TEST(MaskIo, RoundTripAndBinary) {
    TempDir dir("mask");
    MaskImage m{3, 2, {0, 1, 1, 0, 0, 1}};
    save_mask(m, dir / "m.png");
    const auto back = load_mask(dir / "m.png");
    EXPECT_EQ(back.labels, m.labels);
    EXPECT_TRUE(back.binary());
    EXPECT_FALSE((MaskImage{1, 1, {2}}).binary());
}

TEST(Scan, FiveImagesNoMasks) {
    TempDir dir("scan");
    for (const char* name : {"e", "a", "c", "b", "d"}) save_image(Image<double>(2, 2, 0.3), dir / (std::string(name) + ".png"));
    const auto r = scan_manifest(dir.path());
    ASSERT_EQ(r.manifest.size(), 5u);
    const char* expected[] = {"a", "b", "c", "d", "e"};
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(r.manifest.entries[i].id, expected[i]);
        EXPECT_FALSE(r.manifest.entries[i].mask);
    }
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Scan, OrderIndependentOfCreationOrder) {
    TempDir a("scanA"), b("scanB");
    std::vector<std::string> names{"x10", "x2", "y", "x1", "a_b"};
    for (const auto& n : names) save_image(Image<double>(2, 2, 0.1), a / (n + ".png"));
    std::reverse(names.begin(), names.end());
    for (const auto& n : names) save_image(Image<double>(2, 2, 0.1), b / (n + ".png"));
    const auto ma = scan_manifest(a.path()).manifest, mb = scan_manifest(b.path()).manifest;
    ASSERT_EQ(ma.size(), mb.size());
    for (std::size_t i = 0; i < ma.size(); ++i) EXPECT_EQ(ma.entries[i].id, mb.entries[i].id);
}

TEST(Scan, PairsMasksAndRejectsMismatchedDimensions) {
    TempDir dir("scanmask");
    save_image(Image<double>(4, 4, 0.2), dir / "good.png");
    save_mask(MaskImage{4, 4, std::vector<std::uint8_t>(16, 1)}, dir / "good_mask.png");
    save_image(Image<double>(4, 4, 0.2), dir / "bad.png");
    save_mask(MaskImage{4, 5, std::vector<std::uint8_t>(20, 0)}, dir / "bad_mask.png");
    save_mask(MaskImage{2, 2, std::vector<std::uint8_t>(4, 0)}, dir / "orphan_mask.png");
    const auto r = scan_manifest(dir.path());
    ASSERT_EQ(r.manifest.size(), 1u);
    EXPECT_EQ(r.manifest.entries[0].id, "good");
    ASSERT_TRUE(r.manifest.entries[0].mask);
    ASSERT_EQ(r.warnings.size(), 2u);
    EXPECT_NE(r.warnings[0].find("bad.png"), std::string::npos);
    EXPECT_NE(r.warnings[1].find("dangling"), std::string::npos);
}

TEST(Scan, EmptyDirectoryIsInvalidInput) {
    TempDir dir("scanempty");
    try {
        scan_manifest(dir.path());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
        EXPECT_EQ(exit_code(e.kind()), 3);
    }
    save_image(Image<double>(2, 2), dir / "a.png");
    EXPECT_THROW(scan_manifest(dir.path(), "*.jpg"), Error);
}

TEST(Manifest, WriteReadRoundTrip) {
    TempDir dir("manifest");
    const auto m = write_toy_dataset(dir / "set", 1, 3, 8, 8, true);
    const auto back = read_manifest(dir / "set" / "manifest.txt");
    EXPECT_EQ(back.entries, m.entries);
    const auto text = read_bytes(dir / "set" / "manifest.txt");
    const std::string s(text.begin(), text.end());
    EXPECT_NE(s.find("toy_0000\ttoy_0000.png\ttoy_0000_mask.png\n"), std::string::npos);
}

TEST(Manifest, DuplicateIdsAndBadLinesRejected) {
    TempDir dir("manifest");
    write_bytes(dir / "dup.txt", "a\ta.png\t-\na\tb.png\t-\n");
    EXPECT_THROW(read_manifest(dir / "dup.txt"), Error);
    write_bytes(dir / "short.txt", "a\ta.png\n");
    EXPECT_THROW(read_manifest(dir / "short.txt"), Error);
    write_bytes(dir / "ok.txt", "# split train\nimg\t/abs/img.png\t-\n");
    const auto m = read_manifest(dir / "ok.txt");
    EXPECT_EQ(m.split, "train");
    EXPECT_EQ(m.entries[0].image, fs::path("/abs/img.png"));
    EXPECT_FALSE(m.entries[0].mask);
}

TEST(Manifest, OpenDatasetAcceptsDirectoryOrFile) {
    TempDir dir("open");
    write_toy_dataset(dir / "set", 2, 2, 8, 8, false);
    fs::remove(dir / "set" / "manifest.txt");
    EXPECT_EQ(open_dataset(dir / "set").size(), 2u);
    EXPECT_THROW(open_dataset(dir / "nope"), Error);
}

TEST(Resize, IdentityAndConstantPreserved) {
    std::mt19937_64 rng(3);
    const auto img = random_image(rng, 8, 6);
    EXPECT_EQ(resize_bilinear(img, 8, 6), img);
    const auto c = resize_bilinear(Image<double>(10, 7, 0.25), 4, 5);
    for (double v : c.data) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(NetworkRange, ConversionRoundTrip) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 10000; ++i) {
        const double v = u(rng);
        EXPECT_NEAR(from_network(to_network(v)), v, 1e-12);
    }
    EXPECT_EQ(to_network(0.0), -1.0);
    EXPECT_EQ(to_network(1.0), 1.0);
}
