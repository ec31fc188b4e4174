#pragma once

// Procedural sky-and-cloud fixtures with stable colour statistics, used as
// stand-ins for real and synthetic photo sets in tests and desk-scale runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "colorspace/color_ops.hpp"
#include "colorspace/dataset.hpp"
#include "colorspace/random.hpp"

namespace colorspace {

namespace streams {
inline constexpr std::uint64_t toy = 0x746f79ULL;
}  // namespace streams

namespace detail {

/// Value noise on a (cells+1)² lattice with smoothstep interpolation.
class ValueNoise {
public:
    ValueNoise(std::size_t cells, Rng& rng) : cells_(cells), lattice_((cells + 1) * (cells + 1)) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& v : lattice_) v = u(rng);
    }

    double operator()(double y, double x) const {
        const double fy = y * static_cast<double>(cells_), fx = x * static_cast<double>(cells_);
        const std::size_t y0 = std::min(static_cast<std::size_t>(fy), cells_ - 1);
        const std::size_t x0 = std::min(static_cast<std::size_t>(fx), cells_ - 1);
        const double ty = smooth(fy - static_cast<double>(y0)), tx = smooth(fx - static_cast<double>(x0));
        auto at = [&](std::size_t r, std::size_t c) { return lattice_[r * (cells_ + 1) + c]; };
        const double top = at(y0, x0) * (1 - tx) + at(y0, x0 + 1) * tx;
        const double bottom = at(y0 + 1, x0) * (1 - tx) + at(y0 + 1, x0 + 1) * tx;
        return top * (1 - ty) + bottom * ty;
    }

private:
    static double smooth(double t) { return t * t * (3 - 2 * t); }
    std::size_t cells_;
    std::vector<double> lattice_;
};

}  // namespace detail

struct ToyStyle {
    double sky_top[3] = {0.22, 0.42, 0.78};
    double sky_horizon[3] = {0.62, 0.76, 0.92};
    double cloud[3] = {0.95, 0.95, 0.97};
    double cloud_shadow[3] = {0.62, 0.64, 0.70};
    double coverage = 0.5;  // cloud threshold on the noise field
    double jitter = 0.03;   // per-image colour jitter
};

/// Sky gradient with fractal-noise clouds. Image i depends only on (seed, i).
inline Image<double> toy_image(std::uint64_t seed, std::size_t index, std::size_t height, std::size_t width,
                               const ToyStyle& style = {}) {
    Rng rng = make_stream(seed, streams::toy, index);
    std::vector<detail::ValueNoise> octaves;
    for (std::size_t cells : {3, 6, 12, 24}) octaves.emplace_back(cells, rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double tint[3];
    for (double& t : tint) t = style.jitter * u(rng);
    const double coverage = style.coverage + 0.1 * u(rng);

    Image<double> img(height, width);
    for (std::size_t y = 0; y < height; ++y) {
        const double fy = (static_cast<double>(y) + 0.5) / static_cast<double>(height);
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = (static_cast<double>(x) + 0.5) / static_cast<double>(width);
            double n = 0, amp = 0.5, total = 0;
            for (const auto& o : octaves) {
                n += amp * o(fy, fx);
                total += amp;
                amp *= 0.5;
            }
            n /= total;
            const double density = std::clamp((n - coverage) / 0.18, 0.0, 1.0);
            const double shade = std::clamp((n - coverage) / 0.35, 0.0, 1.0);
            for (std::size_t c = 0; c < 3; ++c) {
                const double sky = style.sky_top[c] * (1 - fy) + style.sky_horizon[c] * fy;
                const double cloud = style.cloud[c] * (1 - shade) + style.cloud_shadow[c] * shade;
                img.at(y, x, c) = std::clamp(sky * (1 - density) + cloud * density + tint[c], 0.0, 1.0);
            }
        }
    }
    return img;
}

/// Binary cloud mask for a toy image (cloud = 1).
inline MaskImage toy_mask(const Image<double>& img) {
    MaskImage m{img.height, img.width, std::vector<std::uint8_t>(img.pixels())};
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        const double r = img.data[3 * p], b = img.data[3 * p + 2];
        m.labels[p] = (b - r) < 0.15 ? 1 : 0;
    }
    return m;
}

inline std::vector<Image<double>> toy_images(std::uint64_t seed, std::size_t count, std::size_t height,
                                             std::size_t width, const ToyStyle& style = {}) {
    std::vector<Image<double>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(toy_image(seed, i, height, width, style));
    return out;
}

/// Writes toy_0000.png (+ toy_0000_mask.png when `masks`) into `dir`.
inline DatasetManifest write_toy_dataset(const fs::path& dir, std::uint64_t seed, std::size_t count,
                                         std::size_t height, std::size_t width, bool masks,
                                         const AdjustParams& adjust = {}, const ToyStyle& style = {}) {
    fs::create_directories(dir);
    DatasetManifest m;
    m.root = dir;
    for (std::size_t i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "toy_%04zu", i);
        const Image<double> base = toy_image(seed, i, height, width, style);
        ManifestEntry e{name, dir / (std::string(name) + ".png"), std::nullopt};
        save_image(ops_compose(base, adjust), e.image);
        if (masks) {
            e.mask = dir / (std::string(name) + mask_suffix + ".png");
            save_mask(toy_mask(base), *e.mask);
        }
        m.entries.push_back(std::move(e));
    }
    write_manifest(m, dir / "manifest.txt");
    return m;
}

}  // namespace colorspace
