#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "colorspace/color_ops.hpp"
#include "colorspace/dataset.hpp"
#include "colorspace/error.hpp"
#include "colorspace/hash.hpp"
#include "colorspace/random.hpp"

namespace colorspace {

enum class DescriptorKind { pixel, patch };

struct SwdConfig {
    DescriptorKind descriptor = DescriptorKind::patch;
    std::size_t patch_size = 7;
    std::size_t samples_per_image = 128;
    std::size_t projections = 256;
    std::uint64_t seed = 0;

    std::string describe() const {
        std::ostringstream out;
        out << "descriptor=" << (descriptor == DescriptorKind::patch ? "patch" + std::to_string(patch_size) : "pixel")
            << " samples=" << samples_per_image << " projections=" << projections << " seed=" << seed;
        return out.str();
    }

    std::size_t dimension() const { return descriptor == DescriptorKind::patch ? patch_size * patch_size * 3 : 3; }
};

/// Row-major descriptor matrix.
struct Descriptors {
    std::size_t dim = 0;
    std::vector<double> values;

    std::size_t count() const { return dim ? values.size() / dim : 0; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

/// Samples descriptors from every image. Positions for image i come from
/// stream (seed, i), so two sets with same-sized images share positions.
template <class T>
Descriptors extract_descriptors(const std::vector<Image<T>>& images, const SwdConfig& cfg) {
    if (images.empty()) throw Error(ErrorKind::invalid_input, "swd: empty image set");
    const std::size_t k = cfg.descriptor == DescriptorKind::patch ? cfg.patch_size : 1;
    Descriptors d;
    d.dim = cfg.dimension();
    d.values.reserve(images.size() * cfg.samples_per_image * d.dim);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const Image<T>& img = images[i];
        if (img.height < k || img.width < k) throw Error(ErrorKind::invalid_input, "swd: image smaller than patch");
        Rng rng = make_stream(cfg.seed, streams::swd_patch, i);
        std::uniform_int_distribution<std::size_t> ys(0, img.height - k), xs(0, img.width - k);
        for (std::size_t s = 0; s < cfg.samples_per_image; ++s) {
            const std::size_t y0 = ys(rng), x0 = xs(rng);
            for (std::size_t y = 0; y < k; ++y)
                for (std::size_t x = 0; x < k; ++x)
                    for (std::size_t c = 0; c < 3; ++c) d.values.push_back(static_cast<double>(img.at(y0 + y, x0 + x, c)));
        }
    }
    return d;
}

/// Unit directions drawn uniformly on the sphere.
inline std::vector<std::vector<double>> random_directions(std::size_t dim, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw Error(ErrorKind::invalid_input, "swd: need at least one projection");
    Rng rng = make_stream(seed, streams::swd_proj);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> dirs(count, std::vector<double>(dim));
    for (auto& d : dirs) {
        double norm = 0;
        do {
            norm = 0;
            for (auto& v : d) {
                v = normal(rng);
                norm += v * v;
            }
        } while (norm == 0);
        norm = std::sqrt(norm);
        for (auto& v : d) v /= norm;
    }
    return dirs;
}

/// 1-D Wasserstein-1 between equal-size samples: mean |a_(i) - b_(i)| of the
/// order statistics.
inline double wasserstein1_sorted(std::vector<double> a, std::vector<double> b) {
    if (a.size() != b.size() || a.empty()) throw Error(ErrorKind::invalid_input, "w1: need equal, non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double total = 0;
    for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
    return total / static_cast<double>(a.size());
}

namespace detail {

inline Descriptors subsample(const Descriptors& d, std::size_t m, std::uint64_t seed) {
    std::vector<std::size_t> idx(d.count());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_stream(seed, streams::swd_subsample);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    Descriptors out;
    out.dim = d.dim;
    for (std::size_t i : idx) out.values.insert(out.values.end(), d.row(i).begin(), d.row(i).end());
    return out;
}

inline std::vector<double> project(const Descriptors& d, const std::vector<double>& dir) {
    std::vector<double> out(d.count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double* r = d.values.data() + i * d.dim;
        double acc = 0;
        for (std::size_t k = 0; k < d.dim; ++k) acc += r[k] * dir[k];
        out[i] = acc;
    }
    return out;
}

}  // namespace detail

/// Mean over `directions` of the 1-D W1 between projected descriptors. The
/// larger set is subsampled (seeded) to the smaller set's size.
inline double sliced_wasserstein(const Descriptors& a, const Descriptors& b,
                                 const std::vector<std::vector<double>>& directions, std::uint64_t seed = 0) {
    if (a.dim != b.dim) throw Error(ErrorKind::invalid_shape, "swd: descriptor dimensions differ");
    if (a.count() < 2 || b.count() < 2) throw Error(ErrorKind::invalid_input, "swd: need at least 2 descriptors per set");
    if (directions.empty()) throw Error(ErrorKind::invalid_input, "swd: need at least one projection");
    const std::size_t m = std::min(a.count(), b.count());
    const Descriptors sa = a.count() > m ? detail::subsample(a, m, seed) : a;
    const Descriptors sb = b.count() > m ? detail::subsample(b, m, seed) : b;
    double total = 0;
    for (const auto& dir : directions) {
        if (dir.size() != a.dim) throw Error(ErrorKind::invalid_shape, "swd: projection dimension mismatch");
        total += wasserstein1_sorted(detail::project(sa, dir), detail::project(sb, dir));
    }
    return total / static_cast<double>(directions.size());
}

template <class T>
double swd(const std::vector<Image<T>>& set_a, const std::vector<Image<T>>& set_b, const SwdConfig& cfg) {
    const Descriptors a = extract_descriptors(set_a, cfg);
    const Descriptors b = extract_descriptors(set_b, cfg);
    return sliced_wasserstein(a, b, random_directions(cfg.dimension(), cfg.projections, cfg.seed), cfg.seed);
}

inline std::vector<Image<double>> load_images(const DatasetManifest& m) {
    std::vector<Image<double>> out;
    out.reserve(m.size());
    for (const auto& e : m.entries) out.push_back(load_image(e.image));
    return out;
}

inline double swd(const DatasetManifest& set_a, const DatasetManifest& set_b, const SwdConfig& cfg) {
    if (set_a.empty() || set_b.empty()) throw Error(ErrorKind::invalid_input, "swd: empty dataset");
    return swd(load_images(set_a), load_images(set_b), cfg);
}

/// The single plain-text line printed by the swd command.
inline std::string format_swd_record(const SwdConfig& cfg, double distance) {
    std::ostringstream out;
    out.precision(17);
    out << "swd config=" << hex64(fnv1a(cfg.describe())) << ' ' << cfg.describe() << " distance=" << distance;
    return out.str();
}

struct AccuracyReport {
    double accuracy = 0;           // pooled over both classes
    double balanced_accuracy = 0;  // mean of the per-class rates
    double real_rate = 0;          // fraction of real scored >= 0.5
    double variant_rate = 0;       // fraction of variants scored < 0.5
    std::size_t n_real = 0;
    std::size_t n_variant = 0;
};

/// Threshold at 0.5: score >= 0.5 means "real".
inline AccuracyReport classifier_accuracy(std::span<const double> real_scores, std::span<const double> variant_scores) {
    if (real_scores.empty() || variant_scores.empty())
        throw Error(ErrorKind::invalid_input, "accuracy needs both real and variant samples");
    AccuracyReport r;
    r.n_real = real_scores.size();
    r.n_variant = variant_scores.size();
    const auto hits_real = std::count_if(real_scores.begin(), real_scores.end(), [](double s) { return s >= 0.5; });
    const auto hits_var = std::count_if(variant_scores.begin(), variant_scores.end(), [](double s) { return s < 0.5; });
    r.real_rate = static_cast<double>(hits_real) / static_cast<double>(r.n_real);
    r.variant_rate = static_cast<double>(hits_var) / static_cast<double>(r.n_variant);
    r.accuracy = static_cast<double>(hits_real + hits_var) / static_cast<double>(r.n_real + r.n_variant);
    r.balanced_accuracy = 0.5 * (r.real_rate + r.variant_rate);
    return r;
}

/// `scorer` maps a vector of images to per-image probabilities of "real".
template <class Scorer, class T>
AccuracyReport classifier_accuracy(Scorer&& scorer, const std::vector<Image<T>>& real,
                                   const std::vector<Image<T>>& variants) {
    const std::vector<double> a = scorer(real);
    const std::vector<double> b = scorer(variants);
    return classifier_accuracy(std::span<const double>(a), std::span<const double>(b));
}

}  // namespace colorspace
