#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "colorspace/color_ops.hpp"
#include "colorspace/dataset.hpp"
#include "colorspace/error.hpp"
#include "colorspace/random.hpp"

namespace colorspace {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Standard normal quantile: Acklam's rational approximation (relative error
/// ~1e-9) polished by two Newton steps on the CDF.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::invalid_probability, "quantile needs p in (0,1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (p <= 1 - p_low) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        const double q = std::sqrt(-2 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    for (int i = 0; i < 2; ++i) {
        // Upper tail in complement form keeps precision for p near 1.
        const double err = p > 0.5 ? (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2) : normal_cdf(x) - p;
        x -= err / normal_pdf(x);
    }
    return x;
}

/// Width of the zero-mean Gaussian placing probability mass p on [-1, 1].
inline double sigma_from_p(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::invalid_probability, "p must lie in (0,1)");
    return 1.0 / normal_quantile((1.0 + p) / 2.0);
}

enum class SamplingMode { independent, shared };
enum class OutOfRange { clip, reject };

struct SamplerConfig {
    double p = 0.99;
    std::uint64_t seed = 0;
    SamplingMode mode = SamplingMode::independent;
    OutOfRange out_of_range = OutOfRange::clip;
    /// Test hook: replaces sigma_from_p(p) when set (0 forces α = 0).
    std::optional<double> sigma_override;

    double sigma() const {
        if (sigma_override) return *sigma_override;
        return sigma_from_p(p);
    }
};

namespace detail {

inline double draw_component(std::normal_distribution<double>& normal, Rng& rng, OutOfRange policy) {
    double v = normal(rng);
    if (policy == OutOfRange::reject)
        while (v < -1.0 || v > 1.0) v = normal(rng);
    return v;
}

}  // namespace detail

/// Raw (pre-clip) draw for the stream `index`.
inline AdjustParams draw_raw_params(const SamplerConfig& config, std::uint64_t index) {
    const double sigma = config.sigma();
    if (sigma == 0.0) return {};
    Rng rng = make_stream(config.seed, streams::variants, index);
    std::normal_distribution<double> normal(0.0, sigma);
    AdjustParams a;
    a.brightness = detail::draw_component(normal, rng, config.out_of_range);
    if (config.mode == SamplingMode::shared) {
        a.saturation = a.contrast = a.brightness;
    } else {
        a.saturation = detail::draw_component(normal, rng, config.out_of_range);
        a.contrast = detail::draw_component(normal, rng, config.out_of_range);
    }
    return a;
}

/// Clipped parameters for stream `index`; fully determined by (seed, index).
inline AdjustParams draw_params(const SamplerConfig& config, std::uint64_t index) {
    return clipped(draw_raw_params(config, index));
}

inline std::vector<AdjustParams> sample_params(const SamplerConfig& config, std::size_t n,
                                               std::uint64_t first_index = 0) {
    std::vector<AdjustParams> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(draw_params(config, first_index + i));
    return out;
}

struct VariantRecord {
    std::string variant_id;
    std::string source_id;
    AdjustParams params;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;

    friend bool operator==(const VariantRecord&, const VariantRecord&) = default;
};

/// One tab-separated line; α printed with 17 significant digits so replay
/// reproduces the exact doubles.
inline std::string format_record(const VariantRecord& r) {
    std::ostringstream out;
    out << std::setprecision(17) << r.variant_id << '\t' << r.source_id << '\t' << r.params.brightness << '\t'
        << r.params.saturation << '\t' << r.params.contrast << '\t' << r.seed << '\t' << r.index;
    return out.str();
}

inline VariantRecord parse_record(const std::string& line) {
    std::istringstream in(line);
    VariantRecord r;
    std::string b, s, c;
    if (!std::getline(in, r.variant_id, '\t') || !std::getline(in, r.source_id, '\t') || !std::getline(in, b, '\t') ||
        !std::getline(in, s, '\t') || !std::getline(in, c, '\t') || !(in >> r.seed >> r.index))
        throw Error(ErrorKind::invalid_input, "malformed variant record: " + line);
    r.params = {std::stod(b), std::stod(s), std::stod(c)};
    return r;
}

inline void write_records(const std::vector<VariantRecord>& records, const fs::path& path) {
    std::string text = "# variant_id\tsource_id\talpha_b\talpha_s\talpha_c\tseed\tindex\n";
    for (const auto& r : records) text += format_record(r) + '\n';
    write_bytes(path, text);
}

inline std::vector<VariantRecord> read_records(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot read records " + path.string());
    std::vector<VariantRecord> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') out.push_back(parse_record(line));
    return out;
}

struct AdversarialSet {
    DatasetManifest manifest;
    std::vector<VariantRecord> records;
    std::vector<std::string> errors;
};

/// Writes `multiplier` colour variants of every image into `out_dir`
/// (PNG, masks copied byte-for-byte) plus `manifest.txt` and `variants.txt`.
/// Variant k of source i uses stream i·multiplier + k.
inline AdversarialSet make_adversarial_set(const DatasetManifest& real, const SamplerConfig& config,
                                           std::size_t multiplier, const fs::path& out_dir) {
    if (real.empty()) throw Error(ErrorKind::invalid_input, "empty source manifest");
    if (multiplier < 1) throw Error(ErrorKind::invalid_input, "multiplier must be >= 1");
    config.sigma();  // validates p
    fs::create_directories(out_dir);
    AdversarialSet result;
    result.manifest.root = out_dir;
    result.manifest.split = real.split + "-variants";
    for (std::size_t i = 0; i < real.size(); ++i) {
        const ManifestEntry& src = real.entries[i];
        Image<double> image;
        try {
            image = load_image(src.image);
        } catch (const Error& e) {
            result.errors.push_back(e.what());
            continue;
        }
        for (std::size_t k = 0; k < multiplier; ++k) {
            const std::uint64_t index = i * multiplier + k;
            VariantRecord rec{src.id + "_v" + std::to_string(k), src.id, draw_params(config, index), config.seed,
                              index};
            ManifestEntry entry{rec.variant_id, out_dir / (rec.variant_id + ".png"), std::nullopt};
            save_image(ops_compose(image, rec.params), entry.image);
            if (src.mask) {
                entry.mask = out_dir / (rec.variant_id + mask_suffix + ".png");
                copy_mask(*src.mask, *entry.mask);
            }
            result.manifest.entries.push_back(std::move(entry));
            result.records.push_back(std::move(rec));
        }
    }
    write_manifest(result.manifest, out_dir / "manifest.txt");
    write_records(result.records, out_dir / "variants.txt");
    return result;
}

/// Re-applies recorded parameters to their sources, writing into `out_dir`.
inline DatasetManifest replay_records(const std::vector<VariantRecord>& records, const DatasetManifest& sources,
                                      const fs::path& out_dir) {
    fs::create_directories(out_dir);
    DatasetManifest out;
    out.root = out_dir;
    out.split = sources.split + "-replay";
    for (const VariantRecord& r : records) {
        auto it = std::find_if(sources.entries.begin(), sources.entries.end(),
                               [&](const ManifestEntry& e) { return e.id == r.source_id; });
        if (it == sources.entries.end()) throw Error(ErrorKind::invalid_input, "unknown source id " + r.source_id);
        ManifestEntry entry{r.variant_id, out_dir / (r.variant_id + ".png"), std::nullopt};
        save_image(ops_compose(load_image(it->image), r.params), entry.image);
        if (it->mask) {
            entry.mask = out_dir / (r.variant_id + mask_suffix + ".png");
            copy_mask(*it->mask, *entry.mask);
        }
        out.entries.push_back(std::move(entry));
    }
    write_manifest(out, out_dir / "manifest.txt");
    return out;
}

}  // namespace colorspace
