#pragma once

// Run configuration: "key = value" lines with '#' comments. Every run echoes
// its fully resolved configuration so the file alone reproduces the run.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "colorspace/error.hpp"
#include "colorspace/metrics.hpp"
#include "colorspace/networks.hpp"
#include "colorspace/sampler.hpp"
#include "colorspace/trainer.hpp"

namespace colorspace {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::string config_error(const std::string& key, const std::string& value, const std::string& why) {
    return "config '" + key + " = " + value + "': " + why;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw Error(ErrorKind::usage, config_error(key, value, "not a number"));
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw Error(ErrorKind::usage, config_error(key, value, "expected true or false"));
}

inline std::vector<std::size_t> parse_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::stringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_number<std::size_t>(key, trim(item)));
    if (out.empty()) throw Error(ErrorKind::usage, config_error(key, value, "empty list"));
    return out;
}

inline std::string join(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

inline std::string exact(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace detail

struct RunConfig {
    std::uint64_t seed = 0;
    // sampler
    double p = 0.99;
    SamplingMode mode = SamplingMode::independent;
    OutOfRange out_of_range = OutOfRange::clip;
    std::size_t multiplier = 1;
    // training
    std::size_t batch = 24;
    std::size_t iterations = 3000;
    double lr = 1e-3;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    bool freeze_d = true;
    double holdout = 0.1;
    std::size_t eval_every = 250;
    std::size_t eval_variants = 4;
    double dequantize = 1.0;  // discriminator input noise width, in 8-bit levels
    GeneratorLoss g_loss = GeneratorLoss::non_saturating;
    bool progress = true;
    // networks
    std::size_t height = 64;
    std::size_t width = 64;
    std::vector<std::size_t> d_channels{64, 128, 256, 512};
    std::vector<std::size_t> g_channels{32, 64, 128, 256, 256};
    // swd
    DescriptorKind swd_descriptor = DescriptorKind::patch;
    std::size_t swd_patch = 7;
    std::size_t swd_samples = 128;
    std::size_t swd_projections = 256;

    void set(const std::string& key, const std::string& value) {
        using namespace detail;
        auto num = [&]<class T>(T& field) { field = parse_number<T>(key, value); };
        if (key == "seed") num(seed);
        else if (key == "p") num(p);
        else if (key == "mode") {
            if (value == "independent") mode = SamplingMode::independent;
            else if (value == "shared") mode = SamplingMode::shared;
            else throw Error(ErrorKind::usage, config_error(key, value, "expected independent or shared"));
        } else if (key == "out_of_range") {
            if (value == "clip") out_of_range = OutOfRange::clip;
            else if (value == "reject") out_of_range = OutOfRange::reject;
            else throw Error(ErrorKind::usage, config_error(key, value, "expected clip or reject"));
        } else if (key == "multiplier") num(multiplier);
        else if (key == "batch") num(batch);
        else if (key == "iterations") num(iterations);
        else if (key == "lr") num(lr);
        else if (key == "beta1") num(beta1);
        else if (key == "beta2") num(beta2);
        else if (key == "adam_eps") num(adam_eps);
        else if (key == "freeze_d") freeze_d = parse_bool(key, value);
        else if (key == "holdout") num(holdout);
        else if (key == "eval_every") num(eval_every);
        else if (key == "eval_variants") num(eval_variants);
        else if (key == "dequantize") num(dequantize);
        else if (key == "g_loss") {
            if (value == "non_saturating") g_loss = GeneratorLoss::non_saturating;
            else if (value == "literal") g_loss = GeneratorLoss::literal;
            else throw Error(ErrorKind::usage, config_error(key, value, "expected non_saturating or literal"));
        } else if (key == "progress") progress = parse_bool(key, value);
        else if (key == "height") num(height);
        else if (key == "width") num(width);
        else if (key == "d_channels") d_channels = parse_list(key, value);
        else if (key == "g_channels") g_channels = parse_list(key, value);
        else if (key == "swd_descriptor") {
            if (value == "patch") swd_descriptor = DescriptorKind::patch;
            else if (value == "pixel") swd_descriptor = DescriptorKind::pixel;
            else throw Error(ErrorKind::usage, config_error(key, value, "expected patch or pixel"));
        } else if (key == "swd_patch") num(swd_patch);
        else if (key == "swd_samples") num(swd_samples);
        else if (key == "swd_projections") num(swd_projections);
        else throw Error(ErrorKind::usage, "unknown config key '" + key + "'");
    }

    /// Applies "key = value" text; later lines win.
    void merge_text(const std::string& text, const std::string& origin = "config") {
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorKind::usage, origin + ":" + std::to_string(lineno) + ": expected key = value");
            set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
        }
    }

    void merge_file(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorKind::usage, "cannot read config " + path.string());
        std::stringstream buf;
        buf << in.rdbuf();
        merge_text(buf.str(), path.string());
    }

    void validate() const {
        sampler().sigma();
        train().validate();
        d_spec();
        g_spec();
        if (multiplier < 1) throw Error(ErrorKind::usage, "multiplier must be >= 1");
        if (swd_projections < 1) throw Error(ErrorKind::usage, "swd_projections must be >= 1");
        if (swd_samples < 1) throw Error(ErrorKind::usage, "swd_samples must be >= 1");
    }

    SamplerConfig sampler() const {
        SamplerConfig s;
        s.p = p;
        s.seed = seed;
        s.mode = mode;
        s.out_of_range = out_of_range;
        return s;
    }

    NetworkSpec d_spec() const { return Discriminator<float>::validated(discriminator_spec(height, width, d_channels)); }
    NetworkSpec g_spec() const { return Generator<float>::validated(generator_spec(height, width, g_channels)); }

    TrainConfig train() const {
        TrainConfig t;
        t.batch = batch;
        t.iterations = iterations;
        t.adam = {lr, beta1, beta2, adam_eps};
        t.sampler = sampler();
        t.freeze_d = freeze_d;
        t.seed = seed;
        t.holdout_fraction = holdout;
        t.eval_every = eval_every;
        t.eval_variants = eval_variants;
        t.dequantize = dequantize / 255.0;
        t.g_loss = g_loss;
        t.d_spec = d_spec();
        t.g_spec = g_spec();
        t.progress = progress;
        return t;
    }

    SwdConfig swd() const {
        SwdConfig s;
        s.descriptor = swd_descriptor;
        s.patch_size = swd_patch;
        s.samples_per_image = swd_samples;
        s.projections = swd_projections;
        s.seed = seed;
        return s;
    }

    /// Resolved configuration; parsing it back yields an identical RunConfig.
    std::string format() const {
        using detail::exact;
        std::ostringstream out;
        out << "# resolved run configuration\n"
            << "seed = " << seed << '\n'
            << "p = " << exact(p) << '\n'
            << "mode = " << (mode == SamplingMode::independent ? "independent" : "shared") << '\n'
            << "out_of_range = " << (out_of_range == OutOfRange::clip ? "clip" : "reject") << '\n'
            << "multiplier = " << multiplier << '\n'
            << "batch = " << batch << '\n'
            << "iterations = " << iterations << '\n'
            << "lr = " << exact(lr) << '\n'
            << "beta1 = " << exact(beta1) << '\n'
            << "beta2 = " << exact(beta2) << '\n'
            << "adam_eps = " << exact(adam_eps) << '\n'
            << "freeze_d = " << (freeze_d ? "true" : "false") << '\n'
            << "holdout = " << exact(holdout) << '\n'
            << "eval_every = " << eval_every << '\n'
            << "eval_variants = " << eval_variants << '\n'
            << "dequantize = " << exact(dequantize) << '\n'
            << "g_loss = " << (g_loss == GeneratorLoss::non_saturating ? "non_saturating" : "literal") << '\n'
            << "progress = " << (progress ? "true" : "false") << '\n'
            << "height = " << height << '\n'
            << "width = " << width << '\n'
            << "d_channels = " << detail::join(d_channels) << '\n'
            << "g_channels = " << detail::join(g_channels) << '\n'
            << "swd_descriptor = " << (swd_descriptor == DescriptorKind::patch ? "patch" : "pixel") << '\n'
            << "swd_patch = " << swd_patch << '\n'
            << "swd_samples = " << swd_samples << '\n'
            << "swd_projections = " << swd_projections << '\n';
        return out.str();
    }
};

}  // namespace colorspace
