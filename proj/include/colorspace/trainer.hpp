#pragma once

// Two-stage adaptation training.
//   Stage 1: the discriminator learns real images (label 1) versus random
//            colour variants of the same real images (label 0). It never
//            sees synthetic data.
//   Stage 2: the generator predicts (α_b, α_s, α_c) per synthetic image and is
//            trained so the frozen discriminator scores ops(x, G(x)) as real.
//            Gradients reach G through the analytic α-derivatives of ops.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "colorspace/autodiff.hpp"
#include "colorspace/color_ops.hpp"
#include "colorspace/dataset.hpp"
#include "colorspace/error.hpp"
#include "colorspace/metrics.hpp"
#include "colorspace/networks.hpp"
#include "colorspace/optim.hpp"
#include "colorspace/random.hpp"
#include "colorspace/sampler.hpp"

namespace colorspace {

enum class GeneratorLoss {
    non_saturating,  // -log D(g(x))
    literal,         // log(1 - D(g(x)))
};

struct TrainConfig {
    std::size_t batch = 24;
    std::size_t iterations = 3000;
    AdamConfig adam{1e-3, 0.5, 0.999, 1e-8};
    SamplerConfig sampler;
    bool freeze_d = true;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.1;
    std::size_t eval_every = 250;
    std::size_t eval_variants = 4;  // variants per held-out real image
    // Width of uniform noise added to every training input of D, in [0,1]
    // intensity units. Real images arrive on the 8-bit grid while variants and
    // adapted images do not; without noise D can score the grid itself.
    double dequantize = 1.0 / 255;
    GeneratorLoss g_loss = GeneratorLoss::non_saturating;
    NetworkSpec d_spec = discriminator_spec();
    NetworkSpec g_spec = generator_spec();
    bool progress = false;  // report to stderr

    void validate() const {
        if (batch < 1) throw Error(ErrorKind::usage, "batch must be >= 1");
        if (iterations < 1) throw Error(ErrorKind::usage, "iterations must be >= 1");
        if (!(adam.lr > 0)) throw Error(ErrorKind::usage, "lr must be > 0");
        if (holdout_fraction < 0 || holdout_fraction >= 1) throw Error(ErrorKind::usage, "holdout must lie in [0,1)");
        if (!(dequantize >= 0)) throw Error(ErrorKind::usage, "dequantize must be >= 0");
    }
};

struct LogRow {
    std::size_t iteration = 0;
    std::string stage;
    std::string split;  // train | test
    double d_loss = std::nan("");
    double g_loss = std::nan("");
    double metric = std::nan("");  // test rows: held-out D accuracy (stage 1) or mean D score (stage 2)
};

struct TrainLog {
    std::string label;
    std::vector<LogRow> rows;
    double wall_seconds = 0;

    void append(LogRow row) { rows.push_back(std::move(row)); }

    std::string format() const {
        std::ostringstream out;
        out << "# " << label << '\n' << "# iteration\tstage\tsplit\td_loss\tg_loss\tmetric\n";
        out << std::setprecision(9);
        for (const auto& r : rows)
            out << r.iteration << '\t' << r.stage << '\t' << r.split << '\t' << r.d_loss << '\t' << r.g_loss << '\t'
                << r.metric << '\n';
        out << "# wall_seconds " << wall_seconds << '\n';
        return out.str();
    }
};

/// Thrown on a non-finite loss or gradient; carries the last good weights.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, Checkpoint last_good)
        : Error(ErrorKind::divergence, what), last_good_(std::move(last_good)) {}
    const Checkpoint& last_good() const noexcept { return last_good_; }

private:
    Checkpoint last_good_;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> holdout;
};

/// Seeded split reserving round(n·fraction) images (at most n-1) for test curves.
inline Split make_split(std::size_t n, double fraction, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_stream(seed, streams::holdout);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t hold = static_cast<std::size_t>(std::lround(static_cast<double>(n) * fraction));
    hold = std::min(hold, n > 0 ? n - 1 : 0);
    Split s;
    s.holdout.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(hold));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(hold), idx.end());
    std::sort(s.holdout.begin(), s.holdout.end());
    std::sort(s.train.begin(), s.train.end());
    return s;
}

/// Loads every manifest image resized to the network resolution.
inline std::vector<Image<double>> load_resized(const DatasetManifest& m, std::size_t height, std::size_t width) {
    if (m.empty()) throw Error(ErrorKind::invalid_input, "empty dataset");
    std::vector<Image<double>> out;
    out.reserve(m.size());
    for (const auto& e : m.entries) out.push_back(resize_bilinear(load_image(e.image), height, width));
    return out;
}

namespace detail {

/// Adds U(-w/2, w/2) in image units to a network-range batch (2x - 1).
inline void add_dequantization(Tensor<float>& input, double width, std::uint64_t seed, std::uint64_t it,
                               std::uint64_t slot) {
    if (width == 0) return;
    Rng rng = make_stream(seed, streams::dequantize, 4 * it + slot);
    std::uniform_real_distribution<double> u(-width, width);  // doubled for the network range
    for (float& v : input.values()) v += static_cast<float>(u(rng));
}

inline std::size_t pick(Rng& rng, const std::vector<std::size_t>& pool) {
    std::uniform_int_distribution<std::size_t> u(0, pool.size() - 1);
    return pool[u(rng)];
}

template <class T>
std::vector<Tensor<T>> snapshot(const std::vector<Parameter<T>*>& params) {
    std::vector<Tensor<T>> out;
    for (const auto* p : params) out.push_back(p->value);
    return out;
}

template <class T>
void restore(const std::vector<Parameter<T>*>& params, const std::vector<Tensor<T>>& values) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = values[k];
}

inline void progress(const TrainConfig& cfg, const std::string& stage, std::size_t it, double loss) {
    if (cfg.progress) std::cerr << stage << " iter " << it << "/" << cfg.iterations << " loss " << loss << '\n';
}

/// Mean BCE from probabilities, matching bce_loss.
inline double mean_bce(const std::vector<double>& scores, double target) {
    double total = 0;
    for (double p : scores) {
        const double q = std::clamp(p, bce_clamp, 1 - bce_clamp);
        total -= target * std::log(q) + (1 - target) * std::log(1 - q);
    }
    return total / static_cast<double>(scores.size());
}

}  // namespace detail

struct Stage1Result {
    Discriminator<float> d;
    Adam<float> optimizer;
    TrainLog log;
    AccuracyReport holdout;  // zero-sized when no images are held out
    std::size_t iterations = 0;

    Checkpoint checkpoint(std::uint64_t seed) { return make_checkpoint(d, &optimizer, iterations, seed, log.label); }
};

/// Held-out real images with `per_image` fixed colour variants each.
inline std::pair<std::vector<Image<double>>, std::vector<Image<double>>> holdout_pairs(
    const std::vector<Image<double>>& real, const std::vector<std::size_t>& holdout, const TrainConfig& cfg) {
    SamplerConfig s = cfg.sampler;
    s.seed = stream_seed(cfg.seed, streams::holdout, 1);
    std::vector<Image<double>> reals, variants;
    for (std::size_t i : holdout) {
        reals.push_back(real[i]);
        for (std::size_t k = 0; k < cfg.eval_variants; ++k)
            variants.push_back(ops_compose(real[i], draw_params(s, i * cfg.eval_variants + k)));
    }
    return {reals, variants};
}

/// Stage 1: discriminator on real vs colour-randomized real images.
/// Half of each batch is real, half variants generated on the fly.
inline Stage1Result train_stage1(const std::vector<Image<double>>& real, const TrainConfig& cfg) {
    cfg.validate();
    if (real.empty()) throw Error(ErrorKind::invalid_input, "stage 1 needs a non-empty real set");
    cfg.sampler.sigma();
    const auto start = std::chrono::steady_clock::now();
    Stage1Result r{Discriminator<float>(cfg.d_spec), Adam<float>(cfg.adam), {}, {}, 0};
    r.d.initialize(cfg.seed);
    r.log.label = "stage1 discriminator p=" + std::to_string(cfg.sampler.p);
    const Split split = make_split(real.size(), cfg.holdout_fraction, cfg.seed);
    const auto [hold_real, hold_var] = holdout_pairs(real, split.holdout, cfg);
    auto params = r.d.net().parameter_ptrs();
    const std::size_t n_real = (cfg.batch + 1) / 2, n_var = cfg.batch - n_real;
    Tensor<float> labels(Shape{cfg.batch, 1});
    for (std::size_t i = 0; i < n_real; ++i) labels[i] = 1.0f;

    auto evaluate = [&](std::size_t it) {
        if (hold_real.empty()) return;
        const auto sr = r.d.score(hold_real);
        const auto sv = r.d.score(hold_var);
        r.holdout = classifier_accuracy(std::span<const double>(sr), std::span<const double>(sv));
        // Balanced test loss: each class weighted equally.
        const double loss = 0.5 * (detail::mean_bce(sr, 1.0) + detail::mean_bce(sv, 0.0));
        r.log.append({it, "stage1", "test", loss, std::nan(""), r.holdout.balanced_accuracy});
    };

    evaluate(0);
    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        Rng rng = make_stream(cfg.seed, streams::stage1, it);
        SamplerConfig s = cfg.sampler;
        s.seed = stream_seed(cfg.seed, streams::stage1, it);
        std::vector<Image<double>> batch;
        batch.reserve(cfg.batch);
        for (std::size_t i = 0; i < n_real; ++i) batch.push_back(real[detail::pick(rng, split.train)]);
        for (std::size_t i = 0; i < n_var; ++i)
            batch.push_back(ops_compose(real[detail::pick(rng, split.train)], draw_params(s, i)));

        const auto before = detail::snapshot(params);
        r.d.net().zero_grad();
        Graph<float> g;
        Tensor<float> input = to_batch<float>(batch);
        detail::add_dequantization(input, cfg.dequantize, cfg.seed, it, 0);
        Var x = g.constant(std::move(input));
        auto out = r.d.forward(g, x, true);
        Var loss = bce_with_logits(g, out.pre_activation, labels);
        const double lv = g.value(loss)[0];
        try {
            if (!std::isfinite(lv)) throw Error(ErrorKind::divergence, "stage 1 loss is not finite at iteration " +
                                                                          std::to_string(it));
            g.backward(loss);
            r.optimizer.step(params);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::divergence) throw;
            detail::restore(params, before);
            throw TrainingDiverged(e.what(), make_checkpoint(r.d, static_cast<Adam<float>*>(nullptr), it - 1, cfg.seed,
                                                             r.log.label));
        }
        r.iterations = it;
        r.log.append({it, "stage1", "train", lv, std::nan(""), std::nan("")});
        if (it % cfg.eval_every == 0 || it == cfg.iterations) {
            evaluate(it);
            detail::progress(cfg, "stage1", it, lv);
        }
    }
    r.log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

struct Stage2Result {
    Generator<float> g;
    Adam<float> optimizer;
    Discriminator<float> d;  // bitwise unchanged when freeze_d
    TrainLog log;
    std::size_t iterations = 0;

    Checkpoint checkpoint(std::uint64_t seed) { return make_checkpoint(g, &optimizer, iterations, seed, log.label); }
};

inline std::string stage2_label(bool freeze_d) {
    return freeze_d ? "stage2 generator, discriminator fixed" : "stage2 generator, discriminator non-fixed (ablation)";
}

namespace detail {

/// Adapted images for a batch plus d(loss)/d(α) given d(loss)/d(network input).
struct AdaptedBatch {
    std::vector<ImageJet<double>> jets;
    Tensor<float> network_input;
};

inline AdaptedBatch adapt_batch(const std::vector<const Image<double>*>& images,
                                const std::vector<AdjustParams>& params) {
    AdaptedBatch b;
    for (std::size_t n = 0; n < images.size(); ++n) b.jets.push_back(ops_grad_alpha(*images[n], params[n]));
    std::vector<const Image<double>*> values;
    for (const auto& j : b.jets) values.push_back(&j.value);
    b.network_input = to_batch<float>(values);
    return b;
}

/// Chain rule from ∂L/∂(network input) to ∂L/∂α_k per sample; network input
/// is 2·x - 1 of the adapted [0,1] image.
inline std::array<Tensor<float>, 3> alpha_gradients(const AdaptedBatch& b, const Tensor<float>& input_grad) {
    const std::size_t n_batch = b.jets.size();
    std::array<Tensor<float>, 3> out;
    for (auto& t : out) t = Tensor<float>(Shape{n_batch, 1});
    for (std::size_t n = 0; n < n_batch; ++n) {
        const ImageJet<double>& jet = b.jets[n];
        const std::size_t plane = jet.value.pixels();
        const float* gin = input_grad.data() + n * 3 * plane;
        for (std::size_t k = 0; k < 3; ++k) {
            double acc = 0;
            for (std::size_t p = 0; p < plane; ++p)
                for (std::size_t c = 0; c < 3; ++c) acc += 2.0 * gin[c * plane + p] * jet.tangents[k][3 * p + c];
            out[k][n] = static_cast<float>(acc);
        }
    }
    return out;
}

/// Generator objective on the discriminator logits (always minimized).
inline Var generator_objective(Graph<float>& g, Var logits, GeneratorLoss kind) {
    const std::size_t n = g.value(logits).size();
    if (kind == GeneratorLoss::non_saturating) return bce_with_logits(g, logits, Tensor<float>(Shape{n, 1}, 1.0f));
    return scale(g, bce_with_logits(g, logits, Tensor<float>(Shape{n, 1}, 0.0f)), -1.0f);
}

}  // namespace detail

/// Stage 2: generator against the pre-trained discriminator. `real` is only
/// read when freeze_d is false (the discriminator then keeps training on
/// real vs adapted images).
inline Stage2Result train_stage2(const std::vector<Image<double>>& synthetic, const Discriminator<float>& d,
                                 const TrainConfig& cfg, const std::vector<Image<double>>* real = nullptr) {
    cfg.validate();
    if (synthetic.empty()) throw Error(ErrorKind::invalid_input, "stage 2 needs a non-empty synthetic set");
    if (!cfg.freeze_d && (!real || real->empty()))
        throw Error(ErrorKind::usage, "non-fixed discriminator needs the real set");
    const auto start = std::chrono::steady_clock::now();
    Stage2Result r{Generator<float>(cfg.g_spec), Adam<float>(cfg.adam), d, {}, 0};
    r.g.initialize(cfg.seed);
    r.log.label = stage2_label(cfg.freeze_d);
    auto g_params = r.g.parameter_ptrs();
    auto d_params = r.d.net().parameter_ptrs();
    const auto d_frozen = detail::snapshot(d_params);
    Adam<float> d_opt(cfg.adam);
    const Split split = make_split(synthetic.size(), cfg.holdout_fraction, cfg.seed);
    const Split real_split = real ? make_split(real->size(), cfg.holdout_fraction, cfg.seed) : Split{};

    auto evaluate = [&](std::size_t it) {
        if (split.holdout.empty()) return;
        std::vector<const Image<double>*> imgs;
        for (std::size_t i : split.holdout) imgs.push_back(&synthetic[i]);
        const std::vector<AdjustParams> alpha = r.g.predict(imgs);
        std::vector<Image<double>> adapted;
        for (std::size_t n = 0; n < imgs.size(); ++n) adapted.push_back(ops_compose(*imgs[n], alpha[n]));
        const auto scores = r.d.score(adapted);
        const double loss = cfg.g_loss == GeneratorLoss::non_saturating ? detail::mean_bce(scores, 1.0)
                                                                         : -detail::mean_bce(scores, 0.0);
        const double mean_score = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
        r.log.append({it, "stage2", "test", std::nan(""), loss, mean_score});
    };

    evaluate(0);
    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        Rng rng = make_stream(cfg.seed, streams::stage2, it);
        std::vector<const Image<double>*> imgs;
        for (std::size_t i = 0; i < cfg.batch; ++i) imgs.push_back(&synthetic[detail::pick(rng, split.train)]);
        const auto before = detail::snapshot(g_params);
        auto diverged = [&](const std::string& why) {
            detail::restore(g_params, before);
            return TrainingDiverged(why, make_checkpoint(r.g, static_cast<Adam<float>*>(nullptr), it - 1, cfg.seed,
                                                         r.log.label));
        };

        // Generator forward: α per image.
        r.g.zero_grad();
        Graph<float> gg;
        auto gout = r.g.forward(gg, gg.constant(to_batch<float>(imgs)), true);
        std::vector<AdjustParams> alpha(imgs.size());
        for (std::size_t n = 0; n < imgs.size(); ++n)
            alpha[n] = {gg.value(gout.alpha[0])[n], gg.value(gout.alpha[1])[n], gg.value(gout.alpha[2])[n]};

        // Adapted images through ops, scored by D with D's weights held constant.
        detail::AdaptedBatch adapted = detail::adapt_batch(imgs, alpha);
        // noise is independent of α, so the jets still give the exact α-derivative
        detail::add_dequantization(adapted.network_input, cfg.dequantize, cfg.seed, it, 1);
        Graph<float> gd;
        Var x = gd.variable(adapted.network_input);
        auto dout = r.d.forward(gd, x, false);
        Var loss = detail::generator_objective(gd, dout.pre_activation, cfg.g_loss);
        const double lv = gd.value(loss)[0];
        if (!std::isfinite(lv)) throw diverged("stage 2 loss is not finite at iteration " + std::to_string(it));
        gd.backward(loss);
        const auto alpha_grad = detail::alpha_gradients(adapted, gd.grad(x));

        std::vector<std::pair<Var, Tensor<float>>> seeds;
        for (std::size_t k = 0; k < 3; ++k) seeds.emplace_back(gout.alpha[k], alpha_grad[k]);
        gg.backward(seeds);
        try {
            r.optimizer.step(g_params);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::divergence) throw;
            throw diverged(e.what());
        }

        double d_loss = std::nan("");
        if (!cfg.freeze_d) {
            // Ablation: the discriminator keeps training on real (1) vs adapted synthetic (0).
            const std::size_t n_real = (cfg.batch + 1) / 2, n_fake = cfg.batch - n_real;
            std::vector<const Image<double>*> mixed;
            for (std::size_t i = 0; i < n_real; ++i) mixed.push_back(&(*real)[detail::pick(rng, real_split.train)]);
            for (std::size_t i = 0; i < n_fake; ++i) mixed.push_back(&adapted.jets[i].value);
            Tensor<float> labels(Shape{cfg.batch, 1});
            for (std::size_t i = 0; i < n_real; ++i) labels[i] = 1.0f;
            r.d.net().zero_grad();
            Graph<float> gd2;
            Tensor<float> input = to_batch<float>(mixed);
            detail::add_dequantization(input, cfg.dequantize, cfg.seed, it, 2);
            auto o = r.d.forward(gd2, gd2.constant(std::move(input)), true);
            Var dl = bce_with_logits(gd2, o.pre_activation, labels);
            d_loss = gd2.value(dl)[0];
            if (!std::isfinite(d_loss)) throw diverged("discriminator loss is not finite at iteration " + std::to_string(it));
            gd2.backward(dl);
            d_opt.step(d_params);
        }

        r.iterations = it;
        r.log.append({it, "stage2", "train", d_loss, lv, std::nan("")});
        if (it % cfg.eval_every == 0 || it == cfg.iterations) {
            evaluate(it);
            detail::progress(cfg, "stage2", it, lv);
        }
    }
    if (cfg.freeze_d)
        for (std::size_t k = 0; k < d_params.size(); ++k)
            if (!(d_params[k]->value == d_frozen[k]))
                throw Error(ErrorKind::divergence, "frozen discriminator weights changed during stage 2");
    r.log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

struct AlphaRecord {
    std::string id;
    AdjustParams params;
};

inline std::string format_alpha_records(const std::vector<AlphaRecord>& records) {
    std::ostringstream out;
    out << "# id\talpha_b\talpha_s\talpha_c\n" << std::setprecision(17);
    for (const auto& r : records)
        out << r.id << '\t' << r.params.brightness << '\t' << r.params.saturation << '\t' << r.params.contrast << '\n';
    return out.str();
}

inline std::vector<AlphaRecord> read_alpha_records(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
    std::vector<AlphaRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream f(line);
        AlphaRecord r;
        std::string b, s, c;
        if (!std::getline(f, r.id, '\t') || !std::getline(f, b, '\t') || !std::getline(f, s, '\t') || !std::getline(f, c))
            throw Error(ErrorKind::invalid_input, "malformed alpha record: " + line);
        r.params = {std::stod(b), std::stod(s), std::stod(c)};
        out.push_back(std::move(r));
    }
    return out;
}

struct AdaptResult {
    DatasetManifest manifest;
    std::vector<AlphaRecord> alphas;
};

/// Maps each synthetic image through ops with its predicted α. The
/// generator sees the image resized to its input resolution; ops act on the
/// full-resolution image. Masks are byte-copied; images without masks are fine.
inline AdaptResult adapt_dataset(const DatasetManifest& synthetic, Generator<float>& g, const fs::path& out_dir) {
    if (synthetic.empty()) throw Error(ErrorKind::invalid_input, "empty synthetic manifest");
    fs::create_directories(out_dir);
    AdaptResult r;
    r.manifest.root = out_dir;
    r.manifest.split = synthetic.split + "-adapted";
    for (const auto& e : synthetic.entries) {
        const Image<double> full = load_image(e.image);
        const Image<double> small = resize_bilinear(full, g.spec().height, g.spec().width);
        const AdjustParams alpha = g.predict(std::vector<const Image<double>*>{&small})[0];
        ManifestEntry out{e.id, out_dir / (e.id + ".png"), std::nullopt};
        save_image(ops_compose(full, alpha), out.image);
        if (e.mask) {
            out.mask = out_dir / (e.id + mask_suffix + ".png");
            copy_mask(*e.mask, *out.mask);
        }
        r.manifest.entries.push_back(std::move(out));
        r.alphas.push_back({e.id, alpha});
    }
    write_manifest(r.manifest, out_dir / "manifest.txt");
    write_bytes(out_dir / "alphas.txt", format_alpha_records(r.alphas));
    return r;
}

}  // namespace colorspace
