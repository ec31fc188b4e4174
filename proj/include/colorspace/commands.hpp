#pragma once

// Command implementations behind the colorspace CLI. Each command reads and
// writes only manifests, checkpoints and plain-text records, so commands
// compose through the file system alone.

#include <iostream>
#include <optional>
#include <ostream>
#include <string>

#include "colorspace/config.hpp"
#include "colorspace/dataset.hpp"
#include "colorspace/error.hpp"
#include "colorspace/metrics.hpp"
#include "colorspace/networks.hpp"
#include "colorspace/sampler.hpp"
#include "colorspace/trainer.hpp"

namespace colorspace {

struct CommandIo {
    std::ostream& out = std::cout;
    std::ostream& err = std::cerr;
};

namespace detail {

inline void echo_config(const RunConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    write_bytes(dir / "config.txt", cfg.format());
}

}  // namespace detail

/// Writes cfg.multiplier colour variants per input image plus variant records.
inline int cmd_augment(const fs::path& input, const fs::path& out_dir, const RunConfig& cfg, CommandIo io = {}) {
    cfg.validate();
    const DatasetManifest src = open_dataset(input);
    detail::echo_config(cfg, out_dir);
    const AdversarialSet set = make_adversarial_set(src, cfg.sampler(), cfg.multiplier, out_dir);
    for (const auto& e : set.errors) io.err << "error: " << e << '\n';
    io.out << "augment: wrote " << set.manifest.size() << " variants to " << out_dir.string() << '\n';
    return set.errors.empty() ? 0 : exit_code(ErrorKind::decode);
}

/// Stage 1. Writes d.ckpt, train_d.log and config.txt into run_dir.
inline int cmd_train_d(const fs::path& real, const fs::path& run_dir, const RunConfig& cfg, CommandIo io = {}) {
    cfg.validate();
    const TrainConfig tc = cfg.train();
    const auto images = load_resized(open_dataset(real), tc.d_spec.height, tc.d_spec.width);
    detail::echo_config(cfg, run_dir);
    try {
        Stage1Result r = train_stage1(images, tc);
        save_checkpoint(r.checkpoint(cfg.seed), run_dir / "d.ckpt");
        write_bytes(run_dir / "train_d.log", r.log.format());
        io.out << "train-d: " << r.log.label << ", " << r.iterations << " iterations";
        if (r.holdout.n_real) io.out << ", held-out balanced accuracy " << r.holdout.balanced_accuracy;
        io.out << '\n';
    } catch (const TrainingDiverged& e) {
        save_checkpoint(e.last_good(), run_dir / "d_last_good.ckpt");
        throw;
    }
    return 0;
}

/// Stage 2. The discriminator checkpoint is required; the real set is only
/// needed for the non-fixed discriminator ablation.
inline int cmd_train_g(const fs::path& synthetic, const std::optional<fs::path>& d_checkpoint,
                       const fs::path& run_dir, const RunConfig& cfg, const std::optional<fs::path>& real = {},
                       CommandIo io = {}) {
    if (!d_checkpoint) throw Error(ErrorKind::usage, "train-g needs a discriminator checkpoint (run train-d first)");
    if (!cfg.freeze_d && !real) throw Error(ErrorKind::usage, "--no-freeze-d needs --real");
    cfg.validate();
    const Discriminator<float> d = discriminator_from<float>(load_checkpoint(*d_checkpoint));
    TrainConfig tc = cfg.train();
    if (d.spec().height != tc.g_spec.height || d.spec().width != tc.g_spec.width)
        throw Error(ErrorKind::usage, "generator input size must match the discriminator's " +
                                          std::to_string(d.spec().height) + "x" + std::to_string(d.spec().width));
    tc.d_spec = d.spec();
    const auto syn = load_resized(open_dataset(synthetic), tc.g_spec.height, tc.g_spec.width);
    std::vector<Image<double>> real_images;
    if (!cfg.freeze_d) real_images = load_resized(open_dataset(*real), tc.g_spec.height, tc.g_spec.width);
    detail::echo_config(cfg, run_dir);
    try {
        Stage2Result r = train_stage2(syn, d, tc, cfg.freeze_d ? nullptr : &real_images);
        save_checkpoint(r.checkpoint(cfg.seed), run_dir / "g.ckpt");
        if (!cfg.freeze_d)
            save_checkpoint(make_checkpoint(r.d, static_cast<Adam<float>*>(nullptr), r.iterations, cfg.seed,
                                            r.log.label),
                            run_dir / "d_after.ckpt");
        write_bytes(run_dir / "train_g.log", r.log.format());
        io.out << "train-g: " << r.log.label << ", " << r.iterations << " iterations\n";
    } catch (const TrainingDiverged& e) {
        save_checkpoint(e.last_good(), run_dir / "g_last_good.ckpt");
        throw;
    }
    return 0;
}

inline int cmd_adapt(const fs::path& synthetic, const fs::path& g_checkpoint, const fs::path& out_dir,
                     CommandIo io = {}) {
    Generator<float> g = generator_from<float>(load_checkpoint(g_checkpoint));
    const AdaptResult r = adapt_dataset(open_dataset(synthetic), g, out_dir);
    io.out << "adapt: wrote " << r.manifest.size() << " images to " << out_dir.string() << '\n';
    return 0;
}

inline int cmd_swd(const fs::path& set_a, const fs::path& set_b, const RunConfig& cfg, CommandIo io = {}) {
    cfg.validate();
    auto open = [](const fs::path& p) {
        try {
            return open_dataset(p);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::invalid_input) throw Error(ErrorKind::usage, e.what());
            throw;
        }
    };
    const SwdConfig sc = cfg.swd();
    io.out << format_swd_record(sc, swd(open(set_a), open(set_b), sc)) << '\n';
    return 0;
}

/// Re-applies recorded parameters. Accepts the variants.txt written by
/// augment or the alphas.txt written by adapt.
inline int cmd_replay(const fs::path& records, const fs::path& sources, const fs::path& out_dir, CommandIo io = {}) {
    const DatasetManifest src = open_dataset(sources);
    const auto bytes = read_bytes(records);
    const std::string text(bytes.begin(), bytes.end());
    DatasetManifest out;
    if (text.starts_with("# variant_id")) {
        out = replay_records(read_records(records), src, out_dir);
    } else if (text.starts_with("# id\talpha_b")) {
        fs::create_directories(out_dir);
        out.root = out_dir;
        out.split = src.split + "-replay";
        for (const AlphaRecord& r : read_alpha_records(records)) {
            auto it = std::find_if(src.entries.begin(), src.entries.end(),
                                   [&](const ManifestEntry& e) { return e.id == r.id; });
            if (it == src.entries.end()) throw Error(ErrorKind::invalid_input, "unknown source id " + r.id);
            ManifestEntry e{r.id, out_dir / (r.id + ".png"), std::nullopt};
            save_image(ops_compose(load_image(it->image), r.params), e.image);
            if (it->mask) {
                e.mask = out_dir / (r.id + mask_suffix + ".png");
                copy_mask(*it->mask, *e.mask);
            }
            out.entries.push_back(std::move(e));
        }
        write_manifest(out, out_dir / "manifest.txt");
    } else {
        throw Error(ErrorKind::invalid_input, records.string() + " is neither a variant nor an alpha record file");
    }
    io.out << "replay: wrote " << out.size() << " images to " << out_dir.string() << '\n';
    return 0;
}

}  // namespace colorspace
