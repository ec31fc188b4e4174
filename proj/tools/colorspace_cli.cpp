// colorspace: augment | train-d | train-g | adapt | swd | replay
//
// Exit codes: 0 success, 2 usage or configuration, 3 data, 4 numeric divergence.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "colorspace/commands.hpp"

namespace cs = colorspace;

namespace {

struct Overrides {
    std::string config_file;
    std::vector<std::string> sets;
    std::optional<double> p;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> multiplier, iterations, batch;
    bool no_freeze_d = false;
    bool quiet = false;

    cs::RunConfig resolve() const {
        cs::RunConfig cfg;
        if (!config_file.empty()) cfg.merge_file(config_file);
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw cs::Error(cs::ErrorKind::usage, "--set expects key=value, got " + kv);
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (p) cfg.p = *p;
        if (seed) cfg.seed = *seed;
        if (multiplier) cfg.multiplier = *multiplier;
        if (iterations) cfg.iterations = *iterations;
        if (batch) cfg.batch = *batch;
        if (no_freeze_d) cfg.freeze_d = false;
        if (quiet) cfg.progress = false;
        return cfg;
    }
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_file, "key = value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--set", o.sets, "configuration override key=value (repeatable)");
    cmd->add_option("--seed", o.seed, "master seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Colour-space adaptation of synthetic image datasets"};
    app.require_subcommand(1);
    Overrides o;
    std::string in, out, ckpt, real, records;
    std::optional<std::string> d_ckpt, real_opt;

    auto* augment = app.add_subcommand("augment", "write random colour variants and their parameter records");
    augment->add_option("input", in, "image directory or manifest")->required();
    augment->add_option("out", out, "output directory")->required();
    augment->add_option("--p", o.p, "probability mass of the sampler inside [-1,1] (default 0.99)");
    augment->add_option("--multiplier", o.multiplier, "variants per image (default 1)");
    add_common(augment, o);

    auto* train_d = app.add_subcommand("train-d", "stage 1: discriminator on real vs colour variants");
    train_d->add_option("real", in, "real image directory or manifest")->required();
    train_d->add_option("--out", out, "run directory")->required();
    train_d->add_option("--p", o.p, "sampler probability mass (0.9, 0.99, 0.999 in the ablation grid)");
    train_d->add_option("--iterations", o.iterations, "training iterations");
    train_d->add_option("--batch", o.batch, "batch size");
    train_d->add_flag("--quiet", o.quiet, "no progress on stderr");
    add_common(train_d, o);

    auto* train_g = app.add_subcommand("train-g", "stage 2: generator against the pre-trained discriminator");
    train_g->add_option("synthetic", in, "synthetic image directory or manifest")->required();
    train_g->add_option("--d", d_ckpt, "discriminator checkpoint from train-d");
    train_g->add_option("--out", out, "run directory")->required();
    train_g->add_option("--real", real_opt, "real set (only used with --no-freeze-d)");
    train_g->add_flag("--no-freeze-d", o.no_freeze_d, "keep training the discriminator (ablation)");
    train_g->add_option("--p", o.p, "sampler probability mass");
    train_g->add_option("--iterations", o.iterations, "training iterations");
    train_g->add_option("--batch", o.batch, "batch size");
    train_g->add_flag("--quiet", o.quiet, "no progress on stderr");
    add_common(train_g, o);

    auto* adapt = app.add_subcommand("adapt", "map a synthetic set through ops with the generator's predictions");
    adapt->add_option("synthetic", in, "synthetic image directory or manifest")->required();
    adapt->add_option("checkpoint", ckpt, "generator checkpoint")->required();
    adapt->add_option("out", out, "output directory")->required();

    auto* swd = app.add_subcommand("swd", "sliced Wasserstein distance between two image sets");
    swd->add_option("set_a", in, "first set")->required();
    swd->add_option("set_b", real, "second set")->required();
    add_common(swd, o);

    auto* replay = app.add_subcommand("replay", "re-apply recorded parameters (variants.txt or alphas.txt)");
    replay->add_option("records", records, "record file")->required();
    replay->add_option("sources", in, "source directory or manifest")->required();
    replay->add_option("out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cs::exit_code(cs::ErrorKind::usage);
    }

    try {
        if (augment->parsed()) return cs::cmd_augment(in, out, o.resolve());
        if (train_d->parsed()) return cs::cmd_train_d(in, out, o.resolve());
        if (train_g->parsed()) {
            std::optional<cs::fs::path> d, r;
            if (d_ckpt) d = *d_ckpt;
            if (real_opt) r = *real_opt;
            return cs::cmd_train_g(in, d, out, o.resolve(), r);
        }
        if (adapt->parsed()) return cs::cmd_adapt(in, ckpt, out);
        if (swd->parsed()) return cs::cmd_swd(in, real, o.resolve());
        if (replay->parsed()) return cs::cmd_replay(records, in, out);
    } catch (const cs::Error& e) {
        std::cerr << "colorspace: " << e.what() << '\n';
        return cs::exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "colorspace: " << e.what() << '\n';
        return cs::exit_code(cs::ErrorKind::io);
    }
    return cs::exit_code(cs::ErrorKind::usage);
}
