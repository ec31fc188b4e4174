// Writes a procedural sky/cloud dataset (images, optional masks, manifest).

#include <CLI11.hpp>

#include <iostream>

#include "colorspace/toy_data.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Procedural sky/cloud fixture"};
    std::string out;
    std::uint64_t seed = 0;
    std::size_t count = 200, height = 64, width = 64;
    bool masks = false;
    std::vector<double> adjust;
    app.add_option("out", out, "output directory")->required();
    app.add_option("--seed", seed, "fixture seed");
    app.add_option("--count", count, "number of images");
    app.add_option("--height", height, "image height");
    app.add_option("--width", width, "image width");
    app.add_flag("--masks", masks, "also write *_mask.png label masks");
    app.add_option("--adjust", adjust, "apply ops with fixed alpha_b alpha_s alpha_c")->expected(3);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    try {
        colorspace::AdjustParams a;
        if (adjust.size() == 3) a = {adjust[0], adjust[1], adjust[2]};
        const auto m = colorspace::write_toy_dataset(out, seed, count, height, width, masks, a);
        std::cout << "wrote " << m.size() << " images to " << out << '\n';
    } catch (const colorspace::Error& e) {
        std::cerr << "make_toy_dataset: " << e.what() << '\n';
        return colorspace::exit_code(e.kind());
    }
    return 0;
}
