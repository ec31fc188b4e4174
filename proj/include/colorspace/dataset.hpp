#pragma once

// On-disk datasets: 8-bit PNG images and masks, plus line-oriented manifests
// of the form "id<TAB>image_path<TAB>mask_path|-".

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fnmatch.h>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "colorspace/color_ops.hpp"
#include "colorspace/error.hpp"

namespace colorspace {

namespace fs = std::filesystem;

struct MaskImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> labels;

    bool binary() const {
        return std::all_of(labels.begin(), labels.end(), [](std::uint8_t v) { return v <= 1; });
    }
};

namespace detail {

struct PngReader {
    png_image image{};
    PngReader() {
        image.version = PNG_IMAGE_VERSION;
    }
    ~PngReader() { png_image_free(&image); }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;
};

inline std::vector<std::uint8_t> read_png(const fs::path& path, std::uint32_t format, std::size_t& height,
                                          std::size_t& width) {
    PngReader reader;
    if (!png_image_begin_read_from_file(&reader.image, path.c_str()))
        throw Error(ErrorKind::decode, path.string() + ": " + reader.image.message);
    reader.image.format = format;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(reader.image));
    if (!png_image_finish_read(&reader.image, nullptr, buffer.data(), 0, nullptr))
        throw Error(ErrorKind::decode, path.string() + ": " + reader.image.message);
    height = reader.image.height;
    width = reader.image.width;
    if (height == 0 || width == 0) throw Error(ErrorKind::decode, path.string() + ": empty image");
    return buffer;
}

inline void write_png(const fs::path& path, std::uint32_t format, std::size_t height, std::size_t width,
                      const std::vector<std::uint8_t>& bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorKind::io, path.string() + ": " + msg);
    }
    png_image_free(&image);
}

}  // namespace detail

/// Decodes an 8-bit PNG to [0,1] via v/255; grayscale is promoted to RGB.
inline Image<double> load_image(const fs::path& path) {
    std::size_t h = 0, w = 0;
    const auto bytes = detail::read_png(path, PNG_FORMAT_RGB, h, w);
    Image<double> img(h, w);
    for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
    return img;
}

/// 8-bit level of a [0,1] value: round half away from zero after clamping.
inline std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

template <class T>
void save_image(const Image<T>& img, const fs::path& path) {
    std::vector<std::uint8_t> bytes(img.data.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize(static_cast<double>(img.data[i]));
    detail::write_png(path, PNG_FORMAT_RGB, img.height, img.width, bytes);
}

inline MaskImage load_mask(const fs::path& path) {
    MaskImage m;
    m.labels = detail::read_png(path, PNG_FORMAT_GRAY, m.height, m.width);
    return m;
}

inline void save_mask(const MaskImage& mask, const fs::path& path) {
    detail::write_png(path, PNG_FORMAT_GRAY, mask.height, mask.width, mask.labels);
}

/// Dimensions from the PNG header without decoding pixels.
inline std::pair<std::size_t, std::size_t> png_dimensions(const fs::path& path) {
    detail::PngReader reader;
    if (!png_image_begin_read_from_file(&reader.image, path.c_str()))
        throw Error(ErrorKind::decode, path.string() + ": " + reader.image.message);
    return {reader.image.height, reader.image.width};
}

inline std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << bytes;
    if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

/// Label masks are copied as raw bytes, never decoded and re-encoded.
inline void copy_mask(const fs::path& from, const fs::path& to) {
    fs::copy_file(from, to, fs::copy_options::overwrite_existing);
}

/// Bilinear resampling with pixel-center alignment. Identity when sizes match.
template <class T>
Image<T> resize_bilinear(const Image<T>& src, std::size_t height, std::size_t width) {
    if (src.height == height && src.width == width) return src;
    Image<T> out(height, width);
    const double sy = static_cast<double>(src.height) / static_cast<double>(height);
    const double sx = static_cast<double>(src.width) / static_cast<double>(width);
    for (std::size_t y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
        const std::size_t y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
            const std::size_t x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < 3; ++c) {
                const double top = src.at(y0, x0, c) * (1 - wx) + src.at(y0, x1, c) * wx;
                const double bottom = src.at(y1, x0, c) * (1 - wx) + src.at(y1, x1, c) * wx;
                out.at(y, x, c) = static_cast<T>(top * (1 - wy) + bottom * wy);
            }
        }
    }
    return out;
}

struct ManifestEntry {
    std::string id;
    fs::path image;
    std::optional<fs::path> mask;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
    fs::path root;
    std::string split = "all";
    std::vector<ManifestEntry> entries;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
};

struct ScanResult {
    DatasetManifest manifest;
    std::vector<std::string> warnings;
};

inline constexpr const char* mask_suffix = "_mask";

/// Lists images under `root` matching `pattern` (fnmatch glob on the file
/// name) in lexicographic order, pairing image.png with image_mask.png.
inline ScanResult scan_manifest(const fs::path& root, const std::string& pattern = "*.png") {
    if (!fs::is_directory(root)) throw Error(ErrorKind::invalid_input, root.string() + " is not a directory");
    std::set<std::string> names;
    for (const auto& item : fs::directory_iterator(root))
        if (item.is_regular_file()) names.insert(item.path().filename().string());

    ScanResult result;
    result.manifest.root = root;
    std::set<std::string> used_masks;
    const std::string suffix = mask_suffix;
    for (const std::string& name : names) {
        if (fnmatch(pattern.c_str(), name.c_str(), 0) != 0) continue;
        const fs::path p(name);
        const std::string stem = p.stem().string();
        if (stem.size() > suffix.size() && stem.ends_with(suffix)) continue;
        ManifestEntry entry{stem, root / name, std::nullopt};
        const std::string mask_name = stem + suffix + p.extension().string();
        if (names.count(mask_name)) {
            used_masks.insert(mask_name);
            try {
                if (png_dimensions(root / name) != png_dimensions(root / mask_name)) {
                    result.warnings.push_back("rejected " + name + ": mask dimensions differ from image");
                    continue;
                }
            } catch (const Error& e) {
                result.warnings.push_back("rejected " + name + ": " + e.what());
                continue;
            }
            entry.mask = root / mask_name;
        }
        result.manifest.entries.push_back(std::move(entry));
    }
    for (const std::string& name : names) {
        const std::string stem = fs::path(name).stem().string();
        if (fnmatch(pattern.c_str(), name.c_str(), 0) == 0 && stem.ends_with(suffix) && !used_masks.count(name))
            result.warnings.push_back("dangling mask " + name);
    }
    if (result.manifest.entries.empty())
        throw Error(ErrorKind::invalid_input, "no images matching '" + pattern + "' in " + root.string());
    return result;
}

inline std::string format_manifest(const DatasetManifest& m, const fs::path& base) {
    std::ostringstream out;
    out << "# split " << m.split << '\n';
    auto rel = [&](const fs::path& p) {
        const fs::path r = p.lexically_relative(base);
        return (r.empty() || r.string().starts_with("..")) ? p.string() : r.string();
    };
    for (const auto& e : m.entries)
        out << e.id << '\t' << rel(e.image) << '\t' << (e.mask ? rel(*e.mask) : std::string("-")) << '\n';
    return out.str();
}

/// Writes the manifest; paths under the manifest's directory are stored relative.
inline void write_manifest(const DatasetManifest& m, const fs::path& path) {
    write_bytes(path, format_manifest(m, path.parent_path()));
}

inline DatasetManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot read manifest " + path.string());
    DatasetManifest m;
    m.root = path.parent_path();
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.starts_with("# split ")) m.split = line.substr(8);
            continue;
        }
        std::istringstream fields(line);
        std::string id, image, mask;
        if (!std::getline(fields, id, '\t') || !std::getline(fields, image, '\t') || !std::getline(fields, mask))
            throw Error(ErrorKind::invalid_input, path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
        if (!ids.insert(id).second)
            throw Error(ErrorKind::invalid_input, path.string() + ": duplicate id " + id);
        auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : m.root / p; };
        ManifestEntry e{id, resolve(image), std::nullopt};
        if (mask != "-") e.mask = resolve(mask);
        m.entries.push_back(std::move(e));
    }
    return m;
}

/// A directory is scanned for *.png; anything else is read as a manifest file.
inline DatasetManifest open_dataset(const fs::path& path) {
    if (fs::is_directory(path)) return scan_manifest(path).manifest;
    if (!fs::exists(path)) throw Error(ErrorKind::invalid_input, path.string() + " does not exist");
    DatasetManifest m = read_manifest(path);
    if (m.empty()) throw Error(ErrorKind::invalid_input, path.string() + " lists no images");
    return m;
}

/// [0,1] image → network input in [-1,1].
template <class T>
T to_network(T v) {
    return v * T(2) - T(1);
}

template <class T>
T from_network(T v) {
    return (v + T(1)) / T(2);
}

}  // namespace colorspace
