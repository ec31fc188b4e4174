#pragma once

// Discriminator (4 strided conv groups → dense → sigmoid) and generator
// (three identical 5-group encoders → dense → tanh, one per operator), plus
// the versioned checkpoint format shared by both.

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "colorspace/autodiff.hpp"
#include "colorspace/color_ops.hpp"
#include "colorspace/dataset.hpp"
#include "colorspace/error.hpp"
#include "colorspace/hash.hpp"
#include "colorspace/optim.hpp"
#include "colorspace/random.hpp"
#include "colorspace/tensor.hpp"

namespace colorspace {

enum class Activation { leaky_relu, relu };
enum class HeadKind { sigmoid, tanh };

struct ConvGroupSpec {
    std::size_t channels = 0;
    std::size_t kernel = 3;
    std::size_t stride = 2;
    std::size_t padding = 1;
    bool normalize = true;

    friend bool operator==(const ConvGroupSpec&, const ConvGroupSpec&) = default;
};

struct NetworkSpec {
    std::size_t in_channels = 3;
    std::size_t height = 64;
    std::size_t width = 64;
    std::vector<ConvGroupSpec> groups;
    Activation activation = Activation::leaky_relu;
    double slope = 0.2;
    HeadKind head = HeadKind::sigmoid;
    double norm_eps = 1e-5;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;

    /// Spatial size after every conv group; throws invalid_spec when a layer
    /// would be empty.
    std::pair<std::size_t, std::size_t> output_spatial() const {
        std::size_t h = height, w = width;
        for (const auto& gs : groups) {
            if (gs.stride < 1 || gs.kernel < 1 || gs.channels < 1)
                throw Error(ErrorKind::invalid_spec, "conv group needs stride, kernel and channels >= 1");
            if (h + 2 * gs.padding < gs.kernel || w + 2 * gs.padding < gs.kernel)
                throw Error(ErrorKind::invalid_spec, "kernel exceeds padded input at " + std::to_string(h) + "x" +
                                                         std::to_string(w));
            h = (h + 2 * gs.padding - gs.kernel) / gs.stride + 1;
            w = (w + 2 * gs.padding - gs.kernel) / gs.stride + 1;
            // normalizing a single value always yields beta: the group would carry no signal
            if (gs.normalize && h * w == 1)
                throw Error(ErrorKind::invalid_spec, "instance norm over a 1x1 map; use a larger input");
        }
        return {h, w};
    }

    std::size_t flat_features() const {
        auto [h, w] = output_spatial();
        return (groups.empty() ? in_channels : groups.back().channels) * h * w;
    }

    std::string to_string() const {
        std::ostringstream out;
        out << std::setprecision(17) << "in=" << in_channels << 'x' << height << 'x' << width
            << " act=" << (activation == Activation::leaky_relu ? "lrelu" : "relu") << ':' << slope
            << " head=" << (head == HeadKind::sigmoid ? "sigmoid" : "tanh") << " eps=" << norm_eps << " groups=";
        for (std::size_t i = 0; i < groups.size(); ++i) {
            const auto& gs = groups[i];
            out << (i ? "," : "") << gs.channels << '/' << gs.kernel << '/' << gs.stride << '/' << gs.padding << '/'
                << (gs.normalize ? 'y' : 'n');
        }
        return out.str();
    }

    static NetworkSpec parse(const std::string& text) {
        NetworkSpec s;
        std::istringstream in(text);
        std::string token;
        bool seen_groups = false;
        auto fail = [&](const std::string& why) { throw Error(ErrorKind::invalid_spec, why + " in '" + text + "'"); };
        while (in >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos) fail("bad token " + token);
            const std::string key = token.substr(0, eq), val = token.substr(eq + 1);
            if (key == "in") {
                if (std::sscanf(val.c_str(), "%zux%zux%zu", &s.in_channels, &s.height, &s.width) != 3)
                    fail("bad input shape");
            } else if (key == "act") {
                const auto colon = val.find(':');
                const std::string kind = val.substr(0, colon);
                if (kind == "lrelu") s.activation = Activation::leaky_relu;
                else if (kind == "relu") s.activation = Activation::relu;
                else fail("bad activation");
                if (colon != std::string::npos) s.slope = std::stod(val.substr(colon + 1));
            } else if (key == "head") {
                if (val == "sigmoid") s.head = HeadKind::sigmoid;
                else if (val == "tanh") s.head = HeadKind::tanh;
                else fail("bad head");
            } else if (key == "eps") {
                s.norm_eps = std::stod(val);
            } else if (key == "groups") {
                seen_groups = true;
                std::istringstream gl(val);
                std::string g;
                while (std::getline(gl, g, ',')) {
                    ConvGroupSpec gs;
                    char norm = 'y';
                    if (std::sscanf(g.c_str(), "%zu/%zu/%zu/%zu/%c", &gs.channels, &gs.kernel, &gs.stride,
                                    &gs.padding, &norm) != 5)
                        fail("bad group " + g);
                    gs.normalize = norm == 'y';
                    s.groups.push_back(gs);
                }
            } else {
                fail("unknown key " + key);
            }
        }
        if (!seen_groups) fail("missing groups");
        return s;
    }
};

/// Conv groups with a shared kernel/stride/padding. The first group carries
/// no instance norm unless `normalize_first` is set.
inline std::vector<ConvGroupSpec> conv_groups(const std::vector<std::size_t>& channels, std::size_t kernel,
                                              std::size_t stride, std::size_t padding, bool normalize_first) {
    std::vector<ConvGroupSpec> out;
    for (std::size_t i = 0; i < channels.size(); ++i)
        out.push_back({channels[i], kernel, stride, padding, i > 0 || normalize_first});
    return out;
}

inline NetworkSpec discriminator_spec(std::size_t height = 64, std::size_t width = 64,
                                     std::vector<std::size_t> channels = {64, 128, 256, 512},
                                     bool normalize_first = false) {
    NetworkSpec s;
    s.height = height;
    s.width = width;
    s.groups = conv_groups(channels, 4, 2, 1, normalize_first);
    s.activation = Activation::leaky_relu;
    s.slope = 0.2;
    s.head = HeadKind::sigmoid;
    return s;
}

inline NetworkSpec generator_spec(std::size_t height = 64, std::size_t width = 64,
                                  std::vector<std::size_t> channels = {32, 64, 128, 256, 256},
                                  bool normalize_first = false) {
    NetworkSpec s;
    s.height = height;
    s.width = width;
    s.groups = conv_groups(channels, 3, 2, 1, normalize_first);
    s.activation = Activation::relu;
    s.slope = 0;
    s.head = HeadKind::tanh;
    return s;
}

/// Stack of conv groups followed by a single-output dense head.
template <class T>
class ConvNet {
public:
    struct Output {
        Var pre_activation;  // dense output before the head nonlinearity
        Var output;
    };

    ConvNet() = default;

    explicit ConvNet(NetworkSpec spec) : spec_(std::move(spec)) {
        spec_.output_spatial();
        std::size_t in = spec_.in_channels;
        for (std::size_t i = 0; i < spec_.groups.size(); ++i) {
            const auto& gs = spec_.groups[i];
            const std::string idx = std::to_string(i);
            params_.push_back({"conv" + idx + ".weight", Tensor<T>(Shape{gs.channels, in, gs.kernel, gs.kernel}), {}});
            params_.push_back({"conv" + idx + ".bias", Tensor<T>(Shape{gs.channels}), {}});
            if (gs.normalize) {
                params_.push_back({"norm" + idx + ".gamma", Tensor<T>(Shape{gs.channels}, T(1)), {}});
                params_.push_back({"norm" + idx + ".beta", Tensor<T>(Shape{gs.channels}), {}});
            }
            in = gs.channels;
        }
        params_.push_back({"head.weight", Tensor<T>(Shape{1, spec_.flat_features()}), {}});
        params_.push_back({"head.bias", Tensor<T>(Shape{1}), {}});
        for (auto& p : params_) p.zero_grad();
    }

    /// He-normal weights, zero biases, unit gains. `zero_head` zeroes the
    /// dense head so the output starts at head(0).
    void initialize(Rng& rng, bool zero_head) {
        for (auto& p : params_) {
            if (p.name.ends_with(".weight")) {
                if (zero_head && p.name == "head.weight") {
                    p.value.fill(T(0));
                    continue;
                }
                const auto& s = p.value.shape();
                std::size_t fan_in = 1;
                for (std::size_t k = 1; k < s.size(); ++k) fan_in *= s[k];
                p.value = he_init<T>(s, fan_in, rng);
            }
        }
    }

    Output forward(Graph<T>& g, Var input, bool trainable) {
        const auto& shape = g.value(input).shape();
        if (shape.size() != 4 || shape[1] != spec_.in_channels || shape[2] != spec_.height || shape[3] != spec_.width)
            throw Error(ErrorKind::invalid_shape, "network expects N×" + std::to_string(spec_.in_channels) + "×" +
                                                      std::to_string(spec_.height) + "×" + std::to_string(spec_.width) +
                                                      ", got " + shape_string(shape));
        Var h = input;
        std::size_t k = 0;
        for (const auto& gs : spec_.groups) {
            Var w = g.parameter(params_[k++], trainable);
            Var b = g.parameter(params_[k++], trainable);
            h = conv2d(g, h, w, b, gs.stride, gs.padding);
            if (gs.normalize) {
                Var gamma = g.parameter(params_[k++], trainable);
                Var beta = g.parameter(params_[k++], trainable);
                h = instance_norm(g, h, gamma, beta, static_cast<T>(spec_.norm_eps));
            }
            h = spec_.activation == Activation::leaky_relu ? leaky_relu(g, h, static_cast<T>(spec_.slope)) : relu(g, h);
        }
        h = flatten(g, h);
        Var w = g.parameter(params_[k++], trainable);
        Var b = g.parameter(params_[k++], trainable);
        Var z = dense(g, h, w, b);
        Var out = spec_.head == HeadKind::sigmoid ? sigmoid(g, z) : tanh(g, z);
        return {z, out};
    }

    const NetworkSpec& spec() const noexcept { return spec_; }
    std::vector<Parameter<T>>& parameters() noexcept { return params_; }
    const std::vector<Parameter<T>>& parameters() const noexcept { return params_; }

    std::vector<Parameter<T>*> parameter_ptrs() {
        std::vector<Parameter<T>*> out;
        for (auto& p : params_) out.push_back(&p);
        return out;
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

private:
    NetworkSpec spec_;
    std::vector<Parameter<T>> params_;
};

/// N×3×H×W network input from [0,1] images, rescaled to [-1,1].
template <class T, class U>
Tensor<T> to_batch(const std::vector<const Image<U>*>& images) {
    if (images.empty()) throw Error(ErrorKind::invalid_input, "empty batch");
    const std::size_t h = images[0]->height, w = images[0]->width, plane = h * w;
    Tensor<T> out(Shape{images.size(), 3, h, w});
    for (std::size_t n = 0; n < images.size(); ++n) {
        const Image<U>& img = *images[n];
        if (img.height != h || img.width != w) throw Error(ErrorKind::invalid_shape, "batch images differ in size");
        T* dst = out.data() + n * 3 * plane;
        for (std::size_t p = 0; p < plane; ++p)
            for (std::size_t c = 0; c < 3; ++c) dst[c * plane + p] = static_cast<T>(to_network(img.data[3 * p + c]));
    }
    return out;
}

template <class T, class U>
Tensor<T> to_batch(const std::vector<Image<U>>& images) {
    std::vector<const Image<U>*> ptrs;
    for (const auto& im : images) ptrs.push_back(&im);
    return to_batch<T>(ptrs);
}

template <class T>
class Discriminator {
public:
    Discriminator() = default;
    explicit Discriminator(NetworkSpec spec) : net_(validated(std::move(spec))) {}

    static NetworkSpec validated(NetworkSpec spec) {
        if (spec.groups.size() != 4) throw Error(ErrorKind::invalid_spec, "discriminator needs exactly 4 conv groups");
        if (spec.activation != Activation::leaky_relu || spec.head != HeadKind::sigmoid)
            throw Error(ErrorKind::invalid_spec, "discriminator needs leaky ReLU groups and a sigmoid head");
        spec.output_spatial();
        return spec;
    }

    void initialize(std::uint64_t seed) {
        Rng rng = make_stream(seed, streams::init, 0);
        net_.initialize(rng, false);
    }

    typename ConvNet<T>::Output forward(Graph<T>& g, Var input, bool trainable) {
        return net_.forward(g, input, trainable);
    }

    /// Probability of "real" per image, in (0,1).
    template <class U>
    std::vector<double> score(const std::vector<Image<U>>& images, std::size_t batch = 32) {
        std::vector<double> out;
        for (std::size_t start = 0; start < images.size(); start += batch) {
            std::vector<const Image<U>*> chunk;
            for (std::size_t i = start; i < std::min(images.size(), start + batch); ++i) chunk.push_back(&images[i]);
            Graph<T> g;
            Var x = g.constant(to_batch<T>(chunk));
            auto o = forward(g, x, false);
            for (T v : g.value(o.output).values()) out.push_back(static_cast<double>(v));
        }
        return out;
    }

    ConvNet<T>& net() noexcept { return net_; }
    const ConvNet<T>& net() const noexcept { return net_; }
    const NetworkSpec& spec() const noexcept { return net_.spec(); }

private:
    ConvNet<T> net_;
};

template <class T>
class Generator {
public:
    static constexpr std::array<const char*, 3> component_names{"g_b", "g_s", "g_c"};

    struct Output {
        std::array<Var, 3> alpha;  // N×1 each: α_b, α_s, α_c
    };

    Generator() = default;
    explicit Generator(const NetworkSpec& spec) {
        NetworkSpec s = validated(spec);
        for (auto& c : components_) c = ConvNet<T>(s);
    }

    static NetworkSpec validated(NetworkSpec spec) {
        if (spec.groups.size() != 5) throw Error(ErrorKind::invalid_spec, "generator needs exactly 5 conv groups");
        if (spec.activation != Activation::relu || spec.head != HeadKind::tanh)
            throw Error(ErrorKind::invalid_spec, "generator needs ReLU groups and a tanh head");
        spec.output_spatial();
        return spec;
    }

    /// He init with zero dense heads: the untrained generator outputs α = 0.
    void initialize(std::uint64_t seed) {
        for (std::size_t k = 0; k < 3; ++k) {
            Rng rng = make_stream(seed, streams::init, k + 1);
            components_[k].initialize(rng, true);
        }
    }

    Output forward(Graph<T>& g, Var input, bool trainable) {
        Output o;
        for (std::size_t k = 0; k < 3; ++k) o.alpha[k] = components_[k].forward(g, input, trainable).output;
        return o;
    }

    /// Predicted parameters for each image (resized to the network input).
    template <class U>
    std::vector<AdjustParams> predict(const std::vector<const Image<U>*>& images) {
        Graph<T> g;
        Var x = g.constant(to_batch<T>(images));
        Output o = forward(g, x, false);
        std::vector<AdjustParams> out(images.size());
        for (std::size_t n = 0; n < images.size(); ++n) {
            out[n].brightness = static_cast<double>(g.value(o.alpha[0])[n]);
            out[n].saturation = static_cast<double>(g.value(o.alpha[1])[n]);
            out[n].contrast = static_cast<double>(g.value(o.alpha[2])[n]);
        }
        return out;
    }

    std::array<ConvNet<T>, 3>& components() noexcept { return components_; }
    const std::array<ConvNet<T>, 3>& components() const noexcept { return components_; }
    const NetworkSpec& spec() const noexcept { return components_[0].spec(); }

    std::vector<Parameter<T>*> parameter_ptrs() {
        std::vector<Parameter<T>*> out;
        for (auto& c : components_)
            for (auto* p : c.parameter_ptrs()) out.push_back(p);
        return out;
    }

    void zero_grad() {
        for (auto& c : components_) c.zero_grad();
    }

private:
    std::array<ConvNet<T>, 3> components_;
};

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int checkpoint_version = 1;
inline constexpr const char* checkpoint_magic = "colorspace-checkpoint";

struct Checkpoint {
    std::string role;  // "discriminator" | "generator"
    std::vector<std::pair<std::string, NetworkSpec>> networks;
    std::vector<std::pair<std::string, Tensor<float>>> tensors;
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
    std::uint64_t adam_step = 0;
    std::string label = "-";

    std::string digest() const {
        std::string text;
        for (const auto& [name, spec] : networks) text += name + ' ' + spec.to_string() + '\n';
        return hex64(fnv1a(text));
    }

    const Tensor<float>& tensor(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return t;
        throw Error(ErrorKind::version, "checkpoint lacks tensor " + name);
    }

    bool has_tensor(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return true;
        return false;
    }
};

inline std::string serialize_checkpoint(const Checkpoint& c) {
    std::ostringstream head;
    head << checkpoint_magic << ' ' << checkpoint_version << '\n';
    head << "role " << c.role << '\n';
    for (const auto& [name, spec] : c.networks) head << "network " << name << ' ' << spec.to_string() << '\n';
    head << "digest " << c.digest() << '\n';
    head << "step " << c.step << '\n' << "seed " << c.seed << '\n' << "adam_step " << c.adam_step << '\n';
    head << "label " << c.label << '\n';
    for (const auto& [name, t] : c.tensors) {
        head << "tensor " << name << ' ' << t.size() << ' ';
        for (std::size_t i = 0; i < t.rank(); ++i) head << (i ? "," : "") << t.dim(i);
        head << '\n';
    }
    head << "end\n";
    std::string out = head.str();
    for (const auto& [name, t] : c.tensors) {
        for (float v : t.values()) {
            const auto bits = std::bit_cast<std::uint32_t>(v);
            for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
        }
    }
    return out;
}

inline Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin = "checkpoint") {
    auto fail = [&](const std::string& why) -> Error { return Error(ErrorKind::version, origin + ": " + why); };
    Checkpoint c;
    std::size_t pos = 0;
    auto next_line = [&]() {
        const auto nl = bytes.find('\n', pos);
        if (nl == std::string::npos) throw fail("truncated header");
        std::string line = bytes.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };
    {
        std::istringstream first(next_line());
        std::string magic;
        int version = 0;
        first >> magic >> version;
        if (magic != checkpoint_magic) throw fail("not a checkpoint file");
        if (version != checkpoint_version)
            throw fail("format version " + std::to_string(version) + ", expected " + std::to_string(checkpoint_version));
    }
    std::string digest;
    std::vector<std::pair<std::string, Shape>> layout;
    for (;;) {
        const std::string line = next_line();
        if (line == "end") break;
        std::istringstream in(line);
        std::string key;
        in >> key;
        if (key == "role") {
            in >> c.role;
        } else if (key == "network") {
            std::string name, rest;
            in >> name;
            std::getline(in >> std::ws, rest);
            c.networks.emplace_back(name, NetworkSpec::parse(rest));
        } else if (key == "digest") {
            in >> digest;
        } else if (key == "step") {
            in >> c.step;
        } else if (key == "seed") {
            in >> c.seed;
        } else if (key == "adam_step") {
            in >> c.adam_step;
        } else if (key == "label") {
            std::getline(in >> std::ws, c.label);
        } else if (key == "tensor") {
            std::string name, dims;
            std::size_t count = 0;
            in >> name >> count >> dims;
            Shape shape;
            std::istringstream ds(dims);
            std::string d;
            while (std::getline(ds, d, ',')) shape.push_back(std::stoul(d));
            if (shape_size(shape) != count) throw fail("tensor " + name + " count/shape mismatch");
            layout.emplace_back(name, shape);
        } else {
            throw fail("unknown header key " + key);
        }
    }
    if (digest != c.digest()) throw fail("spec digest mismatch");
    for (auto& [name, shape] : layout) {
        const std::size_t n = shape_size(shape);
        if (pos + 4 * n > bytes.size()) throw fail("truncated tensor data for " + name);
        std::vector<float> values(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b)
                bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + 4 * i + b])) << (8 * b);
            values[i] = std::bit_cast<float>(bits);
        }
        pos += 4 * n;
        c.tensors.emplace_back(name, Tensor<float>(shape, std::move(values)));
    }
    if (pos != bytes.size()) throw fail("trailing bytes after tensor data");
    return c;
}

inline void save_checkpoint(const Checkpoint& c, const fs::path& path) { write_bytes(path, serialize_checkpoint(c)); }

inline Checkpoint load_checkpoint(const fs::path& path) {
    const auto raw = read_bytes(path);
    return parse_checkpoint(std::string(raw.begin(), raw.end()), path.string());
}

namespace detail {

template <class T>
void export_net(Checkpoint& c, const std::string& prefix, const ConvNet<T>& net) {
    for (const auto& p : net.parameters()) c.tensors.emplace_back(prefix + p.name, p.value.template cast<float>());
}

template <class T>
void import_net(const Checkpoint& c, const std::string& prefix, ConvNet<T>& net) {
    for (auto& p : net.parameters()) {
        const Tensor<float>& t = c.tensor(prefix + p.name);
        if (t.shape() != p.value.shape()) throw Error(ErrorKind::version, "shape mismatch for " + prefix + p.name);
        p.value = t.template cast<T>();
    }
}

template <class T>
void export_adam(Checkpoint& c, const Adam<T>& opt, const std::vector<Parameter<T>*>& params,
                 const std::vector<std::string>& names) {
    c.adam_step = opt.step_count();
    if (opt.first_moments().empty()) return;
    for (std::size_t k = 0; k < params.size(); ++k) {
        c.tensors.emplace_back("adam.m/" + names[k], opt.first_moments()[k].template cast<float>());
        c.tensors.emplace_back("adam.v/" + names[k], opt.second_moments()[k].template cast<float>());
    }
}

template <class T>
void import_adam(const Checkpoint& c, Adam<T>& opt, const std::vector<std::string>& names) {
    if (c.adam_step == 0 || names.empty() || !c.has_tensor("adam.m/" + names[0])) return;
    std::vector<Tensor<T>> m, v;
    for (const auto& n : names) {
        m.push_back(c.tensor("adam.m/" + n).template cast<T>());
        v.push_back(c.tensor("adam.v/" + n).template cast<T>());
    }
    opt.restore(c.adam_step, std::move(m), std::move(v));
}

inline void require_spec(const Checkpoint& c, const std::string& role, const std::string& name,
                         const NetworkSpec& expected) {
    if (c.role != role) throw Error(ErrorKind::version, "checkpoint role is " + c.role + ", expected " + role);
    for (const auto& [n, s] : c.networks)
        if (n == name) {
            if (!(s == expected))
                throw Error(ErrorKind::version, "checkpoint spec '" + s.to_string() + "' does not match '" +
                                                    expected.to_string() + "'");
            return;
        }
    throw Error(ErrorKind::version, "checkpoint lacks network " + name);
}

}  // namespace detail

template <class T>
std::vector<std::string> parameter_names(const Discriminator<T>& d) {
    std::vector<std::string> out;
    for (const auto& p : d.net().parameters()) out.push_back("d." + p.name);
    return out;
}

template <class T>
std::vector<std::string> parameter_names(const Generator<T>& g) {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < 3; ++k)
        for (const auto& p : g.components()[k].parameters())
            out.push_back(std::string(Generator<T>::component_names[k]) + "." + p.name);
    return out;
}

template <class T>
Checkpoint make_checkpoint(Discriminator<T>& d, const Adam<T>* opt, std::uint64_t step, std::uint64_t seed,
                           std::string label = "-") {
    Checkpoint c;
    c.role = "discriminator";
    c.networks.emplace_back("d", d.spec());
    c.step = step;
    c.seed = seed;
    c.label = std::move(label);
    detail::export_net(c, "d.", d.net());
    if (opt) detail::export_adam(c, *opt, d.net().parameter_ptrs(), parameter_names(d));
    return c;
}

template <class T>
Checkpoint make_checkpoint(Generator<T>& g, const Adam<T>* opt, std::uint64_t step, std::uint64_t seed,
                           std::string label = "-") {
    Checkpoint c;
    c.role = "generator";
    for (const char* name : Generator<T>::component_names) c.networks.emplace_back(name, g.spec());
    c.step = step;
    c.seed = seed;
    c.label = std::move(label);
    for (std::size_t k = 0; k < 3; ++k)
        detail::export_net(c, std::string(Generator<T>::component_names[k]) + ".", g.components()[k]);
    if (opt) detail::export_adam(c, *opt, g.parameter_ptrs(), parameter_names(g));
    return c;
}

/// Rebuilds a discriminator from a checkpoint; `expected`, when given, must
/// match the stored spec exactly.
template <class T>
Discriminator<T> discriminator_from(const Checkpoint& c, const NetworkSpec* expected = nullptr,
                                    Adam<T>* opt = nullptr) {
    if (c.role != "discriminator" || c.networks.size() != 1)
        throw Error(ErrorKind::version, "not a discriminator checkpoint");
    if (expected) detail::require_spec(c, "discriminator", "d", *expected);
    Discriminator<T> d(c.networks[0].second);
    detail::import_net(c, "d.", d.net());
    if (opt) detail::import_adam(c, *opt, parameter_names(d));
    return d;
}

template <class T>
Generator<T> generator_from(const Checkpoint& c, const NetworkSpec* expected = nullptr, Adam<T>* opt = nullptr) {
    if (c.role != "generator" || c.networks.size() != 3) throw Error(ErrorKind::version, "not a generator checkpoint");
    for (std::size_t k = 1; k < 3; ++k)
        if (!(c.networks[k].second == c.networks[0].second))
            throw Error(ErrorKind::version, "generator components have different specs");
    if (expected) detail::require_spec(c, "generator", "g_b", *expected);
    Generator<T> g(c.networks[0].second);
    for (std::size_t k = 0; k < 3; ++k)
        detail::import_net(c, std::string(Generator<T>::component_names[k]) + ".", g.components()[k]);
    if (opt) detail::import_adam(c, *opt, parameter_names(g));
    return g;
}

}  // namespace colorspace
