#pragma once

// Closed-form brightness, saturation and contrast operators on RGB images
// in [0,1], their composition, and forward-mode derivatives with respect to
// the adjustment parameters (and, through the composition, the image).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "colorspace/error.hpp"

namespace colorspace {

/// Upper clipping margin for α_s and α_c; keeps 1/(1-α) finite.
inline constexpr double alpha_margin = 1e-3;

/// Interleaved RGB raster (row-major, 3 values per pixel).
template <class T>
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<T> data;

    Image() = default;
    Image(std::size_t h, std::size_t w, T fill = T(0)) : height(h), width(w), data(h * w * 3, fill) {
        if (h == 0 || w == 0) throw Error(ErrorKind::invalid_input, "image dimensions must be positive");
    }
    Image(std::size_t h, std::size_t w, std::vector<T> values) : height(h), width(w), data(std::move(values)) {
        if (h == 0 || w == 0) throw Error(ErrorKind::invalid_input, "image dimensions must be positive");
        if (data.size() != h * w * 3) throw Error(ErrorKind::invalid_shape, "image buffer size mismatch");
    }

    std::size_t pixels() const noexcept { return height * width; }
    std::size_t size() const noexcept { return data.size(); }
    T& at(std::size_t y, std::size_t x, std::size_t c) { return data[(y * width + x) * 3 + c]; }
    const T& at(std::size_t y, std::size_t x, std::size_t c) const { return data[(y * width + x) * 3 + c]; }

    template <class U>
    Image<U> cast() const {
        return Image<U>(height, width, std::vector<U>(data.begin(), data.end()));
    }

    friend bool operator==(const Image&, const Image&) = default;
};

/// (α_b, α_s, α_c).
struct AdjustParams {
    double brightness = 0;
    double saturation = 0;
    double contrast = 0;

    friend bool operator==(const AdjustParams&, const AdjustParams&) = default;
};

inline double clip_brightness(double a) { return std::clamp(a, -1.0, 1.0); }
inline double clip_saturation(double a) { return std::clamp(a, -1.0, 1.0 - alpha_margin); }
inline double clip_contrast(double a) { return std::clamp(a, -1.0, 1.0 - alpha_margin); }

inline AdjustParams clipped(const AdjustParams& p) {
    return {clip_brightness(p.brightness), clip_saturation(p.saturation), clip_contrast(p.contrast)};
}

/// Per-pixel lightness, chroma and saturation ratio.
template <class T>
struct PixelStats {
    T lightness;
    T delta;
    T saturation;
    std::size_t max_channel;
    std::size_t min_channel;
};

template <class T>
PixelStats<T> pixel_stats(const T* rgb) {
    std::size_t hi = 0, lo = 0;
    for (std::size_t c = 1; c < 3; ++c) {
        if (rgb[c] > rgb[hi]) hi = c;
        if (rgb[c] < rgb[lo]) lo = c;
    }
    const T lightness = (rgb[hi] + rgb[lo]) / T(2);
    const T delta = rgb[hi] - rgb[lo];
    T sat = 0;
    // Gray pixels (delta = 0, which includes L ∈ {0,1}) get S = 0.
    if (delta > 0) sat = lightness < T(0.5) ? delta / (T(2) * lightness) : delta / (T(2) - T(2) * lightness);
    return {lightness, delta, sat, hi, lo};
}

template <class T>
T image_mean(const Image<T>& x) {
    T total = 0;
    for (T v : x.data) total += v;
    return total / static_cast<T>(x.data.size());
}

namespace detail {

template <class T>
T clamp01(T v) {
    return std::clamp(v, T(0), T(1));
}

/// Per-pixel saturation gain s(x, α_s).
template <class T>
T saturation_gain(T sat, T alpha) {
    return alpha + sat >= T(1) ? T(1) / sat - T(1) : T(1) / (T(1) - alpha) - T(1);
}

}  // namespace detail

template <class T>
Image<T> op_brightness(const Image<T>& x, double alpha_b) {
    const T a = static_cast<T>(clip_brightness(alpha_b));
    if (a == T(0)) return x;
    Image<T> out = x;
    for (T& v : out.data) v = detail::clamp01(a >= 0 ? v * (T(1) - a) + a : v + v * a);
    return out;
}

template <class T>
Image<T> op_saturation(const Image<T>& x, double alpha_s) {
    const T a = static_cast<T>(clip_saturation(alpha_s));
    if (a == T(0)) return x;
    Image<T> out = x;
    for (std::size_t p = 0; p < x.pixels(); ++p) {
        const T* in = x.data.data() + 3 * p;
        const PixelStats<T> st = pixel_stats(in);
        if (st.delta <= 0) continue;
        const T s = detail::saturation_gain(st.saturation, a);
        T* o = out.data.data() + 3 * p;
        for (std::size_t c = 0; c < 3; ++c) {
            const T v = a > 0 ? in[c] + (in[c] - st.lightness) * s
                              : st.lightness + (in[c] - st.lightness) * (T(1) + s);
            o[c] = detail::clamp01(v);
        }
    }
    return out;
}

template <class T>
Image<T> op_contrast(const Image<T>& x, double alpha_c) {
    const T a = static_cast<T>(clip_contrast(alpha_c));
    if (a == T(0)) return x;
    const T mean = image_mean(x);
    Image<T> out = x;
    for (T& v : out.data) v = detail::clamp01(a >= 0 ? mean + (v - mean) / (T(1) - a) : mean + (v - mean) * (T(1) + a));
    return out;
}

/// op_b ∘ op_s ∘ op_c: contrast first, then saturation, then brightness.
template <class T>
Image<T> ops_compose(const Image<T>& x, const AdjustParams& params) {
    return op_brightness(op_saturation(op_contrast(x, params.contrast), params.saturation), params.brightness);
}

/// Image value plus three tangent images, one per adjustment parameter
/// (index 0: α_b, 1: α_s, 2: α_c).
template <class T>
struct ImageJet {
    Image<T> value;
    std::array<std::vector<T>, 3> tangents;

    explicit ImageJet(Image<T> v) : value(std::move(v)) {
        for (auto& t : tangents) t.assign(value.size(), T(0));
    }

    Image<T> tangent_image(std::size_t k) const { return Image<T>(value.height, value.width, tangents[k]); }
};

enum class AlphaSlot : std::size_t { brightness = 0, saturation = 1, contrast = 2 };

namespace detail {

/// Clamp to [0,1]; tangents pass through inside the range and vanish outside.
template <class T>
void clamp_jet(T& v, std::array<std::vector<T>, 3>& tangents, std::size_t i) {
    if (v < T(0) || v > T(1)) {
        v = clamp01(v);
        for (auto& t : tangents) t[i] = T(0);
    }
}

}  // namespace detail

template <class T>
void brightness_jvp(ImageJet<T>& jet, double alpha_b) {
    const std::size_t slot = static_cast<std::size_t>(AlphaSlot::brightness);
    const T a = static_cast<T>(clip_brightness(alpha_b));
    const T da = (alpha_b >= -1.0 && alpha_b <= 1.0) ? T(1) : T(0);
    auto& x = jet.value.data;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T v = x[i];
        T y;
        if (a >= 0) {
            y = a == T(0) ? v : v * (T(1) - a) + a;
            for (std::size_t k = 0; k < 3; ++k) jet.tangents[k][i] *= (T(1) - a);
            jet.tangents[slot][i] += da * (T(1) - v);
        } else {
            y = v + v * a;
            for (std::size_t k = 0; k < 3; ++k) jet.tangents[k][i] *= (T(1) + a);
            jet.tangents[slot][i] += da * v;
        }
        x[i] = y;
        detail::clamp_jet(x[i], jet.tangents, i);
    }
}

template <class T>
void contrast_jvp(ImageJet<T>& jet, double alpha_c) {
    const std::size_t slot = static_cast<std::size_t>(AlphaSlot::contrast);
    const T a = static_cast<T>(clip_contrast(alpha_c));
    const T da = (alpha_c >= -1.0 && alpha_c <= 1.0 - alpha_margin) ? T(1) : T(0);
    auto& x = jet.value.data;
    const std::size_t n = x.size();
    const T mean = image_mean(jet.value);
    std::array<T, 3> dmean{};
    for (std::size_t k = 0; k < 3; ++k) {
        T total = 0;
        for (T t : jet.tangents[k]) total += t;
        dmean[k] = total / static_cast<T>(n);
    }
    const T gain = a >= 0 ? T(1) / (T(1) - a) : T(1) + a;
    const T dgain = a >= 0 ? T(1) / ((T(1) - a) * (T(1) - a)) : T(1);
    for (std::size_t i = 0; i < n; ++i) {
        const T v = x[i];
        for (std::size_t k = 0; k < 3; ++k)
            jet.tangents[k][i] = dmean[k] + (jet.tangents[k][i] - dmean[k]) * gain;
        jet.tangents[slot][i] += da * (v - mean) * dgain;
        if (a != T(0)) x[i] = a >= 0 ? mean + (v - mean) / (T(1) - a) : mean + (v - mean) * (T(1) + a);
        detail::clamp_jet(x[i], jet.tangents, i);
    }
}

template <class T>
void saturation_jvp(ImageJet<T>& jet, double alpha_s) {
    const std::size_t slot = static_cast<std::size_t>(AlphaSlot::saturation);
    const T a = static_cast<T>(clip_saturation(alpha_s));
    const T da = (alpha_s >= -1.0 && alpha_s <= 1.0 - alpha_margin) ? T(1) : T(0);
    auto& x = jet.value.data;
    for (std::size_t p = 0; p < jet.value.pixels(); ++p) {
        T* in = x.data() + 3 * p;
        const PixelStats<T> st = pixel_stats(in);
        if (st.delta <= 0) continue;  // fixed point; tangents pass through
        const T L = st.lightness, d = st.delta, S = st.saturation;
        const bool full = a + S >= T(1);
        const T s = detail::saturation_gain(S, a);
        const std::array<T, 3> v{in[0], in[1], in[2]};
        for (std::size_t k = 0; k < 3; ++k) {
            auto& t = jet.tangents[k];
            const T dL = (t[3 * p + st.max_channel] + t[3 * p + st.min_channel]) / T(2);
            const T dd = t[3 * p + st.max_channel] - t[3 * p + st.min_channel];
            T ds;
            if (full) {
                const T dS = L < T(0.5) ? (dd * L - d * dL) / (T(2) * L * L)
                                        : (dd * (T(1) - L) + d * dL) / (T(2) * (T(1) - L) * (T(1) - L));
                ds = -dS / (S * S);
            } else {
                ds = k == slot ? da / ((T(1) - a) * (T(1) - a)) : T(0);
            }
            for (std::size_t c = 0; c < 3; ++c)
                t[3 * p + c] = dL + (t[3 * p + c] - dL) * (T(1) + s) + (v[c] - L) * ds;
        }
        if (a != T(0)) {
            for (std::size_t c = 0; c < 3; ++c)
                in[c] = a > 0 ? v[c] + (v[c] - L) * s : L + (v[c] - L) * (T(1) + s);
        }
        for (std::size_t c = 0; c < 3; ++c) detail::clamp_jet(in[c], jet.tangents, 3 * p + c);
    }
}

/// ops_compose together with per-pixel derivatives of the output with respect
/// to (α_b, α_s, α_c), including the dependence of downstream operators on
/// upstream outputs. `value` is bitwise equal to ops_compose(x, params).
template <class T>
ImageJet<T> ops_grad_alpha(const Image<T>& x, const AdjustParams& params) {
    ImageJet<T> jet(x);
    contrast_jvp(jet, params.contrast);
    saturation_jvp(jet, params.saturation);
    brightness_jvp(jet, params.brightness);
    return jet;
}

/// ∂op_b(x, α_b)/∂α_b per value.
template <class T>
Image<T> op_brightness_grad(const Image<T>& x, double alpha_b) {
    ImageJet<T> jet(x);
    brightness_jvp(jet, alpha_b);
    return jet.tangent_image(static_cast<std::size_t>(AlphaSlot::brightness));
}

template <class T>
Image<T> op_saturation_grad(const Image<T>& x, double alpha_s) {
    ImageJet<T> jet(x);
    saturation_jvp(jet, alpha_s);
    return jet.tangent_image(static_cast<std::size_t>(AlphaSlot::saturation));
}

template <class T>
Image<T> op_contrast_grad(const Image<T>& x, double alpha_c) {
    ImageJet<T> jet(x);
    contrast_jvp(jet, alpha_c);
    return jet.tangent_image(static_cast<std::size_t>(AlphaSlot::contrast));
}

}  // namespace colorspace
