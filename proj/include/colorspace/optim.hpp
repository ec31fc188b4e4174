#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "colorspace/autodiff.hpp"
#include "colorspace/error.hpp"
#include "colorspace/random.hpp"
#include "colorspace/tensor.hpp"

namespace colorspace {

/// He-normal initialization: N(0, sqrt(2 / fan_in)).
template <class T>
Tensor<T> he_init(Shape shape, std::size_t fan_in, Rng& rng) {
    if (fan_in < 1) throw Error(ErrorKind::invalid_shape, "he_init fan_in must be >= 1");
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Tensor<T> out(std::move(shape));
    for (auto& v : out.values()) v = static_cast<T>(normal(rng));
    return out;
}

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers mirror parameter shapes and are
/// created lazily on the first step.
template <class T>
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    void step(std::span<Parameter<T>* const> params) {
        if (m_.empty()) {
            for (const Parameter<T>* p : params) {
                m_.emplace_back(p->value.shape());
                v_.emplace_back(p->value.shape());
            }
        }
        if (m_.size() != params.size()) throw Error(ErrorKind::invalid_shape, "adam parameter count changed");
        for (std::size_t k = 0; k < params.size(); ++k) {
            const Parameter<T>& p = *params[k];
            if (p.grad.shape() != p.value.shape())
                throw Error(ErrorKind::invalid_shape, "adam: gradient shape mismatch for " + p.name);
            for (std::size_t i = 0; i < p.grad.size(); ++i)
                if (!std::isfinite(p.grad[i]))
                    throw Error(ErrorKind::divergence, "adam: non-finite gradient in " + p.name + " at index " +
                                                           std::to_string(i) + " (step " + std::to_string(step_ + 1) +
                                                           ")");
        }
        ++step_;
        const double t = static_cast<double>(step_);
        const T c1 = static_cast<T>(1.0 - std::pow(config_.beta1, t));
        const T c2 = static_cast<T>(1.0 - std::pow(config_.beta2, t));
        const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
        const T lr = static_cast<T>(config_.lr), eps = static_cast<T>(config_.eps);
        for (std::size_t k = 0; k < params.size(); ++k) {
            Parameter<T>& p = *params[k];
            Tensor<T>& m = m_[k];
            Tensor<T>& v = v_[k];
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const T g = p.grad[i];
                m[i] = b1 * m[i] + (T(1) - b1) * g;
                v[i] = b2 * v[i] + (T(1) - b2) * g * g;
                const T mhat = m[i] / c1;
                const T vhat = v[i] / c2;
                p.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }

    std::uint64_t step_count() const noexcept { return step_; }
    const AdamConfig& config() const noexcept { return config_; }
    const std::vector<Tensor<T>>& first_moments() const noexcept { return m_; }
    const std::vector<Tensor<T>>& second_moments() const noexcept { return v_; }

    void restore(std::uint64_t step, std::vector<Tensor<T>> m, std::vector<Tensor<T>> v) {
        if (m.size() != v.size()) throw Error(ErrorKind::invalid_shape, "adam restore: moment count mismatch");
        step_ = step;
        m_ = std::move(m);
        v_ = std::move(v);
    }

private:
    AdamConfig config_;
    std::uint64_t step_ = 0;
    std::vector<Tensor<T>> m_;
    std::vector<Tensor<T>> v_;
};

}  // namespace colorspace
