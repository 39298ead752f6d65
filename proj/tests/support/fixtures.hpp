#pragma once

// Synthetic image fixtures shared by unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "artdream/artnet/train.hpp"
#include "artdream/ndgrid/tensor.hpp"

namespace artdream::testing {

using ndgrid::Tensor;

// Grayscale sinusoid replicated over RGB plus uniform noise, values in [0, 1].
inline Tensor stripes(std::size_t side, bool horizontal, double period, double phase, double noise,
                      std::mt19937_64& rng) {
    std::uniform_real_distribution<double> jitter(-noise, noise);
    Tensor t({3, side, side});
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
            const double coord = horizontal ? static_cast<double>(y) : static_cast<double>(x);
            double v = 0.5 + 0.4 * std::sin(2.0 * std::numbers::pi * coord / period + phase) + jitter(rng);
            v = std::clamp(v, 0.0, 1.0);
            for (std::size_t c = 0; c < 3; ++c) t.at(c, y, x) = static_cast<float>(v);
        }
    }
    return t;
}

// Two-class corpus: "stripes/horizontal" vs "stripes/vertical", alternating.
inline std::vector<artnet::LabeledImage> stripe_corpus(std::size_t count, std::size_t side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> period(3.0, 8.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::vector<artnet::LabeledImage> out;
    for (std::size_t i = 0; i < count; ++i) {
        const bool horizontal = i % 2 == 0;
        out.push_back({stripes(side, horizontal, period(rng), phase(rng), 0.1, rng),
                       horizontal ? "stripes/horizontal" : "stripes/vertical"});
    }
    return out;
}

// Smooth colourful test image: blended gradients, a disc and a soft bar.
inline Tensor scene(std::size_t h, std::size_t w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double cx = u(rng) * w, cy = u(rng) * h, r = (0.2 + 0.2 * u(rng)) * std::min(h, w);
    const double base[3] = {u(rng), u(rng), u(rng)};
    const double disc[3] = {u(rng), u(rng), u(rng)};
    const double freq = 1.0 + 3.0 * u(rng);
    Tensor t({3, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double fx = static_cast<double>(x) / w, fy = static_cast<double>(y) / h;
            const bool inside = std::hypot(x - cx, y - cy) < r;
            for (std::size_t c = 0; c < 3; ++c) {
                double v = inside ? disc[c] : base[c] * (0.6 + 0.4 * fx) + 0.3 * fy * (c == 2 ? 1 : 0.2);
                v += 0.1 * std::sin(freq * 6.28 * (fx + fy) + c);
                t.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return t;
}

inline Tensor uniform_noise(std::size_t h, std::size_t w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Tensor t({3, h, w});
    for (auto& v : t.data()) v = u(rng);
    return t;
}

}  // namespace artdream::testing
