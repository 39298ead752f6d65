#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "artdream/dream/dream.hpp"

namespace artdream::testing {

using dream::GuideFeatures;
using dream::Objective;

inline GuideFeatures random_patches(std::size_t count, std::size_t length, std::mt19937_64& rng, int lo, int hi) {
    std::uniform_int_distribution<int> u(lo, hi);
    GuideFeatures g;
    g.layer = dream::LayerId(1);
    g.length = length;
    for (std::size_t i = 0; i < count; ++i) {
        g.origins.emplace_back(0, i);
        for (std::size_t k = 0; k < length; ++k) g.data.push_back(static_cast<float>(u(rng)));
    }
    return g;
}

// Straightforward double loop, kept apart from the library code.
inline std::vector<std::size_t> brute_force_match(const GuideFeatures& c, const GuideFeatures& g, Objective obj) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < c.count(); ++i) {
        double best = 0.0;
        std::size_t arg = 0;
        for (std::size_t j = 0; j < g.count(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < c.length; ++k) {
                const double a = c.patch(i)[k], b = g.patch(j)[k];
                s += obj == Objective::dot_max ? a * b : -(a - b) * (a - b);
            }
            if (j == 0 || s > best) {
                best = s;
                arg = j;
            }
        }
        out.push_back(arg);
    }
    return out;
}

}  // namespace artdream::testing
